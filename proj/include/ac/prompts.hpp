#pragma once
// Prompt / ground-truth pairs cut from corpus paragraphs: the prompt is the
// first ceil(context_percent * word_count) words, the ground truth the next
// k_words. Prompt length is measured in words for both granularities so
// character and word models see identical prompts.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ac/vocab.hpp"

namespace ac {

struct PromptExample {
    std::string source_id;
    double context_percent = 0.0;
    std::string prompt_text;
    std::vector<int> prompt_tokens;
    std::vector<std::string> ground_truth_words;
    double oov_score = 0.0;  // filled by oov_prompt_score when requested
};

// Maximal runs of non-empty lines; heading lines (trimmed text starting and
// ending with '=') terminate a paragraph and are dropped.
std::vector<std::string> split_paragraphs(const std::string& text);

std::vector<PromptExample> make_prompts(const std::string& corpus_text, double context_percent,
                                        int k_words, const Vocabulary& vocab);

// One record per line: source_id, context_percent, prompt text, truth text,
// tab separated.
void write_prompts_tsv(std::ostream& os, const std::vector<PromptExample>& prompts);

}  // namespace ac
