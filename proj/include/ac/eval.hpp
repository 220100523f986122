#pragma once
// Runs a prompt set through a frozen model: decodes a suggestion per prompt,
// scores EM/PM, and measures teacher-forced continuation NLL. Prompts are
// independent, so evaluation parallelizes across a thread pool; record order
// and results are independent of the thread count.

#include <cstdint>
#include <string>
#include <vector>

#include "ac/decoder.hpp"
#include "ac/metrics.hpp"
#include "ac/model.hpp"
#include "ac/ngram.hpp"
#include "ac/prompts.hpp"

namespace ac {

struct EvalOptions {
    int k_words = 3;
    bool beam = false;      // greedy is the default decoder
    int beam_size = 5;
    int threads = 1;
    std::int64_t max_tokens = -1;  // -1: granularity default
};

std::vector<EvalRecord> evaluate_prompts(const DecoderModel& model, const Vocabulary& vocab,
                                         const std::vector<PromptExample>& prompts,
                                         const EvalOptions& opts);

// Fills PromptExample::oov_score from a training-text n-gram index.
void score_prompt_oov(std::vector<PromptExample>& prompts, const NgramIndex& train_index,
                      int max_n = 3);

}  // namespace ac
