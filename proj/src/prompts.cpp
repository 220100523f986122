#include "ac/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ac {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool is_heading(const std::string& trimmed) {
    return trimmed.size() >= 2 && trimmed.front() == '=' && trimmed.back() == '=';
}

}  // namespace

std::vector<std::string> split_paragraphs(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    std::istringstream in(text);
    std::string line;
    auto flush = [&] {
        if (!trim(current).empty()) out.push_back(current);
        current.clear();
    };
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || is_heading(t)) {
            flush();
            continue;
        }
        if (!current.empty()) current += ' ';
        current += t;
    }
    flush();
    return out;
}

std::vector<PromptExample> make_prompts(const std::string& corpus_text, double context_percent,
                                        int k_words, const Vocabulary& vocab) {
    if (!(context_percent > 0.0 && context_percent < 1.0))
        throw std::invalid_argument("make_prompts: context_percent must be in (0,1)");
    if (k_words < 1) throw std::invalid_argument("make_prompts: k_words must be >= 1");

    std::vector<PromptExample> out;
    const std::vector<std::string> paras = split_paragraphs(corpus_text);
    const std::size_t min_words = std::max<std::size_t>(5, static_cast<std::size_t>(k_words) + 1);
    for (std::size_t pi = 0; pi < paras.size(); ++pi) {
        const std::vector<std::string> words = split_words(paras[pi]);
        if (words.size() < min_words) continue;
        const std::size_t n_prompt = static_cast<std::size_t>(
            std::ceil(context_percent * static_cast<double>(words.size())));
        if (n_prompt < 1 || n_prompt + static_cast<std::size_t>(k_words) > words.size())
            continue;  // not enough room for the ground truth

        PromptExample ex;
        ex.source_id = "p" + std::to_string(pi);
        ex.context_percent = context_percent;
        std::string prompt;
        for (std::size_t i = 0; i < n_prompt; ++i) {
            if (i) prompt += ' ';
            prompt += words[i];
        }
        ex.prompt_text = std::move(prompt);
        ex.prompt_tokens = vocab.encode(ex.prompt_text);
        ex.ground_truth_words.assign(words.begin() + static_cast<std::ptrdiff_t>(n_prompt),
                                     words.begin() +
                                         static_cast<std::ptrdiff_t>(n_prompt + k_words));
        if (ex.prompt_tokens.empty()) continue;
        out.push_back(std::move(ex));
    }
    return out;
}

void write_prompts_tsv(std::ostream& os, const std::vector<PromptExample>& prompts) {
    for (const auto& p : prompts) {
        std::string truth;
        for (std::size_t i = 0; i < p.ground_truth_words.size(); ++i) {
            if (i) truth += ' ';
            truth += p.ground_truth_words[i];
        }
        os << p.source_id << '\t' << p.context_percent << '\t' << p.prompt_text << '\t' << truth
           << '\n';
    }
}

}  // namespace ac
