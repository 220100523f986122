#pragma once
// Word n-gram statistics: the share of unique test n-grams absent from a
// training text, and per-prompt out-of-vocabulary scores used to rank
// prompts by how far they stray from the training distribution.

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace ac {

class NgramIndex {
public:
    NgramIndex() = default;
    NgramIndex(const std::string& text, int max_n);

    int max_n() const { return max_n_; }
    bool contains(const std::string& key, int n) const;
    static std::string key_of(const std::vector<std::string>& words, std::size_t start, int n);

private:
    int max_n_ = 0;
    std::vector<std::unordered_set<std::string>> sets_;  // sets_[n-1]
};

struct OovReport {
    // n -> percentage of unique test n-grams absent from train; n missing
    // when the test text has fewer than n words.
    std::map<int, double> per_n;
    std::map<int, std::pair<std::int64_t, std::int64_t>> counts;  // n -> (oov, unique)
};

OovReport oov_ngram_report(const std::string& train_text, const std::string& test_text,
                           int max_n = 3);

// Fraction of the prompt's word n-gram occurrences (n = 1..max_n, pooled with
// equal weight per occurrence) absent from the index. Empty prompt -> 0.
double oov_prompt_score(const std::vector<std::string>& prompt_words, const NgramIndex& index,
                        int max_n = 3);

}  // namespace ac
