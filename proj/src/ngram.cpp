#include "ac/ngram.hpp"

#include <stdexcept>

#include "ac/vocab.hpp"

namespace ac {

NgramIndex::NgramIndex(const std::string& text, int max_n) : max_n_(max_n) {
    if (max_n < 1) throw std::invalid_argument("NgramIndex: max_n must be >= 1");
    sets_.resize(static_cast<std::size_t>(max_n));
    const std::vector<std::string> words = split_words(text);
    for (int n = 1; n <= max_n; ++n) {
        if (words.size() < static_cast<std::size_t>(n)) break;
        auto& set = sets_[static_cast<std::size_t>(n - 1)];
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i)
            set.insert(key_of(words, i, n));
    }
}

std::string NgramIndex::key_of(const std::vector<std::string>& words, std::size_t start, int n) {
    std::string key;
    for (int j = 0; j < n; ++j) {
        if (j) key += '\x1f';  // unit separator; cannot occur inside a word
        key += words[start + static_cast<std::size_t>(j)];
    }
    return key;
}

bool NgramIndex::contains(const std::string& key, int n) const {
    if (n < 1 || n > max_n_) return false;
    return sets_[static_cast<std::size_t>(n - 1)].count(key) > 0;
}

OovReport oov_ngram_report(const std::string& train_text, const std::string& test_text,
                           int max_n) {
    if (train_text.empty() || test_text.empty())
        throw std::invalid_argument("oov_ngram_report: texts must be nonempty");
    const NgramIndex train(train_text, max_n);
    const std::vector<std::string> test_words = split_words(test_text);

    OovReport report;
    for (int n = 1; n <= max_n; ++n) {
        if (test_words.size() < static_cast<std::size_t>(n)) continue;  // undefined, absent
        std::unordered_set<std::string> unique;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= test_words.size(); ++i)
            unique.insert(NgramIndex::key_of(test_words, i, n));
        std::int64_t oov = 0;
        for (const auto& key : unique)
            if (!train.contains(key, n)) ++oov;
        const std::int64_t denom = static_cast<std::int64_t>(unique.size());
        report.counts[n] = {oov, denom};
        report.per_n[n] = 100.0 * static_cast<double>(oov) / static_cast<double>(denom);
    }
    return report;
}

double oov_prompt_score(const std::vector<std::string>& prompt_words, const NgramIndex& index,
                        int max_n) {
    std::int64_t total = 0, absent = 0;
    for (int n = 1; n <= max_n; ++n) {
        if (prompt_words.size() < static_cast<std::size_t>(n)) break;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= prompt_words.size(); ++i) {
            ++total;
            if (!index.contains(NgramIndex::key_of(prompt_words, i, n), n)) ++absent;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(absent) / static_cast<double>(total);
}

}  // namespace ac
