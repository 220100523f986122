#pragma once
// Autocomplete quality metrics. Word comparison is case-sensitive exact
// string equality; logs are natural base; probabilities clamp at 1e-9.
// EM@Overall weights length n by n (declared in every summary output).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ac/array.hpp"

namespace ac {

// 1 iff the prediction has at least n words and the first n equal the first
// n ground-truth words.
int exact_match_at_n(const std::vector<std::string>& pred,
                     const std::vector<std::string>& truth, int n);

// Fraction of matching characters within the first n words: positionwise
// matches against each truth word, denominator = total truth characters of
// the first n words. Missing predicted words contribute no matches.
double partial_match_at_n(const std::vector<std::string>& pred,
                          const std::vector<std::string>& truth, int n);

struct EvalRecord {
    std::string prompt_id;
    double context_percent = 0.0;
    double oov_score = 0.0;
    std::map<int, int> em_at;        // n -> 0/1
    std::map<int, double> pm_at;     // n -> [0,1]
    std::vector<std::string> predicted_words;
    std::vector<std::string> truth_words;
    double nll_nats = 0.0;           // teacher-forced continuation NLL
    std::int64_t nll_tokens = 0;
};

EvalRecord score_prediction(const std::vector<std::string>& pred,
                            const std::vector<std::string>& truth, int k);

struct MetricSummary {
    double em_overall = 0.0;  // percent
    double pm_overall = 0.0;  // percent
    std::map<int, double> em_at_n;  // percent
    std::map<int, double> pm_at_n;  // percent
    double nll_per_token = 0.0;
    double perplexity = 1.0;
    std::int64_t n_prompts = 0;
    int k = 3;
    std::string weighting = "weight(n) = n";

    nlohmann::json to_json() const;
};

// Weighted average with weight n over n = 1..k. Throws on an empty set.
double em_overall(const std::vector<EvalRecord>& records, int k = 3);
double pm_overall(const std::vector<EvalRecord>& records, int k = 3);
MetricSummary summarize(const std::vector<EvalRecord>& records, int k = 3);

// Mean negative log likelihood of target ids under probability rows, and its
// exponential.
std::pair<double, double> nll_and_perplexity(const ArrayF& probs,
                                             const std::vector<std::int32_t>& targets);

// Character-level NLL converted to a per-word perplexity.
double char_ppl_to_word_ppl(double total_char_nll_nats, std::int64_t n_words);

// The perplexity-vs-exact-match illustration table: thirteen two-way
// distributions against ground truth index 1, plus the four analytic one-hot
// and uniform cases. Values are produced by the metric implementations.
struct TheoryRow {
    std::string label;
    std::vector<double> prediction;
    int exact_match;
    double nll;
};
std::vector<TheoryRow> em_ppl_theory_table();
void print_theory_table(std::ostream& os);

void write_records_csv(std::ostream& os, const std::vector<EvalRecord>& records, int k);

}  // namespace ac
