#include "ac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace ac {

namespace {
constexpr double kClamp = 1e-9;
}

int exact_match_at_n(const std::vector<std::string>& pred,
                     const std::vector<std::string>& truth, int n) {
    if (n < 1) throw std::invalid_argument("exact_match_at_n: n must be >= 1");
    if (static_cast<int>(pred.size()) < n || static_cast<int>(truth.size()) < n) return 0;
    for (int i = 0; i < n; ++i)
        if (pred[static_cast<std::size_t>(i)] != truth[static_cast<std::size_t>(i)]) return 0;
    return 1;
}

double partial_match_at_n(const std::vector<std::string>& pred,
                          const std::vector<std::string>& truth, int n) {
    if (n < 1) throw std::invalid_argument("partial_match_at_n: n must be >= 1");
    std::int64_t matched = 0, denom = 0;
    const int limit = std::min(n, static_cast<int>(truth.size()));
    for (int i = 0; i < limit; ++i) {
        const std::string& t = truth[static_cast<std::size_t>(i)];
        denom += static_cast<std::int64_t>(t.size());
        if (i >= static_cast<int>(pred.size())) continue;
        const std::string& p = pred[static_cast<std::size_t>(i)];
        const std::size_t m = std::min(p.size(), t.size());
        for (std::size_t c = 0; c < m; ++c)
            if (p[c] == t[c]) ++matched;
    }
    if (denom == 0) return 0.0;
    return static_cast<double>(matched) / static_cast<double>(denom);
}

EvalRecord score_prediction(const std::vector<std::string>& pred,
                            const std::vector<std::string>& truth, int k) {
    EvalRecord r;
    r.predicted_words = pred;
    r.truth_words = truth;
    for (int n = 1; n <= k; ++n) {
        r.em_at[n] = exact_match_at_n(pred, truth, n);
        r.pm_at[n] = partial_match_at_n(pred, truth, n);
    }
    return r;
}

namespace {

double overall(const std::vector<EvalRecord>& records, int k, bool em) {
    if (records.empty()) throw std::invalid_argument("overall metric: empty record set");
    double num = 0.0, den = 0.0;
    for (int n = 1; n <= k; ++n) {
        double mean = 0.0;
        for (const auto& r : records) {
            if (em) {
                auto it = r.em_at.find(n);
                if (it == r.em_at.end())
                    throw std::invalid_argument("overall metric: record missing em_at[" +
                                                std::to_string(n) + "]");
                mean += it->second;
            } else {
                auto it = r.pm_at.find(n);
                if (it == r.pm_at.end())
                    throw std::invalid_argument("overall metric: record missing pm_at[" +
                                                std::to_string(n) + "]");
                mean += it->second;
            }
        }
        mean /= static_cast<double>(records.size());
        num += static_cast<double>(n) * mean;
        den += static_cast<double>(n);
    }
    return 100.0 * num / den;
}

}  // namespace

double em_overall(const std::vector<EvalRecord>& records, int k) {
    return overall(records, k, true);
}

double pm_overall(const std::vector<EvalRecord>& records, int k) {
    return overall(records, k, false);
}

MetricSummary summarize(const std::vector<EvalRecord>& records, int k) {
    MetricSummary s;
    s.k = k;
    s.n_prompts = static_cast<std::int64_t>(records.size());
    s.em_overall = em_overall(records, k);
    s.pm_overall = pm_overall(records, k);
    for (int n = 1; n <= k; ++n) {
        double em = 0.0, pm = 0.0;
        for (const auto& r : records) {
            em += r.em_at.at(n);
            pm += r.pm_at.at(n);
        }
        s.em_at_n[n] = 100.0 * em / static_cast<double>(records.size());
        s.pm_at_n[n] = 100.0 * pm / static_cast<double>(records.size());
    }
    double nll = 0.0;
    std::int64_t toks = 0;
    for (const auto& r : records) {
        nll += r.nll_nats;
        toks += r.nll_tokens;
    }
    s.nll_per_token = toks > 0 ? nll / static_cast<double>(toks) : 0.0;
    s.perplexity = std::exp(s.nll_per_token);
    return s;
}

nlohmann::json MetricSummary::to_json() const {
    nlohmann::json j;
    j["em_overall"] = em_overall;
    j["pm_overall"] = pm_overall;
    j["em_at_n"] = nlohmann::json::object();
    j["pm_at_n"] = nlohmann::json::object();
    for (const auto& [n, v] : em_at_n) j["em_at_n"][std::to_string(n)] = v;
    for (const auto& [n, v] : pm_at_n) j["pm_at_n"][std::to_string(n)] = v;
    j["nll_per_token"] = nll_per_token;
    j["perplexity"] = perplexity;
    j["n_prompts"] = n_prompts;
    j["k"] = k;
    j["weighting"] = weighting;
    return j;
}

std::pair<double, double> nll_and_perplexity(const ArrayF& probs,
                                             const std::vector<std::int32_t>& targets) {
    if (probs.shape.nd != 2 ||
        probs.shape[0] != static_cast<std::int64_t>(targets.size()))
        throw std::invalid_argument("nll_and_perplexity: probs " + probs.shape.str() + " vs " +
                                    std::to_string(targets.size()) + " targets");
    double nll = 0.0;
    for (std::int64_t i = 0; i < probs.shape[0]; ++i) {
        const std::int32_t t = targets[static_cast<std::size_t>(i)];
        if (t < 0 || t >= probs.shape[1])
            throw std::out_of_range("nll_and_perplexity: target id out of range");
        nll -= std::log(std::max(static_cast<double>(probs.at(i, t)), kClamp));
    }
    nll /= static_cast<double>(probs.shape[0]);
    return {nll, std::exp(nll)};
}

double char_ppl_to_word_ppl(double total_char_nll_nats, std::int64_t n_words) {
    if (n_words < 1) throw std::invalid_argument("char_ppl_to_word_ppl: n_words must be >= 1");
    return std::exp(total_char_nll_nats / static_cast<double>(n_words));
}

std::vector<TheoryRow> em_ppl_theory_table() {
    // Two-token vocabulary, ground truth is index 1.
    static const std::vector<std::vector<double>> preds = {
        {0.0, 1.0},  {0.1, 0.9},   {0.2, 0.8}, {0.3, 0.7}, {0.4, 0.6},
        {0.49, 0.51}, {0.5, 0.5},  {0.51, 0.49}, {0.6, 0.4}, {0.7, 0.3},
        {0.8, 0.2},  {0.9, 0.1},   {1.0, 0.0}};
    std::vector<TheoryRow> rows;
    auto eval = [](const std::vector<double>& pred, int truth_idx) {
        // argmax with ties toward the lowest index, the decoder's rule
        int am = 0;
        for (int i = 1; i < static_cast<int>(pred.size()); ++i)
            if (pred[static_cast<std::size_t>(i)] > pred[static_cast<std::size_t>(am)]) am = i;
        const int em = am == truth_idx ? 1 : 0;
        const double nll =
            -std::log(std::max(pred[static_cast<std::size_t>(truth_idx)], kClamp));
        return std::pair<int, double>(em, nll);
    };
    for (const auto& p : preds) {
        auto [em, nll] = eval(p, 1);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "[%.2g, %.2g]", p[0], p[1]);
        rows.push_back({buf, p, em, nll});
    }
    // Analytic cases (|V| = 2): correct/wrong one-hot, uniform with
    // correct/wrong argmax.
    {
        auto [em, nll] = eval({0.0, 1.0}, 1);
        rows.push_back({"one-hot correct", {0.0, 1.0}, em, nll});
    }
    {
        auto [em, nll] = eval({1.0, 0.0}, 1);
        rows.push_back({"one-hot wrong", {1.0, 0.0}, em, nll});
    }
    {
        auto [em, nll] = eval({0.5, 0.5}, 0);  // tie resolves to index 0 = truth
        rows.push_back({"uniform argmax correct", {0.5, 0.5}, em, nll});
    }
    {
        auto [em, nll] = eval({0.5, 0.5}, 1);
        rows.push_back({"uniform argmax wrong", {0.5, 0.5}, em, nll});
    }
    return rows;
}

void print_theory_table(std::ostream& os) {
    const auto rows = em_ppl_theory_table();
    os << "prediction            exact_match  nll_nats\n";
    for (const auto& r : rows) {
        os << std::left << std::setw(22) << r.label << std::setw(13) << r.exact_match
           << std::setprecision(6) << r.nll << "\n";
    }
}

namespace {
std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}
}  // namespace

void write_records_csv(std::ostream& os, const std::vector<EvalRecord>& records, int k) {
    os << "prompt_id,context_percent,oov_score";
    for (int n = 1; n <= k; ++n) os << ",em" << n;
    for (int n = 1; n <= k; ++n) os << ",pm" << n;
    os << ",nll_nats,nll_tokens,prediction,truth\n";
    for (const auto& r : records) {
        os << csv_escape(r.prompt_id) << ',' << r.context_percent << ',' << r.oov_score;
        for (int n = 1; n <= k; ++n) os << ',' << r.em_at.at(n);
        for (int n = 1; n <= k; ++n) os << ',' << r.pm_at.at(n);
        std::string pred, truth;
        for (std::size_t i = 0; i < r.predicted_words.size(); ++i)
            pred += (i ? " " : "") + r.predicted_words[i];
        for (std::size_t i = 0; i < r.truth_words.size(); ++i)
            truth += (i ? " " : "") + r.truth_words[i];
        os << ',' << r.nll_nats << ',' << r.nll_tokens << ',' << csv_escape(pred) << ','
           << csv_escape(truth) << '\n';
    }
}

}  // namespace ac
