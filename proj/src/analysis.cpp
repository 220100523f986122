#include "ac/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ac {

std::vector<ModelConfig> sample_architectures(const ArchitectureSpace& space, std::int64_t n,
                                              std::uint64_t seed, Granularity granularity) {
    for (const auto* axis : {&space.layers, &space.heads, &space.d_head, &space.d_embed,
                             &space.d_inner, &space.d_model})
        if (axis->empty()) throw std::invalid_argument("sample_architectures: empty axis");

    Rng rng(seed);
    auto pick = [&rng](const std::vector<std::int64_t>& axis) {
        return axis[rng.below(axis.size())];
    };
    std::vector<ModelConfig> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        ModelConfig c;
        c.n_layer = pick(space.layers);
        c.n_head = pick(space.heads);
        c.d_head = pick(space.d_head);
        c.d_embed = pick(space.d_embed);
        c.d_inner = pick(space.d_inner);
        c.d_model = pick(space.d_model);
        c.granularity = granularity;
        c.vocab_size = granularity == Granularity::word ? kWordVocabSize : kCharVocabSize;
        c.adaptive = false;  // full tied tables; matches the reported sizes
        c.tie_weights = true;
        out.push_back(c);
    }
    return out;
}

BreakdownStudy breakdown_study(const std::vector<ModelConfig>& configs) {
    if (configs.empty()) throw std::invalid_argument("breakdown_study: no configs");
    BreakdownStudy s;
    s.per_config.reserve(configs.size());
    for (const auto& cfg : configs) s.per_config.push_back(count_params(cfg));

    const double n = static_cast<double>(configs.size());
    for (int c = 0; c < 4; ++c) {
        double mean = 0.0;
        for (const auto& b : s.per_config) mean += b.share(static_cast<Component>(c));
        mean /= n;
        double var = 0.0;
        for (const auto& b : s.per_config) {
            const double d = b.share(static_cast<Component>(c)) - mean;
            var += d * d;
        }
        s.mean_share[c] = mean;
        s.stddev_share[c] = std::sqrt(var / n);
    }
    return s;
}

void write_breakdown_csv(std::ostream& os, const std::vector<ModelConfig>& configs,
                         const BreakdownStudy& study) {
    os << "n_layer,n_head,d_head,d_embed,d_inner,d_model,ada_emb,attn,ffn,softmax,total,"
          "ada_emb_pct,attn_pct,ffn_pct,softmax_pct\n";
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto& c = configs[i];
        const auto& b = study.per_config[i];
        os << c.n_layer << ',' << c.n_head << ',' << c.d_head << ',' << c.d_embed << ','
           << c.d_inner << ',' << c.d_model << ',' << b.ada_emb << ',' << b.attn << ',' << b.ffn
           << ',' << b.softmax << ',' << b.total() << ',' << b.share(Component::AdaEmb) << ','
           << b.share(Component::Attn) << ',' << b.share(Component::FFN) << ','
           << b.share(Component::Softmax) << '\n';
    }
}

MemoryEstimate estimate_peak_memory(const ModelConfig& cfg, std::int64_t batch, std::int64_t seq,
                                    MemoryMode mode) {
    if (batch <= 0 || seq <= 0)
        throw std::invalid_argument("estimate_peak_memory: batch and seq must be positive");
    MemoryEstimate e;
    e.batch = batch;
    e.seq = seq;
    e.mem_len = cfg.mem_len;
    const std::int64_t total = count_params(cfg).total();
    e.parameter_bytes = 4 * total * (mode == MemoryMode::training ? 4 : 1);
    e.memory_cache_bytes = 4 * cfg.n_layer * cfg.mem_len * cfg.d_model * batch;
    e.activation_bytes =
        4 * batch * seq * cfg.n_layer *
        (4 * cfg.d_model + cfg.d_inner + cfg.n_head * (seq + cfg.mem_len));
    e.total_peak_bytes = e.parameter_bytes + e.memory_cache_bytes + e.activation_bytes;
    return e;
}

std::vector<ParetoEntry> pareto_table(std::vector<ParetoEntry> entries) {
    if (entries.empty()) throw std::invalid_argument("pareto_table: need at least one entry");
    std::sort(entries.begin(), entries.end(), [](const ParetoEntry& a, const ParetoEntry& b) {
        if (a.memory_bytes != b.memory_bytes) return a.memory_bytes < b.memory_bytes;
        return a.em_overall > b.em_overall;
    });
    for (auto& e : entries) {
        e.pareto_optimal = true;
        for (const auto& o : entries) {
            const bool no_worse =
                o.memory_bytes <= e.memory_bytes && o.em_overall >= e.em_overall;
            const bool better =
                o.memory_bytes < e.memory_bytes || o.em_overall > e.em_overall;
            if (no_worse && better) {
                e.pareto_optimal = false;
                break;
            }
        }
    }
    return entries;
}

void write_pareto_csv(std::ostream& os, const std::vector<ParetoEntry>& entries) {
    os << "label,param_count,memory_bytes,em_overall,pareto_optimal\n";
    for (const auto& e : entries)
        os << e.label << ',' << e.param_count << ',' << e.memory_bytes << ',' << e.em_overall
           << ',' << (e.pareto_optimal ? 1 : 0) << '\n';
}

std::vector<double> em_vs_n_curve(const std::vector<EvalRecord>& records, int n_max) {
    if (records.empty()) throw std::invalid_argument("em_vs_n_curve: empty record set");
    std::vector<double> out;
    for (int n = 1; n <= n_max; ++n) {
        double m = 0.0;
        for (const auto& r : records) m += r.em_at.at(n);
        out.push_back(100.0 * m / static_cast<double>(records.size()));
    }
    return out;
}

std::vector<CutoffPoint> cutoff_curve(const std::vector<EvalRecord>& records,
                                      const std::vector<std::int64_t>& cutoffs, CutoffOrder order,
                                      std::ostream* warnings) {
    if (records.empty()) throw std::invalid_argument("cutoff_curve: empty record set");
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return order == CutoffOrder::ascending ? records[a].oov_score < records[b].oov_score
                                               : records[a].oov_score > records[b].oov_score;
    });
    std::vector<CutoffPoint> out;
    for (std::int64_t k : cutoffs) {
        CutoffPoint p;
        p.cutoff = k;
        p.used = std::min<std::int64_t>(k, static_cast<std::int64_t>(records.size()));
        if (p.used < k && warnings)
            (*warnings) << "cutoff " << k << " clamped to " << p.used << " records\n";
        double em = 0.0;
        for (std::int64_t i = 0; i < p.used; ++i)
            em += records[idx[static_cast<std::size_t>(i)]].em_at.at(1);
        p.em_at_1 = p.used > 0 ? 100.0 * em / static_cast<double>(p.used) : 0.0;
        out.push_back(p);
    }
    return out;
}

}  // namespace ac
