#pragma once
// Quantitative analyses: component breakdown over randomly sampled
// architectures, the analytic peak-memory estimator, accuracy-memory pareto
// ordering, and the per-N / per-cutoff accuracy curves.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ac/metrics.hpp"
#include "ac/model_config.hpp"
#include "ac/param_plan.hpp"
#include "ac/rng.hpp"

namespace ac {

struct ArchitectureSpace {
    std::vector<std::int64_t> layers = {2, 4, 8, 12, 16, 24, 32};
    std::vector<std::int64_t> heads = {2, 4, 8, 16, 32, 64};
    std::vector<std::int64_t> d_head = {8, 16, 32, 64, 128};
    std::vector<std::int64_t> d_embed = {256, 512, 1024, 2048};
    std::vector<std::int64_t> d_inner = {256, 512, 1024, 2048};
    std::vector<std::int64_t> d_model = {256, 512, 1024, 2048};
};

inline constexpr std::int64_t kWordVocabSize = 267736;
inline constexpr std::int64_t kCharVocabSize = 128;
// Fixed seed of the breakdown reproduction; documented in the README.
inline constexpr std::uint64_t kBreakdownSeed = 1242;

// Uniform independent choice per axis, in the declared axis order; vocab is
// 267736 (word) or 128 (char). Deterministic under seed.
std::vector<ModelConfig> sample_architectures(const ArchitectureSpace& space, std::int64_t n,
                                              std::uint64_t seed, Granularity granularity);

struct BreakdownStudy {
    double mean_share[4] = {0, 0, 0, 0};    // indexed by Component order
    double stddev_share[4] = {0, 0, 0, 0};
    std::vector<ComponentBreakdown> per_config;
};

BreakdownStudy breakdown_study(const std::vector<ModelConfig>& configs);
void write_breakdown_csv(std::ostream& os, const std::vector<ModelConfig>& configs,
                         const BreakdownStudy& study);

enum class MemoryMode { inference, training };

struct MemoryEstimate {
    std::int64_t parameter_bytes = 0;
    std::int64_t activation_bytes = 0;
    std::int64_t memory_cache_bytes = 0;
    std::int64_t total_peak_bytes = 0;
    // assumptions
    std::int64_t bytes_per_scalar = 4;
    std::int64_t batch = 0, seq = 0, mem_len = 0;
};

// Analytic estimator standing in for measured peak memory:
//   parameters: 4 bytes per scalar (x4 in training for gradients and both
//   Adam moments), cache: 4 * n_layer * mem_len * d_model * batch,
//   activations: 4 * batch * seq * n_layer * (4*d_model + d_inner +
//   n_head*(seq+mem_len)).
MemoryEstimate estimate_peak_memory(const ModelConfig& cfg, std::int64_t batch, std::int64_t seq,
                                    MemoryMode mode);

struct ParetoEntry {
    std::string label;
    std::int64_t param_count = 0;
    std::int64_t memory_bytes = 0;
    double em_overall = 0.0;
    bool pareto_optimal = false;
};

// Sorts by the memory axis and flags the pareto-dominant set (no other entry
// with <= memory and >= accuracy, one strictly better).
std::vector<ParetoEntry> pareto_table(std::vector<ParetoEntry> entries);
void write_pareto_csv(std::ostream& os, const std::vector<ParetoEntry>& entries);

// Mean em_at[n] (percent) for each n in [1, n_max].
std::vector<double> em_vs_n_curve(const std::vector<EvalRecord>& records, int n_max);

enum class CutoffOrder { ascending, descending };

struct CutoffPoint {
    std::int64_t cutoff;          // requested k
    std::int64_t used;            // clamped to the record count
    double em_at_1 = 0.0;         // percent over the selected prompts
};

// Ranks records by oov score (ascending = broad proxy, descending = focused)
// and reports EM@1 over the top k for each cutoff. k larger than the record
// count clamps with a warning on the stream (when given).
std::vector<CutoffPoint> cutoff_curve(const std::vector<EvalRecord>& records,
                                      const std::vector<std::int64_t>& cutoffs, CutoffOrder order,
                                      std::ostream* warnings = nullptr);

}  // namespace ac
