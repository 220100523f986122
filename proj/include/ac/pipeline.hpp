#pragma once
// Desk-scale reproduction pipeline: trains the baseline word and character
// models and the word-information variants on one corpus, evaluates them on
// held-out paragraphs, and emits the comparison report (summary table,
// context sweep, greedy-vs-beam) plus per-model checkpoints and loss traces.
//
// All character variants share the word models' Transformer shape so layer
// transfer is well defined; parameter budgets are matched to the word
// baseline by solving for the character layer count.

#include <cstdint>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

namespace ac {

enum class PipelinePreset { smoke, desk };

struct PipelineOptions {
    PipelinePreset preset = PipelinePreset::smoke;
    std::string corpus_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    std::ostream* progress = nullptr;
};

// Returns the report directory. Throws with the failing stage name on error.
std::string run_pipeline(const PipelineOptions& opts);

}  // namespace ac
