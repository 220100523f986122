#pragma once
// The allocation plan: every tensor the decoder owns, with its component
// tag. plan_tensors is the single source of truth -- the model allocates
// exactly this list, and count_params must agree with it as exact integers.

#include <cstdint>
#include <string>
#include <vector>

#include "ac/array.hpp"
#include "ac/model_config.hpp"

namespace ac {

enum class Component { AdaEmb, Attn, FFN, Softmax };
const char* component_name(Component c);

struct ParamSpec {
    std::string name;
    Shape shape;
    Component component;
    enum class Init { normal, zeros, ones } init;
};

std::vector<ParamSpec> plan_tensors(const ModelConfig& cfg);

struct ComponentBreakdown {
    std::int64_t ada_emb = 0;
    std::int64_t attn = 0;
    std::int64_t ffn = 0;
    std::int64_t softmax = 0;

    std::int64_t total() const { return ada_emb + attn + ffn + softmax; }
    std::int64_t of(Component c) const;
    // Percentage shares; sums to 100 for a nonempty model.
    double share(Component c) const;
};

// Closed-form per-component counts. Cross-checked against plan_tensors.
ComponentBreakdown count_params(const ModelConfig& cfg);

// Adaptive embedding cluster geometry: [lo, hi) vocabulary slice and its
// embedding dimension d_embed / div^i (floored, at least 1).
struct AdaptiveCluster {
    std::int64_t lo, hi, dim;
    bool has_proj;
};
std::vector<AdaptiveCluster> adaptive_clusters(const ModelConfig& cfg);

}  // namespace ac
