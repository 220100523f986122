#pragma once
// Decoder-only transformer with segment-level recurrence and relative
// positional attention. Post-norm residual blocks, GELU feedforward, tied
// input/output embeddings by default. Parameters carry component tags for
// the breakdown analyses.

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ac/attention.hpp"
#include "ac/autodiff.hpp"
#include "ac/methods.hpp"
#include "ac/model_config.hpp"
#include "ac/param_plan.hpp"
#include "ac/rng.hpp"

namespace ac {

template <typename T>
struct ParamT {
    std::string name;
    Component component;
    VarT<T> var;
};

// Cached per-layer hidden states. Entries are plain value arrays: no
// gradient ever flows into a cached segment.
template <typename T>
struct MemoryT {
    std::vector<ArrayT<T>> layers;  // each (batch*len, d_model)
    std::int64_t batch = 0;
    std::int64_t len = 0;

    bool empty() const { return len == 0; }
    void clear() {
        layers.clear();
        batch = 0;
        len = 0;
    }
};

template <typename T>
class DecoderModelT {
public:
    DecoderModelT(ModelConfig cfg, Rng rng);

    const ModelConfig& config() const { return cfg_; }
    std::vector<ParamT<T>>& params() { return params_; }
    const std::vector<ParamT<T>>& params() const { return params_; }
    VarT<T>& param(const std::string& name);
    const VarT<T>& param(const std::string& name) const;
    bool has_param(const std::string& name) const { return by_name_.count(name) > 0; }
    std::int64_t total_params() const;

    // Batched training/inference core over a (batch, len) chunk of ids,
    // flattened row-major. Returns logits (batch*len, vocab). When mem is
    // given, attention spans [cached || current] and the cache advances to
    // the last mem_limit positions per layer. mstate carries the
    // word-information method state across chunks (may be null for the
    // baseline method).
    VarT<T> forward_batch(const std::vector<std::int32_t>& ids, std::int64_t batch,
                          std::int64_t len, MemoryT<T>* mem, std::int64_t mem_limit,
                          MethodStateT<T>* mstate, bool train_mode, Rng* dropout_rng) const;

    // Single-sequence forward using the model's own memory; rows are
    // next-token probability distributions (len, vocab).
    ArrayT<T> forward(const std::vector<int>& tokens, bool use_memory);

    void reset_memory() { memory_.clear(); }
    MemoryT<T>& memory() { return memory_; }
    const MemoryT<T>& memory() const { return memory_; }

private:
    ModelConfig cfg_;
    std::vector<ParamT<T>> params_;
    std::unordered_map<std::string, std::size_t> by_name_;
    MemoryT<T> memory_;
};

using DecoderModel = DecoderModelT<float>;

extern template class DecoderModelT<float>;
extern template class DecoderModelT<double>;

}  // namespace ac
