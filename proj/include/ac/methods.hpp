#pragma once
// The character-model improvement methods: word-segment embeddings,
// character pooling, and decoder-layer transfer from a word model.
//
// Word boundaries follow the space token; the space belongs to the word it
// terminates, both for segment indexing and for the pooling reset. Pooling
// never looks ahead: the addend at position t depends only on characters of
// the current word at positions <= t.

#include <cstdint>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ac/autodiff.hpp"
#include "ac/model_config.hpp"

namespace ac {

enum class PoolKind { sum, mean, max };
PoolKind pool_kind_of(Method m);

// Running per-lane word state carried across chunked forwards in a decode
// session. Training resets it at every segment.
template <typename T>
struct MethodStateT {
    std::int64_t batch = 0;
    std::vector<std::int64_t> word_index;   // next word-segment index per lane
    ArrayT<T> pool_sum;                     // (batch, d) running sum of current word
    ArrayT<T> pool_max;                     // (batch, d) running max
    std::vector<std::int64_t> pool_count;   // chars of current word seen so far
    bool mid_word = false;                  // any lane mid-word (pool carry valid)

    void reset(std::int64_t b, std::int64_t d) {
        batch = b;
        word_index.assign(static_cast<std::size_t>(b), 0);
        pool_sum = ArrayT<T>(Shape{b, d}, T(0));
        pool_max = ArrayT<T>(Shape{b, d}, T(0));
        pool_count.assign(static_cast<std::size_t>(b), 0);
        mid_word = false;
    }
};

// Per-position word-segment indices for a (batch, len) chunk of ids. The
// index increments after each space token and clamps at cap-1. state, when
// given, seeds and receives the per-lane counters.
std::vector<std::int32_t> word_segment_indices(const std::vector<std::int32_t>& ids,
                                               std::int64_t batch, std::int64_t len,
                                               int space_id, std::int64_t cap,
                                               std::vector<std::int64_t>* state);

// Per-position start offset (flat index) of the current word, or -1 when the
// word started before this chunk (carry).
std::vector<std::int32_t> word_span_starts(const std::vector<std::int32_t>& ids,
                                           std::int64_t batch, std::int64_t len, int space_id,
                                           const std::vector<std::int64_t>* carry_counts);

// Pooled word embedding addend over the current word's characters seen so
// far. emb is (batch*len, d); state carries running sums across chunks and is
// updated in place when given (its contribution is treated as constant).
// Introduces no parameters.
template <typename T>
VarT<T> char_pool(const VarT<T>& emb, const std::vector<std::int32_t>& ids, std::int64_t batch,
                  std::int64_t len, int space_id, PoolKind kind, MethodStateT<T>* state);

struct TransferPlan {
    std::string source_checkpoint;
    std::int64_t source_layers = 0;
    int transfer_percent = 0;  // one of 10, 20, 30, 40, 50
    std::vector<std::pair<std::int64_t, std::int64_t>> mapped_layers;  // source -> target

    nlohmann::json to_json() const;
    static TransferPlan from_json(const nlohmann::json& j);
};

// Bottom floor(percent/100 * target_n_layer) layers, at least one, mapped in
// order. Throws when the Transformer shapes disagree (naming the dimension)
// or the percent is outside the supported set.
TransferPlan make_transfer_plan(const ModelConfig& source, const ModelConfig& target,
                                int transfer_percent, const std::string& source_path = "");

template <typename T>
class DecoderModelT;

// Copies the mapped decoder layers (attention + FFN + their layer norms)
// bitwise from source into target. Everything else keeps its initialization.
void transfer_layers(DecoderModelT<float>& target, const DecoderModelT<float>& source,
                     const TransferPlan& plan);

extern template VarT<float> char_pool<float>(const VarT<float>&, const std::vector<std::int32_t>&,
                                             std::int64_t, std::int64_t, int, PoolKind,
                                             MethodStateT<float>*);
extern template VarT<double> char_pool<double>(const VarT<double>&,
                                               const std::vector<std::int32_t>&, std::int64_t,
                                               std::int64_t, int, PoolKind,
                                               MethodStateT<double>*);

}  // namespace ac
