#include "ac/methods.hpp"

#include <algorithm>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ac/model.hpp"

namespace ac {

PoolKind pool_kind_of(Method m) {
    switch (m) {
        case Method::char_pool_sum: return PoolKind::sum;
        case Method::char_pool_mean: return PoolKind::mean;
        case Method::char_pool_max: return PoolKind::max;
        default: throw std::invalid_argument("pool_kind_of: not a pooling method");
    }
}

std::vector<std::int32_t> word_segment_indices(const std::vector<std::int32_t>& ids,
                                               std::int64_t batch, std::int64_t len,
                                               int space_id, std::int64_t cap,
                                               std::vector<std::int64_t>* state) {
    std::vector<std::int32_t> out(static_cast<std::size_t>(batch * len));
    for (std::int64_t b = 0; b < batch; ++b) {
        std::int64_t idx = state ? (*state)[static_cast<std::size_t>(b)] : 0;
        for (std::int64_t t = 0; t < len; ++t) {
            const std::int64_t flat = b * len + t;
            out[static_cast<std::size_t>(flat)] =
                static_cast<std::int32_t>(std::min(idx, cap - 1));
            if (ids[static_cast<std::size_t>(flat)] == space_id) ++idx;
        }
        if (state) (*state)[static_cast<std::size_t>(b)] = idx;
    }
    return out;
}

std::vector<std::int32_t> word_span_starts(const std::vector<std::int32_t>& ids,
                                           std::int64_t batch, std::int64_t len, int space_id,
                                           const std::vector<std::int64_t>* carry_counts) {
    std::vector<std::int32_t> out(static_cast<std::size_t>(batch * len));
    for (std::int64_t b = 0; b < batch; ++b) {
        const bool carried = carry_counts && (*carry_counts)[static_cast<std::size_t>(b)] > 0;
        std::int64_t start = carried ? -1 : b * len;
        for (std::int64_t t = 0; t < len; ++t) {
            const std::int64_t flat = b * len + t;
            out[static_cast<std::size_t>(flat)] = static_cast<std::int32_t>(start);
            if (ids[static_cast<std::size_t>(flat)] == space_id) start = flat + 1;
        }
    }
    return out;
}

template <typename T>
VarT<T> char_pool(const VarT<T>& emb, const std::vector<std::int32_t>& ids, std::int64_t batch,
                  std::int64_t len, int space_id, PoolKind kind, MethodStateT<T>* state) {
    if (emb.shape().nd != 2 || emb.shape()[0] != batch * len)
        throw std::invalid_argument("char_pool: emb must be (batch*len, d), got " +
                                    emb.shape().str());
    const std::int64_t d = emb.shape()[1];
    const std::vector<std::int64_t>* carry_counts =
        state && state->mid_word ? &state->pool_count : nullptr;
    auto spans = std::make_shared<std::vector<std::int32_t>>(
        word_span_starts(ids, batch, len, space_id, carry_counts));

    auto counts = std::make_shared<std::vector<std::int64_t>>(
        static_cast<std::size_t>(batch * len));
    // argmax source per (position, dim); -1 means the carry state
    auto amax = kind == PoolKind::max
                    ? std::make_shared<std::vector<std::int32_t>>(
                          static_cast<std::size_t>(batch * len * d))
                    : nullptr;

    ArrayT<T> out(Shape{batch * len, d});
    ArrayT<T> run_sum(Shape{d});
    ArrayT<T> run_max(Shape{d});
    std::vector<std::int32_t> run_amax(static_cast<std::size_t>(d));
    for (std::int64_t b = 0; b < batch; ++b) {
        std::int64_t count = 0;
        run_sum.fill(T(0));
        run_max.fill(T(0));
        std::fill(run_amax.begin(), run_amax.end(), -1);
        if (state && state->mid_word && state->pool_count[static_cast<std::size_t>(b)] > 0) {
            count = state->pool_count[static_cast<std::size_t>(b)];
            std::copy_n(state->pool_sum.data() + b * d, d, run_sum.data());
            std::copy_n(state->pool_max.data() + b * d, d, run_max.data());
        }
        for (std::int64_t t = 0; t < len; ++t) {
            const std::int64_t flat = b * len + t;
            const T* e = emb.val().data() + flat * d;
            if (count == 0) {
                std::copy_n(e, d, run_sum.data());
                std::copy_n(e, d, run_max.data());
                if (amax) std::fill(run_amax.begin(), run_amax.end(),
                                    static_cast<std::int32_t>(flat));
            } else {
                kern::acc(run_sum.data(), e, d);
                for (std::int64_t j = 0; j < d; ++j)
                    if (e[j] > run_max[j]) {
                        run_max[j] = e[j];
                        run_amax[static_cast<std::size_t>(j)] =
                            static_cast<std::int32_t>(flat);
                    }
            }
            ++count;
            (*counts)[static_cast<std::size_t>(flat)] = count;
            T* o = out.data() + flat * d;
            switch (kind) {
                case PoolKind::sum: std::copy_n(run_sum.data(), d, o); break;
                case PoolKind::mean:
                    for (std::int64_t j = 0; j < d; ++j) o[j] = run_sum[j] / T(count);
                    break;
                case PoolKind::max: std::copy_n(run_max.data(), d, o); break;
            }
            if (amax)
                std::copy_n(run_amax.data(), d, amax->data() + flat * d);
            if (ids[static_cast<std::size_t>(flat)] == space_id) {
                count = 0;  // the space closed its word
                std::fill(run_amax.begin(), run_amax.end(), -1);
            }
        }
        if (state) {
            state->pool_count[static_cast<std::size_t>(b)] = count;
            std::copy_n(run_sum.data(), d, state->pool_sum.data() + b * d);
            std::copy_n(run_max.data(), d, state->pool_max.data() + b * d);
        }
    }
    if (state) {
        state->mid_word = false;
        for (std::int64_t b = 0; b < batch; ++b)
            if (state->pool_count[static_cast<std::size_t>(b)] > 0) state->mid_word = true;
    }

    auto en = emb.node();
    const bool mean = kind == PoolKind::mean;
    const bool maxp = kind == PoolKind::max;
    return detail_ad::make_op<T>(
        std::move(out), {emb}, [en, spans, counts, amax, batch, len, d, mean, maxp](NodeT<T>& n) {
            auto& g = en->ensure_grad();
            if (maxp) {
                const std::int64_t total = batch * len;
                for (std::int64_t flat = 0; flat < total; ++flat) {
                    const T* go = n.grad.data() + flat * d;
                    for (std::int64_t j = 0; j < d; ++j) {
                        const std::int32_t src = (*amax)[static_cast<std::size_t>(flat * d + j)];
                        if (src >= 0) g.at(src, j) += go[j];
                    }
                }
                return;
            }
            // Suffix accumulation within each word span, walked backwards.
            ArrayT<T> acc_buf(Shape{d});
            for (std::int64_t b = 0; b < batch; ++b) {
                std::int32_t cur_span = -2;
                for (std::int64_t t = len - 1; t >= 0; --t) {
                    const std::int64_t flat = b * len + t;
                    if ((*spans)[static_cast<std::size_t>(flat)] != cur_span) {
                        cur_span = (*spans)[static_cast<std::size_t>(flat)];
                        acc_buf.fill(T(0));
                    }
                    const T* go = n.grad.data() + flat * d;
                    if (mean) {
                        const T w = T(1) / T((*counts)[static_cast<std::size_t>(flat)]);
                        kern::axpy(acc_buf.data(), w, go, d);
                    } else {
                        kern::acc(acc_buf.data(), go, d);
                    }
                    kern::acc(g.data() + flat * d, acc_buf.data(), d);
                }
            }
        });
}

template VarT<float> char_pool<float>(const VarT<float>&, const std::vector<std::int32_t>&,
                                      std::int64_t, std::int64_t, int, PoolKind,
                                      MethodStateT<float>*);
template VarT<double> char_pool<double>(const VarT<double>&, const std::vector<std::int32_t>&,
                                        std::int64_t, std::int64_t, int, PoolKind,
                                        MethodStateT<double>*);

nlohmann::json TransferPlan::to_json() const {
    nlohmann::json j;
    j["source_checkpoint"] = source_checkpoint;
    j["source_layers"] = source_layers;
    j["transfer_percent"] = transfer_percent;
    nlohmann::json maps = nlohmann::json::array();
    for (const auto& [s, t] : mapped_layers) maps.push_back({{"source", s}, {"target", t}});
    j["mapped_layers"] = maps;
    return j;
}

TransferPlan TransferPlan::from_json(const nlohmann::json& j) {
    TransferPlan p;
    p.source_checkpoint = j.at("source_checkpoint").get<std::string>();
    p.source_layers = j.at("source_layers").get<std::int64_t>();
    p.transfer_percent = j.at("transfer_percent").get<int>();
    for (const auto& m : j.at("mapped_layers"))
        p.mapped_layers.emplace_back(m.at("source").get<std::int64_t>(),
                                     m.at("target").get<std::int64_t>());
    return p;
}

TransferPlan make_transfer_plan(const ModelConfig& source, const ModelConfig& target,
                                int transfer_percent, const std::string& source_path) {
    if (transfer_percent != 10 && transfer_percent != 20 && transfer_percent != 30 &&
        transfer_percent != 40 && transfer_percent != 50)
        throw std::invalid_argument("transfer_percent must be one of {10,20,30,40,50}, got " +
                                    std::to_string(transfer_percent));
    auto check = [](std::int64_t a, std::int64_t b, const char* dim) {
        if (a != b)
            throw std::invalid_argument(std::string("transfer shape mismatch: ") + dim + " " +
                                        std::to_string(a) + " vs " + std::to_string(b));
    };
    check(source.n_head, target.n_head, "n_head");
    check(source.d_head, target.d_head, "d_head");
    check(source.d_model, target.d_model, "d_model");
    check(source.d_inner, target.d_inner, "d_inner");

    const std::int64_t n =
        std::max<std::int64_t>(1, target.n_layer * transfer_percent / 100);
    if (n > source.n_layer)
        throw std::invalid_argument("transfer needs " + std::to_string(n) +
                                    " source layers, source has " +
                                    std::to_string(source.n_layer));
    if (n > target.n_layer)
        throw std::invalid_argument("transfer maps more layers than the target has");

    TransferPlan p;
    p.source_checkpoint = source_path;
    p.source_layers = source.n_layer;
    p.transfer_percent = transfer_percent;
    for (std::int64_t i = 0; i < n; ++i) p.mapped_layers.emplace_back(i, i);
    return p;
}

void transfer_layers(DecoderModelT<float>& target, const DecoderModelT<float>& source,
                     const TransferPlan& plan) {
    static const char* kLayerTensors[] = {"attn.qkv_w", "attn.o_w", "attn.r_w", "attn.u",
                                          "attn.v",     "attn.ln_g", "attn.ln_b", "ffn.w1",
                                          "ffn.b1",     "ffn.w2",   "ffn.b2",   "ffn.ln_g",
                                          "ffn.ln_b"};
    for (const auto& [src_l, dst_l] : plan.mapped_layers) {
        for (const char* t : kLayerTensors) {
            const std::string src_name = "layers." + std::to_string(src_l) + "." + t;
            const std::string dst_name = "layers." + std::to_string(dst_l) + "." + t;
            const auto& src = source.param(src_name).val();
            auto& dst = target.param(dst_name).val();
            if (src.shape != dst.shape)
                throw std::invalid_argument("transfer shape mismatch for " + src_name + ": " +
                                            src.shape.str() + " vs " + dst.shape.str());
            dst.v = src.v;
        }
    }
}

}  // namespace ac
