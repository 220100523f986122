#include "ac/model.hpp"

#include <cmath>
#include <stdexcept>

namespace ac {

template <typename T>
DecoderModelT<T>::DecoderModelT(ModelConfig cfg, Rng rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto plan = plan_tensors(cfg_);
    params_.reserve(plan.size());
    for (const auto& spec : plan) {
        ArrayT<T> value(spec.shape);
        switch (spec.init) {
            case ParamSpec::Init::normal:
                for (std::int64_t i = 0; i < value.numel(); ++i)
                    value[i] = static_cast<T>(rng.normal() * 0.02);
                break;
            case ParamSpec::Init::zeros:
                break;
            case ParamSpec::Init::ones:
                value.fill(T(1));
                break;
        }
        by_name_[spec.name] = params_.size();
        params_.push_back({spec.name, spec.component, VarT<T>(std::move(value), true)});
    }
}

template <typename T>
VarT<T>& DecoderModelT<T>::param(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
    return params_[it->second].var;
}

template <typename T>
const VarT<T>& DecoderModelT<T>::param(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
    return params_[it->second].var;
}

template <typename T>
std::int64_t DecoderModelT<T>::total_params() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.var.val().numel();
    return n;
}

template <typename T>
VarT<T> DecoderModelT<T>::forward_batch(const std::vector<std::int32_t>& ids, std::int64_t batch,
                                        std::int64_t len, MemoryT<T>* mem,
                                        std::int64_t mem_limit, MethodStateT<T>* mstate,
                                        bool train_mode, Rng* dropout_rng) const {
    if (cfg_.adaptive)
        throw std::logic_error(
            "forward: adaptive configurations are accounting-only; run with adaptive=false");
    if (len <= 0 || static_cast<std::int64_t>(ids.size()) != batch * len)
        throw std::invalid_argument("forward: ids size does not match batch*len");
    if (len > cfg_.tgt_len)
        throw std::invalid_argument("forward: sequence length " + std::to_string(len) +
                                    " exceeds tgt_len " + std::to_string(cfg_.tgt_len));
    for (std::int32_t id : ids)
        if (id < 0 || id >= cfg_.vocab_size)
            throw std::out_of_range("forward: token id " + std::to_string(id) +
                                    " outside vocabulary of " + std::to_string(cfg_.vocab_size));
    if (mem && !mem->empty() && mem->batch != batch)
        throw std::invalid_argument("forward: memory batch mismatch");

    const bool drop = train_mode && cfg_.dropout > 0.0 && dropout_rng != nullptr;
    const std::int64_t hd = cfg_.n_head * cfg_.d_head;

    // Token embedding, scaled by sqrt(d_model), plus method addends.
    const VarT<T>& emb_w = param("emb.weight");
    VarT<T> h = embedding_lookup(emb_w, ids);
    if (cfg_.d_embed != cfg_.d_model) h = matmul(h, param("emb.proj"));
    h = scale(h, static_cast<T>(std::sqrt(static_cast<double>(cfg_.d_model))));
    if (cfg_.method == Method::word_segment) {
        std::vector<std::int64_t>* counters = mstate ? &mstate->word_index : nullptr;
        const auto seg_idx = word_segment_indices(ids, batch, len, cfg_.space_token_id,
                                                  cfg_.max_words_per_seq, counters);
        h = add(h, embedding_lookup(param("seg.weight"), seg_idx));
    } else if (is_pool_method(cfg_.method)) {
        h = add(h, char_pool(h, ids, batch, len, cfg_.space_token_id,
                             pool_kind_of(cfg_.method), mstate));
    }
    if (drop) h = dropout(h, cfg_.dropout, *dropout_rng);

    const std::int64_t mlen = (mem && !mem->empty()) ? mem->len : 0;
    const std::int64_t klen = mlen + len;
    const ArrayT<T> pos = sinusoid_positions<T>(klen, cfg_.d_model);
    const VarT<T> pos_var(pos, false);

    std::vector<ArrayT<T>> new_inputs;  // layer inputs cached for recurrence
    if (mem) new_inputs.reserve(static_cast<std::size_t>(cfg_.n_layer));

    for (std::int64_t l = 0; l < cfg_.n_layer; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        if (mem) new_inputs.push_back(h.val());

        VarT<T> full = h;
        if (mlen > 0) {
            VarT<T> cached(mem->layers[static_cast<std::size_t>(l)], false);  // detached
            full = concat_streams(cached, h, batch);
        }
        const VarT<T>& qkv_w = param(p + "attn.qkv_w");
        VarT<T> q = matmul(h, slice2d(qkv_w, 0, cfg_.d_model, 0, hd));
        VarT<T> kk = matmul(full, slice2d(qkv_w, 0, cfg_.d_model, hd, hd));
        VarT<T> vv = matmul(full, slice2d(qkv_w, 0, cfg_.d_model, 2 * hd, hd));
        VarT<T> rk = matmul(pos_var, param(p + "attn.r_w"));
        VarT<T> ctx = rel_attention(q, kk, vv, rk, param(p + "attn.u"), param(p + "attn.v"),
                                    batch, len, klen, cfg_.n_head);
        VarT<T> attn_out = matmul(ctx, param(p + "attn.o_w"));
        if (drop) attn_out = dropout(attn_out, cfg_.dropout, *dropout_rng);
        h = layer_norm(add(h, attn_out), param(p + "attn.ln_g"), param(p + "attn.ln_b"));

        VarT<T> f = gelu(add_bias(matmul(h, param(p + "ffn.w1")), param(p + "ffn.b1")));
        f = add_bias(matmul(f, param(p + "ffn.w2")), param(p + "ffn.b2"));
        if (drop) f = dropout(f, cfg_.dropout, *dropout_rng);
        h = layer_norm(add(h, f), param(p + "ffn.ln_g"), param(p + "ffn.ln_b"));
    }

    // Advance the cache to the last mem_limit positions per lane.
    if (mem && mem_limit > 0) {
        const std::int64_t keep = std::min(mem_limit, mlen + len);
        std::vector<ArrayT<T>> next(static_cast<std::size_t>(cfg_.n_layer));
        for (std::int64_t l = 0; l < cfg_.n_layer; ++l) {
            ArrayT<T> m(Shape{batch * keep, cfg_.d_model});
            const ArrayT<T>& cur = new_inputs[static_cast<std::size_t>(l)];
            const ArrayT<T>* old = mlen > 0 ? &mem->layers[static_cast<std::size_t>(l)] : nullptr;
            for (std::int64_t b = 0; b < batch; ++b)
                for (std::int64_t i = 0; i < keep; ++i) {
                    // position i counts from the end of [old || cur]
                    const std::int64_t from_end = keep - i;
                    const T* src;
                    if (from_end <= len)
                        src = cur.data() + (b * len + (len - from_end)) * cfg_.d_model;
                    else
                        src = old->data() + (b * mlen + (mlen - (from_end - len))) * cfg_.d_model;
                    std::copy_n(src, cfg_.d_model, m.data() + (b * keep + i) * cfg_.d_model);
                }
            next[static_cast<std::size_t>(l)] = std::move(m);
        }
        mem->layers = std::move(next);
        mem->batch = batch;
        mem->len = keep;
    }

    // Output head: tied weights reuse the embedding table (and its
    // projection when present).
    VarT<T> hout = h;
    if (cfg_.d_embed != cfg_.d_model) hout = matmul_nt(hout, param("emb.proj"));
    VarT<T> logits = cfg_.tie_weights ? matmul_nt(hout, emb_w)
                                      : matmul_nt(hout, param("out.weight"));
    logits = add_bias(logits, param("out.bias"));
    return logits;
}

template <typename T>
ArrayT<T> DecoderModelT<T>::forward(const std::vector<int>& tokens, bool use_memory) {
    if (tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
    std::vector<std::int32_t> ids(tokens.begin(), tokens.end());
    NoGradGuard ng;
    VarT<T> logits =
        forward_batch(ids, 1, static_cast<std::int64_t>(ids.size()),
                      use_memory ? &memory_ : nullptr, use_memory ? cfg_.mem_len : 0, nullptr,
                      false, nullptr);
    return softmax_rows(logits).val();
}

template class DecoderModelT<float>;
template class DecoderModelT<double>;

}  // namespace ac
