#include "ac/param_plan.hpp"

#include <stdexcept>

namespace ac {

const char* component_name(Component c) {
    switch (c) {
        case Component::AdaEmb: return "AdaEmb";
        case Component::Attn: return "Attn";
        case Component::FFN: return "FFN";
        case Component::Softmax: return "Softmax";
    }
    return "?";
}

std::int64_t ComponentBreakdown::of(Component c) const {
    switch (c) {
        case Component::AdaEmb: return ada_emb;
        case Component::Attn: return attn;
        case Component::FFN: return ffn;
        case Component::Softmax: return softmax;
    }
    return 0;
}

double ComponentBreakdown::share(Component c) const {
    const std::int64_t t = total();
    return t == 0 ? 0.0 : 100.0 * static_cast<double>(of(c)) / static_cast<double>(t);
}

std::vector<AdaptiveCluster> adaptive_clusters(const ModelConfig& cfg) {
    std::vector<AdaptiveCluster> out;
    std::vector<std::int64_t> bounds;
    bounds.push_back(0);
    for (std::int64_t c : cfg.adaptive_cutoffs) bounds.push_back(c);
    bounds.push_back(cfg.vocab_size);
    std::int64_t dim = cfg.d_embed;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        AdaptiveCluster cl;
        cl.lo = bounds[i];
        cl.hi = bounds[i + 1];
        cl.dim = std::max<std::int64_t>(1, dim);
        // A projection back to d_model exists for every cluster when the
        // dimensions shrink, and for the head cluster whenever it differs
        // from d_model.
        cl.has_proj = cfg.adaptive_div != 1 || cl.dim != cfg.d_model;
        out.push_back(cl);
        if (cfg.adaptive_div > 1) dim = dim / cfg.adaptive_div;
    }
    return out;
}

std::vector<ParamSpec> plan_tensors(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> plan;
    auto push = [&](std::string name, Shape shape, Component comp,
                    ParamSpec::Init init = ParamSpec::Init::normal) {
        plan.push_back({std::move(name), shape, comp, init});
    };

    if (cfg.adaptive) {
        const auto clusters = adaptive_clusters(cfg);
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            const auto& cl = clusters[i];
            push("emb.cluster" + std::to_string(i) + ".weight", Shape{cl.hi - cl.lo, cl.dim},
                 Component::AdaEmb);
            if (cl.has_proj)
                push("emb.cluster" + std::to_string(i) + ".proj", Shape{cl.dim, cfg.d_model},
                     Component::AdaEmb);
        }
        // Tied adaptive softmax: shared tables plus a cluster head and the
        // per-token output bias.
        const auto n_clusters = static_cast<std::int64_t>(cfg.adaptive_cutoffs.size());
        push("out.cluster_weight", Shape{n_clusters, cfg.d_model}, Component::Softmax);
        push("out.cluster_bias", Shape{n_clusters}, Component::Softmax, ParamSpec::Init::zeros);
        push("out.bias", Shape{cfg.vocab_size}, Component::Softmax, ParamSpec::Init::zeros);
    } else {
        push("emb.weight", Shape{cfg.vocab_size, cfg.d_embed}, Component::AdaEmb);
        if (cfg.d_embed != cfg.d_model)
            push("emb.proj", Shape{cfg.d_embed, cfg.d_model}, Component::AdaEmb);
        if (!cfg.tie_weights)
            push("out.weight", Shape{cfg.vocab_size, cfg.d_embed}, Component::Softmax);
        push("out.bias", Shape{cfg.vocab_size}, Component::Softmax, ParamSpec::Init::zeros);
    }

    if (cfg.method == Method::word_segment)
        push("seg.weight", Shape{cfg.max_words_per_seq, cfg.d_embed}, Component::AdaEmb);

    const std::int64_t hd = cfg.n_head * cfg.d_head;
    for (std::int64_t l = 0; l < cfg.n_layer; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        push(p + "attn.qkv_w", Shape{cfg.d_model, 3 * hd}, Component::Attn);
        push(p + "attn.o_w", Shape{hd, cfg.d_model}, Component::Attn);
        push(p + "attn.r_w", Shape{cfg.d_model, hd}, Component::Attn);
        push(p + "attn.u", Shape{hd}, Component::Attn);
        push(p + "attn.v", Shape{hd}, Component::Attn);
        push(p + "attn.ln_g", Shape{cfg.d_model}, Component::Attn, ParamSpec::Init::ones);
        push(p + "attn.ln_b", Shape{cfg.d_model}, Component::Attn, ParamSpec::Init::zeros);
        push(p + "ffn.w1", Shape{cfg.d_model, cfg.d_inner}, Component::FFN);
        push(p + "ffn.b1", Shape{cfg.d_inner}, Component::FFN, ParamSpec::Init::zeros);
        push(p + "ffn.w2", Shape{cfg.d_inner, cfg.d_model}, Component::FFN);
        push(p + "ffn.b2", Shape{cfg.d_model}, Component::FFN, ParamSpec::Init::zeros);
        push(p + "ffn.ln_g", Shape{cfg.d_model}, Component::FFN, ParamSpec::Init::ones);
        push(p + "ffn.ln_b", Shape{cfg.d_model}, Component::FFN, ParamSpec::Init::zeros);
    }
    return plan;
}

ComponentBreakdown count_params(const ModelConfig& cfg) {
    cfg.validate();
    ComponentBreakdown b;
    if (cfg.adaptive) {
        for (const auto& cl : adaptive_clusters(cfg)) {
            b.ada_emb += (cl.hi - cl.lo) * cl.dim;
            if (cl.has_proj) b.ada_emb += cl.dim * cfg.d_model;
        }
        const auto n_clusters = static_cast<std::int64_t>(cfg.adaptive_cutoffs.size());
        b.softmax += n_clusters * cfg.d_model + n_clusters + cfg.vocab_size;
    } else {
        b.ada_emb += cfg.vocab_size * cfg.d_embed;
        if (cfg.d_embed != cfg.d_model) b.ada_emb += cfg.d_embed * cfg.d_model;
        if (!cfg.tie_weights) b.softmax += cfg.vocab_size * cfg.d_embed;
        b.softmax += cfg.vocab_size;
    }
    if (cfg.method == Method::word_segment) b.ada_emb += cfg.max_words_per_seq * cfg.d_embed;

    const std::int64_t hd = cfg.n_head * cfg.d_head;
    b.attn = cfg.n_layer * (5 * cfg.d_model * hd + 2 * hd + 2 * cfg.d_model);
    b.ffn = cfg.n_layer * (2 * cfg.d_model * cfg.d_inner + cfg.d_inner + 3 * cfg.d_model);
    return b;
}

}  // namespace ac
