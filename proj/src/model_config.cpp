#include "ac/model_config.hpp"

#include <stdexcept>

#include "nlohmann/json.hpp"

namespace ac {

const char* method_name(Method m) {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::word_segment: return "word_segment";
        case Method::char_pool_sum: return "char_pool_sum";
        case Method::char_pool_mean: return "char_pool_mean";
        case Method::char_pool_max: return "char_pool_max";
    }
    return "?";
}

Method method_from_name(const std::string& s) {
    if (s == "baseline") return Method::baseline;
    if (s == "word_segment") return Method::word_segment;
    if (s == "char_pool_sum") return Method::char_pool_sum;
    if (s == "char_pool_mean") return Method::char_pool_mean;
    if (s == "char_pool_max") return Method::char_pool_max;
    throw std::invalid_argument("unknown method: " + s);
}

bool is_pool_method(Method m) {
    return m == Method::char_pool_sum || m == Method::char_pool_mean ||
           m == Method::char_pool_max;
}

void ModelConfig::validate() const {
    auto positive = [](std::int64_t v, const char* name) {
        if (v <= 0)
            throw std::invalid_argument(std::string("ModelConfig: ") + name +
                                        " must be positive, got " + std::to_string(v));
    };
    positive(n_layer, "n_layer");
    positive(n_head, "n_head");
    positive(d_head, "d_head");
    positive(d_model, "d_model");
    positive(d_embed, "d_embed");
    positive(d_inner, "d_inner");
    positive(tgt_len, "tgt_len");
    positive(vocab_size, "vocab_size");
    positive(max_words_per_seq, "max_words_per_seq");
    if (mem_len < 0 || eval_mem_len < 0)
        throw std::invalid_argument("ModelConfig: memory lengths must be nonnegative");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("ModelConfig: dropout must be in [0,1)");
    if (adaptive) {
        if (adaptive_div < 1)
            throw std::invalid_argument("ModelConfig: adaptive_div must be >= 1");
        std::int64_t prev = 0;
        for (std::int64_t c : adaptive_cutoffs) {
            if (c <= prev)
                throw std::invalid_argument(
                    "ModelConfig: adaptive_cutoffs must be strictly increasing");
            if (c >= vocab_size)
                throw std::invalid_argument("ModelConfig: adaptive cutoff " + std::to_string(c) +
                                            " must be < vocab_size " +
                                            std::to_string(vocab_size));
            prev = c;
        }
    }
    if (method != Method::baseline) {
        if (granularity != Granularity::character)
            throw std::invalid_argument("ModelConfig: method " +
                                        std::string(method_name(method)) +
                                        " requires character granularity");
        if (d_embed != d_model)
            throw std::invalid_argument(
                "ModelConfig: word-information methods require d_embed == d_model");
        if (space_token_id < 0)
            throw std::invalid_argument(
                "ModelConfig: word-information methods require space_token_id");
    }
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j;
    j["n_layer"] = n_layer;
    j["n_head"] = n_head;
    j["d_head"] = d_head;
    j["d_model"] = d_model;
    j["d_embed"] = d_embed;
    j["d_inner"] = d_inner;
    j["tgt_len"] = tgt_len;
    j["mem_len"] = mem_len;
    j["eval_mem_len"] = eval_mem_len;
    j["vocab_size"] = vocab_size;
    j["granularity"] = granularity_name(granularity);
    j["adaptive"] = adaptive;
    j["adaptive_cutoffs"] = adaptive_cutoffs;
    j["adaptive_div"] = adaptive_div;
    j["tie_weights"] = tie_weights;
    j["method"] = method_name(method);
    j["max_words_per_seq"] = max_words_per_seq;
    j["dropout"] = dropout;
    j["space_token_id"] = space_token_id;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.n_layer = j.at("n_layer").get<std::int64_t>();
    c.n_head = j.at("n_head").get<std::int64_t>();
    c.d_head = j.at("d_head").get<std::int64_t>();
    c.d_model = j.at("d_model").get<std::int64_t>();
    c.d_embed = j.at("d_embed").get<std::int64_t>();
    c.d_inner = j.at("d_inner").get<std::int64_t>();
    c.tgt_len = j.at("tgt_len").get<std::int64_t>();
    c.mem_len = j.at("mem_len").get<std::int64_t>();
    c.eval_mem_len = j.at("eval_mem_len").get<std::int64_t>();
    c.vocab_size = j.at("vocab_size").get<std::int64_t>();
    c.granularity = granularity_from_name(j.at("granularity").get<std::string>());
    c.adaptive = j.at("adaptive").get<bool>();
    c.adaptive_cutoffs = j.at("adaptive_cutoffs").get<std::vector<std::int64_t>>();
    c.adaptive_div = j.at("adaptive_div").get<std::int64_t>();
    c.tie_weights = j.at("tie_weights").get<bool>();
    c.method = method_from_name(j.at("method").get<std::string>());
    c.max_words_per_seq = j.at("max_words_per_seq").get<std::int64_t>();
    c.dropout = j.at("dropout").get<double>();
    c.space_token_id = j.at("space_token_id").get<int>();
    return c;
}

}  // namespace ac
