#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ac/vocab.hpp"

namespace ac {

enum class Method {
    baseline,
    word_segment,
    char_pool_sum,
    char_pool_mean,
    char_pool_max,
};

const char* method_name(Method m);
Method method_from_name(const std::string& s);
bool is_pool_method(Method m);

struct ModelConfig {
    std::int64_t n_layer = 2;
    std::int64_t n_head = 2;
    std::int64_t d_head = 16;
    std::int64_t d_model = 32;
    std::int64_t d_embed = 32;
    std::int64_t d_inner = 64;
    std::int64_t tgt_len = 64;
    std::int64_t mem_len = 64;
    std::int64_t eval_mem_len = 64;
    std::int64_t vocab_size = 0;
    Granularity granularity = Granularity::character;
    bool adaptive = false;
    std::vector<std::int64_t> adaptive_cutoffs = {20000, 40000, 200000};
    std::int64_t adaptive_div = 4;
    bool tie_weights = true;
    Method method = Method::baseline;
    std::int64_t max_words_per_seq = 512;
    double dropout = 0.1;
    // Token id of the space character; required by the word-information
    // methods to find word boundaries. Set from the vocabulary.
    int space_token_id = -1;

    // Throws std::invalid_argument naming the violated constraint.
    void validate() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace ac
