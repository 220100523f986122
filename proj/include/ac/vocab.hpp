#pragma once
// Token <-> id maps for character or word granularity.
//
// Ids are contiguous: specials first (<pad>=0, <unk>=1, <eos>=2), then
// tokens. Character vocabularies hold single-byte tokens: ASCII-printable
// bytes observed in the corpus plus the space character, capped at 128 ids
// total; anything else encodes to <unk>. Word vocabularies are ordered by
// descending frequency then lexicographically.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlohmann/json_fwd.hpp"

namespace ac {

enum class Granularity { character, word };

const char* granularity_name(Granularity g);
Granularity granularity_from_name(const std::string& s);

// Splits on runs of whitespace; no empty tokens.
std::vector<std::string> split_words(const std::string& text);

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kEos = 2;
    static constexpr std::int64_t kCharCap = 128;

    // max_size caps the total vocabulary size (specials included); only
    // meaningful for word granularity. Throws on an empty corpus.
    static Vocabulary build(const std::string& corpus_text, Granularity g,
                            std::optional<std::int64_t> max_size = std::nullopt);

    Granularity granularity() const { return granularity_; }
    std::int64_t size() const { return static_cast<std::int64_t>(tokens_.size()); }
    int pad_id() const { return kPad; }
    int unk_id() const { return kUnk; }
    int eos_id() const { return kEos; }
    // Character granularity only: id of the space token.
    int space_id() const;

    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& ids) const;
    const std::string& token(int id) const;
    std::optional<int> id_of(const std::string& tok) const;
    bool is_special(int id) const { return id >= 0 && id < 3; }

    nlohmann::json to_json() const;
    static Vocabulary from_json(const nlohmann::json& j);

private:
    Vocabulary() = default;
    void index_tokens();

    Granularity granularity_ = Granularity::character;
    std::vector<std::string> tokens_;  // position = id
    std::unordered_map<std::string, int> ids_;
    int space_id_ = -1;
};

// The spec-facing tokenize operation; a total function.
inline std::vector<int> tokenize(const std::string& text, const Vocabulary& v) {
    return v.encode(text);
}

}  // namespace ac
