#include "ac/vocab.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace ac {

namespace {

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_printable_byte(unsigned char c) { return c >= 0x20 && c <= 0x7E; }

const std::array<const char*, 3> kSpecials = {"<pad>", "<unk>", "<eos>"};

}  // namespace

const char* granularity_name(Granularity g) {
    return g == Granularity::character ? "character" : "word";
}

Granularity granularity_from_name(const std::string& s) {
    if (s == "character" || s == "char") return Granularity::character;
    if (s == "word") return Granularity::word;
    throw std::invalid_argument("unknown granularity: " + s);
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < n && !is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

Vocabulary Vocabulary::build(const std::string& corpus_text, Granularity g,
                             std::optional<std::int64_t> max_size) {
    Vocabulary v;
    v.granularity_ = g;
    for (const char* s : kSpecials) v.tokens_.push_back(s);

    if (g == Granularity::word) {
        const std::vector<std::string> words = split_words(corpus_text);
        if (words.empty()) throw std::invalid_argument("build_vocab: empty corpus");
        std::unordered_map<std::string, std::int64_t> freq;
        for (const auto& w : words) ++freq[w];
        std::vector<std::pair<std::string, std::int64_t>> by_freq(freq.begin(), freq.end());
        std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (const auto& [w, f] : by_freq) {
            if (max_size && static_cast<std::int64_t>(v.tokens_.size()) >= *max_size) break;
            v.tokens_.push_back(w);
        }
    } else {
        if (corpus_text.empty()) throw std::invalid_argument("build_vocab: empty corpus");
        std::array<std::int64_t, 256> freq{};
        for (unsigned char c : corpus_text)
            if (is_printable_byte(c)) ++freq[c];
        freq[static_cast<unsigned char>(' ')] =
            std::max<std::int64_t>(freq[static_cast<unsigned char>(' ')], 1);  // always present
        std::vector<unsigned char> chars;
        for (int c = 0x20; c <= 0x7E; ++c)
            if (freq[c] > 0) chars.push_back(static_cast<unsigned char>(c));
        std::sort(chars.begin(), chars.end(), [&](unsigned char a, unsigned char b) {
            if (freq[a] != freq[b]) return freq[a] > freq[b];
            return a < b;
        });
        for (unsigned char c : chars) {
            if (static_cast<std::int64_t>(v.tokens_.size()) >= kCharCap) break;
            v.tokens_.push_back(std::string(1, static_cast<char>(c)));
        }
    }
    v.index_tokens();
    return v;
}

void Vocabulary::index_tokens() {
    ids_.clear();
    ids_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_[tokens_[i]] = static_cast<int>(i);
    if (granularity_ == Granularity::character) {
        auto it = ids_.find(" ");
        space_id_ = it == ids_.end() ? -1 : it->second;
    }
}

int Vocabulary::space_id() const {
    if (granularity_ != Granularity::character || space_id_ < 0)
        throw std::logic_error("space_id: character vocabulary required");
    return space_id_;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
    std::vector<int> out;
    if (granularity_ == Granularity::word) {
        for (const auto& w : split_words(text)) {
            auto it = ids_.find(w);
            out.push_back(it == ids_.end() ? kUnk : it->second);
        }
    } else {
        out.reserve(text.size());
        std::string one(1, '\0');
        for (char c : text) {
            one[0] = c;
            auto it = ids_.find(one);
            out.push_back(it == ids_.end() ? kUnk : it->second);
        }
    }
    return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::string out;
    bool first = true;
    for (int id : ids) {
        if (id < 0 || id >= size())
            throw std::out_of_range("decode: id " + std::to_string(id) + " outside vocabulary");
        if (granularity_ == Granularity::word) {
            if (is_special(id) && id != kUnk) continue;
            if (!first) out += ' ';
            out += tokens_[static_cast<std::size_t>(id)];
            first = false;
        } else {
            if (is_special(id)) continue;
            out += tokens_[static_cast<std::size_t>(id)];
        }
    }
    return out;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size())
        throw std::out_of_range("token: id " + std::to_string(id) + " outside vocabulary");
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocabulary::id_of(const std::string& tok) const {
    auto it = ids_.find(tok);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

nlohmann::json Vocabulary::to_json() const {
    nlohmann::json j;
    j["granularity"] = granularity_name(granularity_);
    if (granularity_ == Granularity::word) {
        j["tokens"] = std::vector<std::string>(tokens_.begin() + 3, tokens_.end());
    } else {
        std::vector<int> bytes;
        for (std::size_t i = 3; i < tokens_.size(); ++i)
            bytes.push_back(static_cast<unsigned char>(tokens_[i][0]));
        j["byte_tokens"] = bytes;
    }
    return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    Vocabulary v;
    v.granularity_ = granularity_from_name(j.at("granularity").get<std::string>());
    for (const char* s : kSpecials) v.tokens_.push_back(s);
    if (v.granularity_ == Granularity::word) {
        for (const auto& t : j.at("tokens")) v.tokens_.push_back(t.get<std::string>());
    } else {
        for (const auto& b : j.at("byte_tokens"))
            v.tokens_.push_back(std::string(1, static_cast<char>(b.get<int>())));
    }
    v.index_tokens();
    return v;
}

}  // namespace ac
