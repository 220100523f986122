#include "ac/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace ac {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'C', 'L', 'M'};

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error(std::string("checkpoint truncated while reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const DecoderModel& model, const Vocabulary& vocab,
                     const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);

    nlohmann::json header;
    header["config"] = model.config().to_json();
    header["vocab"] = vocab.to_json();
    const std::string hj = header.dump();

    os.write(kMagic, 4);
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint64_t>(os, hj.size());
    os.write(hj.data(), static_cast<std::streamsize>(hj.size()));

    std::vector<const ParamT<float>*> sorted;
    for (const auto& p : model.params()) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->name < b->name; });

    put<std::uint64_t>(os, sorted.size());
    for (const auto* p : sorted) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        const auto& a = p->var.val();
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.shape.nd));
        for (int i = 0; i < a.shape.nd; ++i) put<std::int64_t>(os, a.shape[i]);
        os.write(reinterpret_cast<const char*>(a.data()),
                 static_cast<std::streamsize>(a.numel() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    const auto version = get<std::uint32_t>(is, "version");
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint format version mismatch: file has " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
    const auto hlen = get<std::uint64_t>(is, "header length");
    std::string hj(hlen, '\0');
    is.read(hj.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw std::runtime_error("checkpoint truncated while reading header");

    nlohmann::json header = nlohmann::json::parse(hj);
    ModelConfig cfg = ModelConfig::from_json(header.at("config"));
    Vocabulary vocab = Vocabulary::from_json(header.at("vocab"));

    Rng rng(0);  // values are overwritten below
    LoadedModel out{DecoderModel(cfg, rng), std::move(vocab)};

    const auto n_tensors = get<std::uint64_t>(is, "tensor count");
    if (n_tensors != out.model.params().size())
        throw std::runtime_error("checkpoint tensor count " + std::to_string(n_tensors) +
                                 " does not match config plan of " +
                                 std::to_string(out.model.params().size()));
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        const auto name_len = get<std::uint32_t>(is, "tensor name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("checkpoint truncated while reading tensor name");
        if (!out.model.has_param(name))
            throw std::runtime_error("checkpoint tensor " + name + " not in config plan");
        auto& dst = out.model.param(name).val();
        const auto nd = get<std::uint32_t>(is, "tensor rank");
        Shape s;
        if (nd > 4) throw std::runtime_error("checkpoint tensor " + name + " has rank > 4");
        for (std::uint32_t d = 0; d < nd; ++d) {
            s.d[s.nd++] = get<std::int64_t>(is, "tensor dim");
        }
        if (s != dst.shape)
            throw std::runtime_error("checkpoint tensor shape mismatch for " + name + ": " +
                                     s.str() + " vs " + dst.shape.str());
        is.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.numel() * sizeof(float)));
        if (!is) throw std::runtime_error("checkpoint truncated while reading tensor " + name);
    }
    return out;
}

}  // namespace ac
