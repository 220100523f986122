#pragma once
// Deterministic PRNG used everywhere randomness is needed. splitmix64:
// identical seed gives an identical stream on every platform, which the
// reproducibility guarantees depend on.

#include <cmath>
#include <cstdint>

namespace ac {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform index in [0, n). Modulo bias is irrelevant for the tiny n used
    // here and keeps the stream trivially reproducible.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    double uniform() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Box-Muller, one normal per two uniforms (the sine branch is discarded
    // so no state is carried between calls).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Independent substream derived from this seed and a tag.
    Rng fork(std::uint64_t tag) const {
        Rng r(state_ ^ (tag * 0xD1B54A32D192ED03ull + 0x9E3779B97F4A7C15ull));
        r.next_u64();
        return r;
    }

    std::uint64_t seed_state() const { return state_; }

private:
    std::uint64_t state_;
};

}  // namespace ac
