#pragma once

#include <cstdint>
#include <vector>

namespace agekit {

/// splitmix64 step; used to expand seeds into generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ generator with splitmix64 seeding.
///
/// The algorithm, the stream-derivation rule, and the uniform/normal
/// mappings are pinned in docs/FORMATS.md with test vectors so that a
/// given (seed, stream) reproduces the same values on any platform.
class Rng {
public:
    /// Streams let one logical seed drive several independent draws
    /// (ages vs. noise vs. weight init) without cross-contamination.
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n), n > 0. Unbiased via rejection.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller; the sine partner is cached.
    double normal();

    /// Fisher-Yates shuffle, high index down to 1.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace agekit
