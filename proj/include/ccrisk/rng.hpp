#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>
#include <vector>

// Self-contained random streams. Every consumer derives its own stream from
// (seed, purpose) so results do not depend on evaluation order or chunking.

namespace ccrisk {

// splitmix64; passes BigCrush and is enough for Monte Carlo work.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

// One scrambling round over the mixed inputs; used to fan a base seed out into
// independent named or indexed streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return g();
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    // FNV-1a over the stream name.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return derive_seed(seed, h);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t stream) {
    return derive_seed(derive_seed(seed, name), stream);
}

// Uniform on (0,1); 53-bit resolution, never returns 0 or 1.
inline double uniform01(SplitMix64& g) {
    while (true) {
        double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

// Uniform integer in [0, n); rejection sampling, n >= 1.
inline std::uint64_t uniform_below(SplitMix64& g, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    while (true) {
        std::uint64_t v = g();
        if (v < limit) return v % n;
    }
}

// Standard normal via Box-Muller (cosine branch only, so each draw consumes a
// fixed two uniforms).
inline double gaussian(SplitMix64& g) {
    const double u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <class T>
void shuffle(std::vector<T>& v, SplitMix64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace ccrisk
