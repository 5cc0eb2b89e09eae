#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cfpr {

/// Deterministic random stream based on SplitMix64.
///
/// The generator is pure 64-bit integer arithmetic, so a given seed
/// produces the same sequence on every platform. Sub-streams for
/// independent work units (folds, stages, volumes) are derived with
/// child(), which hashes (seed, tag, a, b) through the SplitMix64
/// finalizer; parallel consumers therefore never share state.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 random mantissa bits.
    double next_unit();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Independent stream keyed by (original seed, tag, a, b).
    RngStream child(std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0) const;

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by the stream; element order afterwards
/// depends only on the stream state.
template <typename T>
void shuffle(std::vector<T>& v, RngStream& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace cfpr
