#pragma once

#include <array>

#include "cfpr/tensor.hpp"
#include "cfpr/volume.hpp"

namespace cfpr {

/// Normalized 2.5D crop around a candidate: size x size pixels over
/// `slabs` consecutive axial slices stored as channels.
struct Patch {
    Tensor pixels;  // {size, size, slabs}
    int candidate_id = -1;
};

constexpr double kHuLow = -1000.0;
constexpr double kHuHigh = 400.0;

inline double normalize_hu(double v) {
    if (v < kHuLow) v = kHuLow;
    if (v > kHuHigh) v = kHuHigh;
    return (v - kHuLow) / (kHuHigh - kHuLow);
}

/// Crops an axial size x size window centered at `center`, taking slabs
/// consecutive slices (slabs odd, centered at center z). Out-of-volume
/// pixels read as air (-1000). Values windowed to [-1000, 400] and
/// mapped to [0,1].
Patch extract_patch(const Volume& vol, const std::array<int, 3>& center, int size = 48,
                    int slabs = 3);

}  // namespace cfpr
