#include "cfpr/patch.hpp"

#include "cfpr/error.hpp"

namespace cfpr {

Patch extract_patch(const Volume& vol, const std::array<int, 3>& center, int size, int slabs) {
    if (size < 1) throw Error("extract_patch: size must be >= 1, got " + std::to_string(size));
    if (slabs < 1 || slabs % 2 == 0)
        throw Error("extract_patch: slabs must be odd and >= 1, got " + std::to_string(slabs));
    Patch patch;
    patch.pixels = Tensor({size, size, slabs});
    int half = size / 2;
    int zhalf = slabs / 2;
    const auto& d = vol.meta.dims;
    for (int y = 0; y < size; ++y) {
        int vy = center[1] - half + y;
        for (int x = 0; x < size; ++x) {
            int vx = center[0] - half + x;
            for (int s = 0; s < slabs; ++s) {
                int vz = center[2] - zhalf + s;
                double raw = kHuLow;
                if (vx >= 0 && vx < d[0] && vy >= 0 && vy < d[1] && vz >= 0 && vz < d[2])
                    raw = vol.at(vx, vy, vz);
                patch.pixels.at(y, x, s) = normalize_hu(raw);
            }
        }
    }
    return patch;
}

}  // namespace cfpr
