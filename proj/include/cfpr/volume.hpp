#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cfpr {

enum class ElementType { Short, Double };  // MET_SHORT, MET_DOUBLE

/// Geometry and storage description of one CT-like volume, parsed from
/// an ASCII key = value header (MetaImage style).
struct VolumeMeta {
    std::array<int, 3> dims{};        // voxel counts x, y, z
    std::array<double, 3> spacing{};  // mm per voxel
    std::array<double, 3> origin{};   // world mm of voxel (0,0,0)
    ElementType element_type = ElementType::Short;
    std::string data_file;

    std::size_t voxel_count() const;
    std::size_t element_size() const { return element_type == ElementType::Short ? 2 : 8; }
};

struct Volume {
    VolumeMeta meta;
    std::vector<double> voxels;  // x-fastest order: x + dims.x*(y + dims.y*z)

    double at(int x, int y, int z) const {
        return voxels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(meta.dims[0]) *
                          (static_cast<std::size_t>(y) + static_cast<std::size_t>(meta.dims[1]) * z)];
    }
    double& at(int x, int y, int z) {
        return voxels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(meta.dims[0]) *
                          (static_cast<std::size_t>(y) + static_cast<std::size_t>(meta.dims[1]) * z)];
    }
};

/// Parses the header text. Required keys: NDims (must be 3), DimSize,
/// ElementSpacing, Offset, ElementType (MET_SHORT or MET_DOUBLE),
/// ElementDataFile. Unknown keys are ignored. Errors name the key.
VolumeMeta parse_volume_header(const std::string& text);

std::string format_volume_header(const VolumeMeta& meta);

/// Decodes the raw little-endian voxel payload. The byte count must be
/// exactly voxel_count * element_size.
Volume load_volume(const VolumeMeta& meta, const std::string& raw);

std::string encode_voxels(const Volume& vol);

/// Reads header file `path` and its ElementDataFile alongside it.
Volume read_volume_pair(const std::string& header_path);

void write_volume_pair(const Volume& vol, const std::string& header_path);

/// Nearest-voxel conversion: round((world - origin) / spacing), halves
/// away from zero. Throws when the result lies outside the volume,
/// naming the computed index.
std::array<int, 3> world_to_voxel(const std::array<double, 3>& world, const VolumeMeta& meta);

std::array<double, 3> voxel_to_world(const std::array<int, 3>& voxel, const VolumeMeta& meta);

}  // namespace cfpr
