#include "cfpr/volume.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfpr/error.hpp"

namespace cfpr {

std::size_t VolumeMeta::voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

template <typename T, typename Parse>
std::array<T, 3> parse3(const std::string& key, const std::string& value, Parse parse) {
    auto toks = split_ws(value);
    if (toks.size() != 3) throw Error("header key " + key + " needs 3 values, got " + value);
    std::array<T, 3> out;
    for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] = parse(key, toks[static_cast<std::size_t>(i)]);
    return out;
}

int parse_int_tok(const std::string& key, const std::string& tok) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error("header key " + key + ": bad integer " + tok);
    }
}

double parse_double_tok(const std::string& key, const std::string& tok) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error("header key " + key + ": bad number " + tok);
    }
}

}  // namespace

VolumeMeta parse_volume_header(const std::string& text) {
    VolumeMeta meta;
    bool have_ndims = false, have_dims = false, have_spacing = false;
    bool have_offset = false, have_type = false, have_file = false;

    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw Error("header line missing '=': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "NDims") {
            if (parse_int_tok(key, value) != 3) throw Error("header key NDims must be 3, got " + value);
            have_ndims = true;
        } else if (key == "DimSize") {
            meta.dims = parse3<int>(key, value, parse_int_tok);
            for (int d : meta.dims)
                if (d <= 0) throw Error("header key DimSize values must be positive, got " + value);
            have_dims = true;
        } else if (key == "ElementSpacing") {
            meta.spacing = parse3<double>(key, value, parse_double_tok);
            for (double s : meta.spacing)
                if (!(s > 0.0)) throw Error("header key ElementSpacing values must be positive, got " + value);
            have_spacing = true;
        } else if (key == "Offset") {
            meta.origin = parse3<double>(key, value, parse_double_tok);
            have_offset = true;
        } else if (key == "ElementType") {
            if (value == "MET_SHORT")
                meta.element_type = ElementType::Short;
            else if (value == "MET_DOUBLE")
                meta.element_type = ElementType::Double;
            else
                throw Error("header key ElementType: unsupported type " + value);
            have_type = true;
        } else if (key == "ElementDataFile") {
            if (value.empty()) throw Error("header key ElementDataFile is empty");
            meta.data_file = value;
            have_file = true;
        }
        // other keys are tolerated and skipped
    }
    if (!have_ndims) throw Error("header missing key NDims");
    if (!have_dims) throw Error("header missing key DimSize");
    if (!have_spacing) throw Error("header missing key ElementSpacing");
    if (!have_offset) throw Error("header missing key Offset");
    if (!have_type) throw Error("header missing key ElementType");
    if (!have_file) throw Error("header missing key ElementDataFile");
    return meta;
}

std::string format_volume_header(const VolumeMeta& meta) {
    std::ostringstream os;
    os << "NDims = 3\n";
    os << "DimSize = " << meta.dims[0] << " " << meta.dims[1] << " " << meta.dims[2] << "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "ElementSpacing = %.17g %.17g %.17g\n", meta.spacing[0],
                  meta.spacing[1], meta.spacing[2]);
    os << buf;
    std::snprintf(buf, sizeof buf, "Offset = %.17g %.17g %.17g\n", meta.origin[0], meta.origin[1],
                  meta.origin[2]);
    os << buf;
    os << "ElementType = " << (meta.element_type == ElementType::Short ? "MET_SHORT" : "MET_DOUBLE")
       << "\n";
    os << "ElementDataFile = " << meta.data_file << "\n";
    return os.str();
}

Volume load_volume(const VolumeMeta& meta, const std::string& raw) {
    std::size_t want = meta.voxel_count() * meta.element_size();
    if (raw.size() != want)
        throw Error("voxel payload size mismatch: expected " + std::to_string(want) + " bytes, got " +
                    std::to_string(raw.size()));
    Volume vol;
    vol.meta = meta;
    vol.voxels.resize(meta.voxel_count());
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    if (meta.element_type == ElementType::Short) {
        for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
            std::uint16_t u = static_cast<std::uint16_t>(p[2 * i]) |
                              static_cast<std::uint16_t>(static_cast<std::uint16_t>(p[2 * i + 1]) << 8);
            vol.voxels[i] = static_cast<double>(static_cast<std::int16_t>(u));
        }
    } else {
        for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
            std::uint64_t u = 0;
            for (int b = 7; b >= 0; --b)
                u = (u << 8) | p[8 * i + static_cast<std::size_t>(b)];
            double d;
            std::memcpy(&d, &u, 8);
            vol.voxels[i] = d;
        }
    }
    return vol;
}

std::string encode_voxels(const Volume& vol) {
    std::string raw;
    raw.resize(vol.meta.voxel_count() * vol.meta.element_size());
    auto* p = reinterpret_cast<unsigned char*>(raw.data());
    if (vol.meta.element_type == ElementType::Short) {
        for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
            double v = vol.voxels[i];
            if (v < -32768.0 || v > 32767.0 || v != std::floor(v))
                throw Error("voxel " + std::to_string(i) + " not representable as int16: " +
                            std::to_string(v));
            auto s = static_cast<std::int16_t>(v);
            auto u = static_cast<std::uint16_t>(s);
            p[2 * i] = static_cast<unsigned char>(u & 0xff);
            p[2 * i + 1] = static_cast<unsigned char>(u >> 8);
        }
    } else {
        for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
            std::uint64_t u;
            std::memcpy(&u, &vol.voxels[i], 8);
            for (int b = 0; b < 8; ++b)
                p[8 * i + static_cast<std::size_t>(b)] = static_cast<unsigned char>((u >> (8 * b)) & 0xff);
        }
    }
    return raw;
}

Volume read_volume_pair(const std::string& header_path) {
    std::ifstream hf(header_path);
    if (!hf) throw Error("cannot open volume header " + header_path);
    std::ostringstream hs;
    hs << hf.rdbuf();
    VolumeMeta meta = parse_volume_header(hs.str());

    std::filesystem::path dir = std::filesystem::path(header_path).parent_path();
    std::filesystem::path data_path = dir / meta.data_file;
    std::ifstream df(data_path, std::ios::binary);
    if (!df) throw Error("cannot open voxel data " + data_path.string());
    std::ostringstream ds;
    ds << df.rdbuf();
    return load_volume(meta, ds.str());
}

void write_volume_pair(const Volume& vol, const std::string& header_path) {
    std::filesystem::path dir = std::filesystem::path(header_path).parent_path();
    std::filesystem::path data_path = dir / vol.meta.data_file;
    {
        std::ofstream df(data_path, std::ios::binary);
        if (!df) throw Error("cannot write voxel data " + data_path.string());
        std::string raw = encode_voxels(vol);
        df.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    }
    std::ofstream hf(header_path);
    if (!hf) throw Error("cannot write volume header " + header_path);
    hf << format_volume_header(vol.meta);
}

std::array<int, 3> world_to_voxel(const std::array<double, 3>& world, const VolumeMeta& meta) {
    std::array<int, 3> vox;
    for (int i = 0; i < 3; ++i) {
        auto u = static_cast<std::size_t>(i);
        double c = (world[u] - meta.origin[u]) / meta.spacing[u];
        long long r = std::llround(c);
        if (r < 0 || r >= meta.dims[u])
            throw Error("world point maps outside volume: axis " + std::to_string(i) + " index " +
                        std::to_string(r) + " not in [0, " + std::to_string(meta.dims[u]) + ")");
        vox[u] = static_cast<int>(r);
    }
    return vox;
}

std::array<double, 3> voxel_to_world(const std::array<int, 3>& voxel, const VolumeMeta& meta) {
    std::array<double, 3> w;
    for (std::size_t i = 0; i < 3; ++i)
        w[i] = meta.origin[i] + meta.spacing[i] * voxel[i];
    return w;
}

}  // namespace cfpr
