#include "cfpr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "cfpr/error.hpp"
#include "cfpr/rng.hpp"

namespace cfpr {

namespace {

struct Vec3 {
    double x, y, z;
};

// dataset-internal coordinates: voxel units in-plane, z scaled by the
// spacing ratio so shapes are round in physical space
double zscale(const SynthSpec& s) { return s.spacing[2] / s.spacing[0]; }

void paint_blob(Volume& vol, const Vec3& c, double r, double rz, double amp) {
    const auto& d = vol.meta.dims;
    int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)) - 1);
    int x1 = std::min(d[0] - 1, static_cast<int>(std::ceil(c.x + r)) + 1);
    int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)) - 1);
    int y1 = std::min(d[1] - 1, static_cast<int>(std::ceil(c.y + r)) + 1);
    int z0 = std::max(0, static_cast<int>(std::floor(c.z - rz)) - 1);
    int z1 = std::min(d[2] - 1, static_cast<int>(std::ceil(c.z + rz)) + 1);
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double ux = (x - c.x) / r;
                double uy = (y - c.y) / r;
                double uz = (z - c.z) / rz;
                double u2 = ux * ux + uy * uy + uz * uz;
                if (u2 < 1.0) {
                    double w = 1.0 - u2;
                    vol.at(x, y, z) += amp * w * w;
                }
            }
}

// capsule around the segment c +/- halflen * dir, in z-scaled space
void paint_vessel(Volume& vol, const Vec3& c, const Vec3& dir, double halflen, double r, double amp,
                  double zs) {
    const auto& d = vol.meta.dims;
    Vec3 a{c.x - halflen * dir.x, c.y - halflen * dir.y, c.z - halflen * dir.z};
    Vec3 b{c.x + halflen * dir.x, c.y + halflen * dir.y, c.z + halflen * dir.z};
    int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r)) - 1);
    int x1 = std::min(d[0] - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r)) + 1);
    int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r)) - 1);
    int y1 = std::min(d[1] - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r)) + 1);
    int z0 = std::max(0, static_cast<int>(std::floor((std::min(a.z, b.z) - r) / zs)) - 1);
    int z1 = std::min(d[2] - 1, static_cast<int>(std::ceil((std::max(a.z, b.z) + r) / zs)) + 1);
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double qx = x - c.x;
                double qy = y - c.y;
                double qz = z * zs - c.z;
                double t = qx * dir.x + qy * dir.y + qz * dir.z;
                if (t < -halflen) t = -halflen;
                if (t > halflen) t = halflen;
                double ex = qx - t * dir.x;
                double ey = qy - t * dir.y;
                double ez = qz - t * dir.z;
                double u2 = (ex * ex + ey * ey + ez * ez) / (r * r);
                if (u2 < 1.0) {
                    double w = 1.0 - u2;
                    vol.at(x, y, z) += amp * w * w;
                }
            }
}

std::array<int, 3> place_center(RngStream& rng, const SynthSpec& spec,
                                const std::vector<std::array<int, 3>>& avoid, double zs,
                                const char* what, int index) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::array<int, 3> c;
        for (int i = 0; i < 3; ++i) {
            auto u = static_cast<std::size_t>(i);
            c[u] = static_cast<int>(
                rng.uniform_int(spec.margin, spec.dims[u] - 1 - spec.margin));
        }
        bool ok = true;
        double sep2 = spec.min_separation * spec.min_separation;
        for (const auto& p : avoid) {
            double dx = c[0] - p[0];
            double dy = c[1] - p[1];
            double dz = (c[2] - p[2]) * zs;
            if (dx * dx + dy * dy + dz * dz < sep2) {
                ok = false;
                break;
            }
        }
        if (ok) return c;
    }
    throw Error("synthesize_dataset: cannot place " + std::string(what) + " " +
                std::to_string(index) + " after 1000 attempts, reduce min_separation or counts");
}

}  // namespace

void validate_synth_spec(const SynthSpec& spec) {
    if (spec.n_volumes < 1) throw Error("synth spec: n_volumes must be >= 1");
    if (spec.n_positives < 0 || spec.n_negatives < 0)
        throw Error("synth spec: candidate counts must be >= 0");
    for (int i = 0; i < 3; ++i) {
        auto u = static_cast<std::size_t>(i);
        if (spec.dims[u] < 1) throw Error("synth spec: dims must be positive");
        if (!(spec.spacing[u] > 0.0)) throw Error("synth spec: spacing must be positive");
    }
    if (spec.patch_size < 1 || spec.patch_slabs < 1 || spec.patch_slabs % 2 == 0)
        throw Error("synth spec: patch_size must be >= 1 and patch_slabs odd");
    if (spec.patch_size > spec.dims[0] || spec.patch_size > spec.dims[1] ||
        spec.patch_slabs > spec.dims[2])
        throw Error("synth spec: patch geometry " + std::to_string(spec.patch_size) + "x" +
                    std::to_string(spec.patch_size) + "x" + std::to_string(spec.patch_slabs) +
                    " larger than volume " + std::to_string(spec.dims[0]) + "x" +
                    std::to_string(spec.dims[1]) + "x" + std::to_string(spec.dims[2]));
    if (spec.margin < 0) throw Error("synth spec: margin must be >= 0");
    for (int i = 0; i < 3; ++i)
        if (2 * spec.margin + 1 > spec.dims[static_cast<std::size_t>(i)])
            throw Error("synth spec: margin leaves no room for candidate centers");
    auto frac = [](double f) { return f >= 0.0 && f <= 1.0; };
    if (!frac(spec.hard_fraction) || !frac(spec.vessel_fraction) ||
        !frac(spec.axial_vessel_fraction) || !frac(spec.decoy_fraction))
        throw Error("synth spec: fractions must lie in [0,1]");
    if (spec.vessel_fraction + spec.decoy_fraction > 1.0)
        throw Error("synth spec: vessel_fraction + decoy_fraction must be <= 1");
    auto range_ok = [](double lo, double hi) { return lo > 0.0 && hi >= lo; };
    if (!range_ok(spec.blob_radius_lo, spec.blob_radius_hi) ||
        !range_ok(spec.hard_radius_lo, spec.hard_radius_hi) ||
        !range_ok(spec.vessel_radius_lo, spec.vessel_radius_hi) ||
        !range_ok(spec.vessel_halflen_lo, spec.vessel_halflen_hi) ||
        !range_ok(spec.vessel_amp_lo, spec.vessel_amp_hi) ||
        !range_ok(spec.decoy_radius_lo, spec.decoy_radius_hi) ||
        !range_ok(spec.blob_amp_lo, spec.blob_amp_hi) ||
        !range_ok(spec.hard_amp_lo, spec.hard_amp_hi) ||
        !range_ok(spec.decoy_amp_lo, spec.decoy_amp_hi))
        throw Error("synth spec: radius/amplitude ranges must be positive with lo <= hi");
    if (spec.noise_hu < 0) throw Error("synth spec: noise_hu must be >= 0");
    if (spec.min_separation < 0.0) throw Error("synth spec: min_separation must be >= 0");
}

SynthResult synthesize_dataset(const SynthSpec& spec, std::uint64_t seed) {
    validate_synth_spec(spec);
    RngStream root(seed);
    double zs = zscale(spec);

    SynthResult out;
    out.volumes.resize(static_cast<std::size_t>(spec.n_volumes));
    for (int v = 0; v < spec.n_volumes; ++v) {
        auto& vol = out.volumes[static_cast<std::size_t>(v)];
        vol.meta.dims = spec.dims;
        vol.meta.spacing = spec.spacing;
        for (std::size_t i = 0; i < 3; ++i)
            vol.meta.origin[i] = -0.5 * spec.dims[i] * spec.spacing[i];
        vol.meta.element_type = ElementType::Short;
        char name[64];
        std::snprintf(name, sizeof name, "synth-%04d.raw", v);
        vol.meta.data_file = name;
        vol.voxels.assign(vol.meta.voxel_count(), 0.0);
        RngStream noise = root.child("vol", static_cast<std::uint64_t>(v));
        for (auto& vox : vol.voxels)
            vox = spec.background_hu +
                  static_cast<double>(noise.uniform_int(-spec.noise_hu, spec.noise_hu));
    }

    // positive centers per volume, for the separation constraint
    std::vector<std::vector<std::array<int, 3>>> pos_centers(
        static_cast<std::size_t>(spec.n_volumes));

    auto scan_name = [](int v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth-%04d", v);
        return std::string(buf);
    };

    for (int i = 0; i < spec.n_positives; ++i) {
        int v = i % spec.n_volumes;
        auto vu = static_cast<std::size_t>(v);
        RngStream rng = root.child("pos", static_cast<std::uint64_t>(i));
        auto center = place_center(rng, spec, pos_centers[vu], zs, "positive", i);
        pos_centers[vu].push_back(center);
        bool hard = rng.next_unit() < spec.hard_fraction;
        double r = hard ? rng.uniform(spec.hard_radius_lo, spec.hard_radius_hi)
                        : rng.uniform(spec.blob_radius_lo, spec.blob_radius_hi);
        double amp = hard ? rng.uniform(spec.hard_amp_lo, spec.hard_amp_hi)
                          : rng.uniform(spec.blob_amp_lo, spec.blob_amp_hi);
        double rz = r / zs;
        Vec3 c{static_cast<double>(center[0]), static_cast<double>(center[1]),
               static_cast<double>(center[2])};
        paint_blob(out.volumes[vu], c, r, rz, amp);

        Candidate cand;
        cand.scan_id = scan_name(v);
        cand.voxel = center;
        cand.world = voxel_to_world(center, out.volumes[vu].meta);
        cand.label = 1;
        out.candidates.push_back(std::move(cand));
    }

    for (int i = 0; i < spec.n_negatives; ++i) {
        int v = i % spec.n_volumes;
        auto vu = static_cast<std::size_t>(v);
        RngStream rng = root.child("neg", static_cast<std::uint64_t>(i));
        auto center = place_center(rng, spec, pos_centers[vu], zs, "negative", i);
        double pick = rng.next_unit();
        bool vessel = pick < spec.vessel_fraction;
        bool decoy = !vessel && pick < spec.vessel_fraction + spec.decoy_fraction;
        if (vessel) {
            bool axial = rng.next_unit() < spec.axial_vessel_fraction;
            Vec3 dir{};
            if (axial) {
                dir.x = rng.uniform(-0.25, 0.25);
                dir.y = rng.uniform(-0.25, 0.25);
                dir.z = 1.0;
            } else {
                double n2 = 0.0;
                do {
                    dir.x = rng.uniform(-1.0, 1.0);
                    dir.y = rng.uniform(-1.0, 1.0);
                    dir.z = rng.uniform(-1.0, 1.0);
                    n2 = dir.x * dir.x + dir.y * dir.y + dir.z * dir.z;
                } while (n2 < 0.05 || n2 > 1.0);
            }
            double n = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
            dir.x /= n;
            dir.y /= n;
            dir.z /= n;
            double r = rng.uniform(spec.vessel_radius_lo, spec.vessel_radius_hi);
            double halflen = rng.uniform(spec.vessel_halflen_lo, spec.vessel_halflen_hi);
            double amp = rng.uniform(spec.vessel_amp_lo, spec.vessel_amp_hi);
            Vec3 c{static_cast<double>(center[0]), static_cast<double>(center[1]),
                   static_cast<double>(center[2]) * zs};
            paint_vessel(out.volumes[vu], c, dir, halflen, r, amp, zs);
        } else if (decoy) {
            double r = rng.uniform(spec.decoy_radius_lo, spec.decoy_radius_hi);
            double amp = rng.uniform(spec.decoy_amp_lo, spec.decoy_amp_hi);
            Vec3 c{static_cast<double>(center[0]), static_cast<double>(center[1]),
                   static_cast<double>(center[2])};
            paint_blob(out.volumes[vu], c, r, r / zs, amp);
        }
        Candidate cand;
        cand.scan_id = scan_name(v);
        cand.voxel = center;
        cand.world = voxel_to_world(center, out.volumes[vu].meta);
        cand.label = 0;
        out.candidates.push_back(std::move(cand));
    }

    // store as integers so MET_SHORT round-trips exactly
    for (auto& vol : out.volumes)
        for (auto& vox : vol.voxels) {
            long long q = std::llround(vox);
            if (q < -32768) q = -32768;
            if (q > 32767) q = 32767;
            vox = static_cast<double>(q);
        }
    return out;
}

std::string synth_spec_to_json(const SynthSpec& s) {
    nlohmann::json j;
    j["n_volumes"] = s.n_volumes;
    j["dims"] = s.dims;
    j["spacing"] = s.spacing;
    j["n_positives"] = s.n_positives;
    j["n_negatives"] = s.n_negatives;
    j["patch_size"] = s.patch_size;
    j["patch_slabs"] = s.patch_slabs;
    j["margin"] = s.margin;
    j["blob_radius_lo"] = s.blob_radius_lo;
    j["blob_radius_hi"] = s.blob_radius_hi;
    j["blob_amp_lo"] = s.blob_amp_lo;
    j["blob_amp_hi"] = s.blob_amp_hi;
    j["hard_fraction"] = s.hard_fraction;
    j["hard_radius_lo"] = s.hard_radius_lo;
    j["hard_radius_hi"] = s.hard_radius_hi;
    j["hard_amp_lo"] = s.hard_amp_lo;
    j["hard_amp_hi"] = s.hard_amp_hi;
    j["vessel_fraction"] = s.vessel_fraction;
    j["axial_vessel_fraction"] = s.axial_vessel_fraction;
    j["vessel_radius_lo"] = s.vessel_radius_lo;
    j["vessel_radius_hi"] = s.vessel_radius_hi;
    j["vessel_halflen_lo"] = s.vessel_halflen_lo;
    j["vessel_halflen_hi"] = s.vessel_halflen_hi;
    j["vessel_amp_lo"] = s.vessel_amp_lo;
    j["vessel_amp_hi"] = s.vessel_amp_hi;
    j["decoy_fraction"] = s.decoy_fraction;
    j["decoy_radius_lo"] = s.decoy_radius_lo;
    j["decoy_radius_hi"] = s.decoy_radius_hi;
    j["decoy_amp_lo"] = s.decoy_amp_lo;
    j["decoy_amp_hi"] = s.decoy_amp_hi;
    j["background_hu"] = s.background_hu;
    j["noise_hu"] = s.noise_hu;
    j["min_separation"] = s.min_separation;
    return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("synth spec: bad JSON: ") + e.what());
    }
    SynthSpec s;
    try {
        auto get = [&j](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("n_volumes", s.n_volumes);
        get("dims", s.dims);
        get("spacing", s.spacing);
        get("n_positives", s.n_positives);
        get("n_negatives", s.n_negatives);
        get("patch_size", s.patch_size);
        get("patch_slabs", s.patch_slabs);
        get("margin", s.margin);
        get("blob_radius_lo", s.blob_radius_lo);
        get("blob_radius_hi", s.blob_radius_hi);
        get("blob_amp_lo", s.blob_amp_lo);
        get("blob_amp_hi", s.blob_amp_hi);
        get("hard_fraction", s.hard_fraction);
        get("hard_radius_lo", s.hard_radius_lo);
        get("hard_radius_hi", s.hard_radius_hi);
        get("hard_amp_lo", s.hard_amp_lo);
        get("hard_amp_hi", s.hard_amp_hi);
        get("vessel_fraction", s.vessel_fraction);
        get("axial_vessel_fraction", s.axial_vessel_fraction);
        get("vessel_radius_lo", s.vessel_radius_lo);
        get("vessel_radius_hi", s.vessel_radius_hi);
        get("vessel_halflen_lo", s.vessel_halflen_lo);
        get("vessel_halflen_hi", s.vessel_halflen_hi);
        get("vessel_amp_lo", s.vessel_amp_lo);
        get("vessel_amp_hi", s.vessel_amp_hi);
        get("decoy_fraction", s.decoy_fraction);
        get("decoy_radius_lo", s.decoy_radius_lo);
        get("decoy_radius_hi", s.decoy_radius_hi);
        get("decoy_amp_lo", s.decoy_amp_lo);
        get("decoy_amp_hi", s.decoy_amp_hi);
        get("background_hu", s.background_hu);
        get("noise_hu", s.noise_hu);
        get("min_separation", s.min_separation);
    } catch (const std::exception& e) {
        throw Error(std::string("synth spec: bad field: ") + e.what());
    }
    return s;
}

void write_synth_dataset(const SynthResult& result, const SynthSpec& spec, std::uint64_t seed,
                         const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["spec"] = nlohmann::json::parse(synth_spec_to_json(spec));
    manifest["volumes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < result.volumes.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "synth-%04zu.mhd", i);
        write_volume_pair(result.volumes[i], (fs::path(dir) / name).string());
        manifest["volumes"].push_back(name);
    }
    manifest["candidates"] = "candidates.csv";
    int pos = 0, neg = 0;
    for (const auto& c : result.candidates) (c.label == 1 ? pos : neg)++;
    manifest["n_positives"] = pos;
    manifest["n_negatives"] = neg;
    write_candidates_file(result.candidates, (fs::path(dir) / "candidates.csv").string());
    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw Error("cannot write manifest in " + dir);
    mf << manifest.dump(2) << "\n";
}

}  // namespace cfpr
