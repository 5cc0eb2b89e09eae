#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "cfpr/candidates.hpp"
#include "cfpr/error.hpp"
#include "cfpr/patch.hpp"
#include "cfpr/volume.hpp"

using cfpr::Candidate;
using cfpr::Volume;

namespace {

std::string msg_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const cfpr::Error& e) {
        return e.what();
    }
    return "";
}

Volume ramp_volume(int nx, int ny, int nz) {
    Volume v;
    v.meta.dims = {nx, ny, nz};
    v.meta.spacing = {1.0, 1.0, 1.0};
    v.meta.origin = {0.0, 0.0, 0.0};
    v.meta.element_type = cfpr::ElementType::Short;
    v.meta.data_file = "ramp.raw";
    v.voxels.resize(v.meta.voxel_count());
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) v.at(x, y, z) = -600.0 + x + 10.0 * y + 100.0 * z;
    return v;
}

}  // namespace

TEST_CASE("candidates parse back field for field") {
    std::string csv =
        "seriesuid,coordX,coordY,coordZ,class\n"
        "1.3.6.1.4.1.14519.5.2.1,-56.08,-67.85,-311.92,0\n"
        "scan-b,103.75,-211.93,-227.12,1\n";
    auto rows = cfpr::parse_candidates(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scan_id == "1.3.6.1.4.1.14519.5.2.1");
    CHECK(rows[0].world == std::array<double, 3>{-56.08, -67.85, -311.92});
    CHECK(rows[0].label == 0);
    CHECK_FALSE(rows[0].probability.has_value());
    CHECK(rows[1].scan_id == "scan-b");
    CHECK(rows[1].label == 1);
}

TEST_CASE("candidate parse errors carry the row number") {
    std::string bad_label =
        "seriesuid,coordX,coordY,coordZ,class\n"
        "s,1,2,3,1\n"
        "s,4,5,6,2\n";
    std::string m = msg_of([&] { cfpr::parse_candidates(bad_label); });
    CHECK(m.find("row 3") != std::string::npos);

    std::string bad_arity =
        "seriesuid,coordX,coordY,coordZ,class\n"
        "s,1,2,3\n";
    m = msg_of([&] { cfpr::parse_candidates(bad_arity); });
    CHECK(m.find("row 2") != std::string::npos);

    std::string bad_number =
        "seriesuid,coordX,coordY,coordZ,class\n"
        "s,1,two,3,0\n";
    m = msg_of([&] { cfpr::parse_candidates(bad_number); });
    CHECK(m.find("row 2") != std::string::npos);

    CHECK_THROWS_AS(cfpr::parse_candidates("series,x,y,z,label\ns,1,2,3,0\n"), cfpr::Error);
    CHECK_THROWS_AS(cfpr::parse_candidates(""), cfpr::Error);
}

TEST_CASE("format then parse preserves 1000 generated candidates") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> coord(-400.0, 400.0);
    std::uniform_int_distribution<int> lab(0, 1), scan(0, 9);
    std::vector<Candidate> rows(1000);
    int ones = 0;
    for (auto& c : rows) {
        c.scan_id = "scan-" + std::to_string(scan(g));
        c.world = {coord(g), coord(g), coord(g)};
        c.label = lab(g);
        ones += c.label;
    }
    auto back = cfpr::parse_candidates(cfpr::format_candidates(rows));
    REQUIRE(back.size() == rows.size());
    int back_ones = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].scan_id == rows[i].scan_id);
        CHECK(back[i].world == rows[i].world);
        CHECK(back[i].label == rows[i].label);
        back_ones += back[i].label;
    }
    CHECK(back_ones == ones);
}

TEST_CASE("hu window clamps and maps to the unit interval") {
    CHECK(cfpr::normalize_hu(-1000.0) == 0.0);
    CHECK(cfpr::normalize_hu(400.0) == 1.0);
    CHECK(cfpr::normalize_hu(-2000.0) == 0.0);
    CHECK(cfpr::normalize_hu(3000.0) == 1.0);
    CHECK(cfpr::normalize_hu(-300.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("interior patch matches a direct index oracle") {
    Volume v = ramp_volume(20, 20, 9);
    const int size = 8, slabs = 3, half = size / 2;
    std::array<int, 3> center{10, 9, 4};
    cfpr::Patch p = cfpr::extract_patch(v, center, size, slabs);
    CHECK(p.pixels.shape == std::vector<int>{size, size, slabs});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int s = 0; s < slabs; ++s) {
                double raw = v.at(center[0] - half + x, center[1] - half + y,
                                  center[2] - slabs / 2 + s);
                CHECK(p.pixels.at(y, x, s) == cfpr::normalize_hu(raw));
            }
}

TEST_CASE("out-of-volume reads fill with air") {
    Volume v = ramp_volume(6, 6, 2);
    cfpr::Patch p = cfpr::extract_patch(v, {0, 0, 0}, 8, 3);
    // slab 0 is z = -1, fully outside
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) CHECK(p.pixels.at(y, x, 0) == 0.0);
    // top-left corner of slab 1 is x,y < 0
    CHECK(p.pixels.at(0, 0, 1) == 0.0);
    CHECK(p.pixels.at(3, 3, 1) == 0.0);  // maps to (-1,-1,0)
    CHECK(p.pixels.at(4, 4, 1) == cfpr::normalize_hu(v.at(0, 0, 0)));
}

TEST_CASE("patch values always stay inside the unit interval") {
    Volume v = ramp_volume(16, 16, 5);
    for (auto& x : v.voxels) x = x * 7.0 - 900.0;  // push outside the window
    std::mt19937_64 g(6);
    std::uniform_int_distribution<int> cx(-4, 19), cz(-2, 6);
    for (int it = 0; it < 50; ++it) {
        cfpr::Patch p = cfpr::extract_patch(v, {cx(g), cx(g), cz(g)}, 12, 3);
        for (double val : p.pixels.v) {
            CHECK(val >= 0.0);
            CHECK(val <= 1.0);
        }
    }
}

TEST_CASE("even slab counts are rejected") {
    Volume v = ramp_volume(8, 8, 4);
    CHECK_THROWS_AS(cfpr::extract_patch(v, {4, 4, 2}, 8, 2), cfpr::Error);
    CHECK_THROWS_AS(cfpr::extract_patch(v, {4, 4, 2}, 0, 3), cfpr::Error);
}
