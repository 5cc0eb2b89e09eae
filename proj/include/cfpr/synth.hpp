#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cfpr/candidates.hpp"
#include "cfpr/volume.hpp"

namespace cfpr {

/// Generation recipe for a seeded desk-scale dataset. Positives are
/// compact bright blobs; negatives are elongated vessel-like tubes,
/// small decoy blobs or plain background points. All shape profiles are
/// polynomial so equal seeds give byte-identical volumes on any
/// IEEE-754 platform.
struct SynthSpec {
    int n_volumes = 8;
    std::array<int, 3> dims{96, 96, 48};
    std::array<double, 3> spacing{0.7, 0.7, 1.25};
    int n_positives = 50;
    int n_negatives = 1000;
    int patch_size = 48;  // checked against dims so extraction can always run
    int patch_slabs = 3;
    int margin = 4;  // candidate centers stay this many voxels off the faces

    // blob parameters, radii in in-plane voxels, amplitudes in HU above background
    double blob_radius_lo = 2.5;
    double blob_radius_hi = 6.0;
    double blob_amp_lo = 250.0;
    double blob_amp_hi = 600.0;
    // a fraction of positives is small and faint so the task stays nontrivial
    double hard_fraction = 0.25;
    double hard_radius_lo = 1.8;
    double hard_radius_hi = 2.8;
    double hard_amp_lo = 120.0;
    double hard_amp_hi = 250.0;

    double vessel_fraction = 0.5;    // of negatives; remainder is empty background
    double axial_vessel_fraction = 0.35;  // vessels running near the z axis, blob-like in-plane
    double vessel_radius_lo = 1.2;
    double vessel_radius_hi = 2.5;
    double vessel_halflen_lo = 6.0;
    double vessel_halflen_hi = 16.0;
    double vessel_amp_lo = 250.0;
    double vessel_amp_hi = 600.0;
    // a further fraction of negatives is a small dim blob that mimics the
    // faint positives, so the two classes genuinely overlap in appearance
    double decoy_fraction = 0.0;
    double decoy_radius_lo = 1.2;
    double decoy_radius_hi = 2.0;
    double decoy_amp_lo = 550.0;
    double decoy_amp_hi = 800.0;

    double background_hu = -880.0;
    int noise_hu = 40;        // uniform integer noise, +/- this
    double min_separation = 12.0;  // voxel-space floor between any candidate and the positive centers
};

struct SynthResult {
    std::vector<Volume> volumes;
    std::vector<Candidate> candidates;  // scan_id="synth-<i>", voxel and world both set
};

void validate_synth_spec(const SynthSpec& spec);

/// Deterministic given (spec, seed). Throws on impossible geometry or
/// when candidate placement cannot satisfy the separation constraint.
SynthResult synthesize_dataset(const SynthSpec& spec, std::uint64_t seed);

/// Writes volumes (header + raw pairs), candidates.csv and a JSON
/// manifest into dir. Creates dir if absent.
void write_synth_dataset(const SynthResult& result, const SynthSpec& spec, std::uint64_t seed,
                         const std::string& dir);

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

}  // namespace cfpr
