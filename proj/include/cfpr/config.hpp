#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfpr/cascade.hpp"
#include "cfpr/synth.hpp"
#include "cfpr/train.hpp"

namespace cfpr {

/// Everything a run needs, loadable from one JSON file. Every field
/// has a default; the CLI can override seed, out, jobs, stage count and
/// ratio from flags.
struct RunConfig {
    std::uint64_t seed = 1;
    int k = 10;
    int jobs = 1;
    std::string out = "report";

    std::string dataset_kind = "synthetic";  // "synthetic" | "files"
    SynthSpec synth;
    std::string volume_dir;       // dataset_kind "files"
    std::string candidates_file;  // dataset_kind "files"

    int patch_size = 48;
    int patch_slabs = 3;
    std::vector<int> conv_channels{16, 32, 64};
    std::vector<int> dense_units{128};
    Hyper hyper;

    std::vector<StageConfig> stages{{24.0, 0, 10.0}, {24.0, 0, 10.0}, {24.0, 0, 10.0}};
};

/// Parses and validates. Unknown keys are rejected; errors carry the
/// JSON field path.
RunConfig parse_config(const std::string& json_text);

void validate_config(const RunConfig& cfg);

/// The resolved configuration as stored in a report directory. jobs is
/// left out on purpose: the worker count must not influence any output
/// byte. mode is recorded so a report names what produced it.
std::string resolved_config_json(const RunConfig& cfg, const std::string& mode);

ArchSpec arch_of(const RunConfig& cfg);

/// Plain-text reference for --help: one line per config field with its
/// default.
std::string config_reference();

}  // namespace cfpr
