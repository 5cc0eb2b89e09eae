#include "cfpr/config.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

#include "cfpr/error.hpp"

namespace cfpr {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) throw Error("config: unknown field " + path + key);
    }
}

template <typename T>
void get_field(const json& j, const std::string& path, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception&) {
        throw Error("config: field " + path + key + " has the wrong type");
    }
}

void parse_synth(const json& j, SynthSpec& s) {
    const std::string p = "dataset.synth.";
    check_keys(j, p,
               {"n_volumes", "dims", "spacing", "n_positives", "n_negatives", "margin",
                "blob_radius_lo", "blob_radius_hi", "blob_amp_lo", "blob_amp_hi", "hard_fraction",
                "hard_radius_lo", "hard_radius_hi", "hard_amp_lo", "hard_amp_hi",
                "vessel_fraction", "axial_vessel_fraction", "vessel_radius_lo", "vessel_radius_hi",
                "vessel_halflen_lo", "vessel_halflen_hi", "vessel_amp_lo", "vessel_amp_hi", "decoy_fraction", "decoy_radius_lo",
                "decoy_radius_hi", "decoy_amp_lo", "decoy_amp_hi", "background_hu", "noise_hu",
                "min_separation"});
    get_field(j, p, "n_volumes", s.n_volumes);
    get_field(j, p, "dims", s.dims);
    get_field(j, p, "spacing", s.spacing);
    get_field(j, p, "n_positives", s.n_positives);
    get_field(j, p, "n_negatives", s.n_negatives);
    get_field(j, p, "margin", s.margin);
    get_field(j, p, "blob_radius_lo", s.blob_radius_lo);
    get_field(j, p, "blob_radius_hi", s.blob_radius_hi);
    get_field(j, p, "blob_amp_lo", s.blob_amp_lo);
    get_field(j, p, "blob_amp_hi", s.blob_amp_hi);
    get_field(j, p, "hard_fraction", s.hard_fraction);
    get_field(j, p, "hard_radius_lo", s.hard_radius_lo);
    get_field(j, p, "hard_radius_hi", s.hard_radius_hi);
    get_field(j, p, "hard_amp_lo", s.hard_amp_lo);
    get_field(j, p, "hard_amp_hi", s.hard_amp_hi);
    get_field(j, p, "vessel_fraction", s.vessel_fraction);
    get_field(j, p, "axial_vessel_fraction", s.axial_vessel_fraction);
    get_field(j, p, "vessel_radius_lo", s.vessel_radius_lo);
    get_field(j, p, "vessel_radius_hi", s.vessel_radius_hi);
    get_field(j, p, "vessel_halflen_lo", s.vessel_halflen_lo);
    get_field(j, p, "vessel_halflen_hi", s.vessel_halflen_hi);
    get_field(j, p, "vessel_amp_lo", s.vessel_amp_lo);
    get_field(j, p, "vessel_amp_hi", s.vessel_amp_hi);
    get_field(j, p, "decoy_fraction", s.decoy_fraction);
    get_field(j, p, "decoy_radius_lo", s.decoy_radius_lo);
    get_field(j, p, "decoy_radius_hi", s.decoy_radius_hi);
    get_field(j, p, "decoy_amp_lo", s.decoy_amp_lo);
    get_field(j, p, "decoy_amp_hi", s.decoy_amp_hi);
    get_field(j, p, "background_hu", s.background_hu);
    get_field(j, p, "noise_hu", s.noise_hu);
    get_field(j, p, "min_separation", s.min_separation);
}

double parse_divisor(const json& v, const std::string& path) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw Error("config: field " + path + " must be a positive number or \"inf\"");
    }
    if (!v.is_number()) throw Error("config: field " + path + " must be a positive number or \"inf\"");
    return v.get<double>();
}

json divisor_json(double d) {
    if (std::isinf(d)) return json("inf");
    return json(d);
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(std::string("config: bad JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("config: top level must be a JSON object");
    check_keys(j, "", {"seed", "k", "jobs", "out", "dataset", "patch", "arch", "hyper", "stages"});

    RunConfig cfg;
    get_field(j, "", "seed", cfg.seed);
    get_field(j, "", "k", cfg.k);
    get_field(j, "", "jobs", cfg.jobs);
    get_field(j, "", "out", cfg.out);

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        if (!d.is_object()) throw Error("config: field dataset must be an object");
        check_keys(d, "dataset.", {"kind", "synth", "volume_dir", "candidates"});
        get_field(d, "dataset.", "kind", cfg.dataset_kind);
        if (d.contains("synth")) {
            if (!d.at("synth").is_object())
                throw Error("config: field dataset.synth must be an object");
            parse_synth(d.at("synth"), cfg.synth);
        }
        get_field(d, "dataset.", "volume_dir", cfg.volume_dir);
        get_field(d, "dataset.", "candidates", cfg.candidates_file);
    }

    if (j.contains("patch")) {
        const json& p = j.at("patch");
        if (!p.is_object()) throw Error("config: field patch must be an object");
        check_keys(p, "patch.", {"size", "slabs"});
        get_field(p, "patch.", "size", cfg.patch_size);
        get_field(p, "patch.", "slabs", cfg.patch_slabs);
    }

    if (j.contains("arch")) {
        const json& a = j.at("arch");
        if (!a.is_object()) throw Error("config: field arch must be an object");
        check_keys(a, "arch.", {"conv_channels", "dense_units"});
        get_field(a, "arch.", "conv_channels", cfg.conv_channels);
        get_field(a, "arch.", "dense_units", cfg.dense_units);
    }

    if (j.contains("hyper")) {
        const json& h = j.at("hyper");
        if (!h.is_object()) throw Error("config: field hyper must be an object");
        check_keys(h, "hyper.", {"epochs", "batch", "lr", "momentum"});
        get_field(h, "hyper.", "epochs", cfg.hyper.epochs);
        get_field(h, "hyper.", "batch", cfg.hyper.batch);
        get_field(h, "hyper.", "lr", cfg.hyper.lr);
        get_field(h, "hyper.", "momentum", cfg.hyper.momentum);
    }

    if (j.contains("stages")) {
        const json& st = j.at("stages");
        if (!st.is_array()) throw Error("config: field stages must be an array");
        cfg.stages.clear();
        for (std::size_t i = 0; i < st.size(); ++i) {
            const json& e = st[i];
            std::string path = "stages[" + std::to_string(i) + "].";
            if (!e.is_object()) throw Error("config: field stages[" + std::to_string(i) +
                                            "] must be an object");
            check_keys(e, path, {"ratio", "per_subset_count", "divisor"});
            StageConfig sc;
            get_field(e, path, "ratio", sc.ratio);
            get_field(e, path, "per_subset_count", sc.per_subset_count);
            if (e.contains("divisor")) sc.divisor = parse_divisor(e.at("divisor"), path + "divisor");
            cfg.stages.push_back(sc);
        }
    }

    validate_config(cfg);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.k < 3) throw Error("config: k must be >= 3 (test, validation and training folds)");
    if (cfg.jobs < 1) throw Error("config: jobs must be >= 1");
    if (cfg.out.empty()) throw Error("config: out must not be empty");
    if (cfg.dataset_kind != "synthetic" && cfg.dataset_kind != "files")
        throw Error("config: dataset.kind must be \"synthetic\" or \"files\"");
    if (cfg.dataset_kind == "files") {
        if (cfg.volume_dir.empty()) throw Error("config: dataset.volume_dir must be set");
        if (cfg.candidates_file.empty()) throw Error("config: dataset.candidates must be set");
    }
    if (cfg.patch_size < 1) throw Error("config: patch.size must be >= 1");
    if (cfg.patch_slabs < 1 || cfg.patch_slabs % 2 == 0)
        throw Error("config: patch.slabs must be odd and >= 1");
    for (int c : cfg.conv_channels)
        if (c < 1) throw Error("config: arch.conv_channels entries must be >= 1");
    for (int d : cfg.dense_units)
        if (d < 1) throw Error("config: arch.dense_units entries must be >= 1");
    try {
        arch_of(cfg).validate();
    } catch (const Error& e) {
        throw Error(std::string("config: arch: ") + e.what());
    }
    if (cfg.hyper.epochs < 0) throw Error("config: hyper.epochs must be >= 0");
    if (cfg.hyper.batch < 1) throw Error("config: hyper.batch must be >= 1");
    if (!(cfg.hyper.lr > 0.0)) throw Error("config: hyper.lr must be positive");
    if (cfg.hyper.momentum < 0.0 || cfg.hyper.momentum >= 1.0)
        throw Error("config: hyper.momentum must lie in [0,1)");
    if (cfg.stages.empty()) throw Error("config: stages must contain at least one entry");
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        std::string path = "stages[" + std::to_string(i) + "].";
        if (!(cfg.stages[i].ratio > 0.0))
            throw Error("config: field " + path + "ratio must be positive");
        if (cfg.stages[i].per_subset_count < 0)
            throw Error("config: field " + path + "per_subset_count must be >= 0");
        if (!(cfg.stages[i].divisor > 0.0))
            throw Error("config: field " + path + "divisor must be positive");
    }
    if (cfg.dataset_kind == "synthetic") {
        SynthSpec s = cfg.synth;
        s.patch_size = cfg.patch_size;
        s.patch_slabs = cfg.patch_slabs;
        try {
            validate_synth_spec(s);
        } catch (const Error& e) {
            throw Error(std::string("config: dataset.synth: ") + e.what());
        }
    }
}

std::string resolved_config_json(const RunConfig& cfg, const std::string& mode) {
    nlohmann::ordered_json j;
    j["mode"] = mode;
    j["seed"] = cfg.seed;
    j["k"] = cfg.k;
    j["out"] = cfg.out;
    nlohmann::ordered_json d;
    d["kind"] = cfg.dataset_kind;
    if (cfg.dataset_kind == "synthetic") {
        SynthSpec s = cfg.synth;
        s.patch_size = cfg.patch_size;
        s.patch_slabs = cfg.patch_slabs;
        d["synth"] = nlohmann::ordered_json::parse(synth_spec_to_json(s));
    } else {
        d["volume_dir"] = cfg.volume_dir;
        d["candidates"] = cfg.candidates_file;
    }
    j["dataset"] = d;
    j["patch"] = {{"size", cfg.patch_size}, {"slabs", cfg.patch_slabs}};
    j["arch"] = {{"conv_channels", cfg.conv_channels}, {"dense_units", cfg.dense_units}};
    j["hyper"] = {{"epochs", cfg.hyper.epochs},
                  {"batch", cfg.hyper.batch},
                  {"lr", cfg.hyper.lr},
                  {"momentum", cfg.hyper.momentum}};
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : cfg.stages)
        j["stages"].push_back({{"ratio", s.ratio},
                               {"per_subset_count", s.per_subset_count},
                               {"divisor", divisor_json(s.divisor)}});
    return j.dump(2) + "\n";
}

ArchSpec arch_of(const RunConfig& cfg) {
    ArchSpec arch = ArchSpec::standard(cfg.patch_size, cfg.conv_channels, cfg.dense_units);
    arch.input_c = cfg.patch_slabs;
    return arch;
}

std::string config_reference() {
    return
        "Config file fields (JSON) and defaults:\n"
        "  seed                 master seed, u64 (default 1)\n"
        "  k                    cross-validation folds (default 10, minimum 3)\n"
        "  jobs                 worker threads; never changes results (default 1)\n"
        "  out                  output directory (default \"report\")\n"
        "  dataset.kind         \"synthetic\" or \"files\" (default \"synthetic\")\n"
        "  dataset.volume_dir   directory holding .mhd/.raw volumes (kind \"files\")\n"
        "  dataset.candidates   candidates CSV path (kind \"files\")\n"
        "  patch.size           square patch edge in pixels (default 48)\n"
        "  patch.slabs          consecutive axial slices per patch, odd (default 3)\n"
        "  arch.conv_channels   conv(3x3)+pool block widths (default [16,32,64])\n"
        "  arch.dense_units     hidden dense layer widths (default [128])\n"
        "  hyper.epochs         training epochs per model (default 20)\n"
        "  hyper.batch          minibatch size (default 32)\n"
        "  hyper.lr             SGD learning rate (default 0.01)\n"
        "  hyper.momentum       SGD momentum in [0,1) (default 0.9)\n"
        "  stages               array, one entry per filtering stage (default: 3 entries)\n"
        "  stages[].ratio       nodule:non-nodule training ratio (default 24)\n"
        "  stages[].per_subset_count  non-nodules kept per training subset, 0 = derive\n"
        "                       the count from ratio (default 0)\n"
        "  stages[].divisor     threshold divisor, th = sigma/divisor; \"inf\" forces\n"
        "                       th = 0 (default 10)\n"
        "  dataset.synth.*      synthetic generator:\n"
        "    n_volumes (8), dims ([96,96,48]), spacing ([0.7,0.7,1.25]),\n"
        "    n_positives (50), n_negatives (1000), margin (4),\n"
        "    blob_radius_lo/hi (2.5/6), blob_amp_lo/hi (250/600),\n"
        "    hard_fraction (0.25), hard_radius_lo/hi (1.8/2.8), hard_amp_lo/hi (120/250),\n"
        "    vessel_fraction (0.5), axial_vessel_fraction (0.35),\n"
        "    vessel_radius_lo/hi (1.2/2.5), vessel_halflen_lo/hi (6/16),\n"
        "    vessel_amp_lo/hi (250/600),\n"
        "    decoy_fraction (0), decoy_radius_lo/hi (1.2/2.0), decoy_amp_lo/hi (550/800),\n"
        "    background_hu (-880), noise_hu (40), min_separation (12)\n"
        "  patch geometry for synthesis comes from patch.size / patch.slabs.\n";
}

}  // namespace cfpr
