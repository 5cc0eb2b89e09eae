#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "cfpr/cascade.hpp"
#include "cfpr/config.hpp"
#include "cfpr/error.hpp"
#include "cfpr/report.hpp"
#include "cfpr/synth.hpp"

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw cfpr::Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int jobs = 0;
    int stages = 0;
    double ratio = 0.0;
};

cfpr::RunConfig resolve_config(const CommonFlags& flags) {
    cfpr::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = cfpr::parse_config(read_text_file(flags.config_path));
    if (flags.seed_set) cfg.seed = flags.seed;
    if (!flags.out.empty()) cfg.out = flags.out;
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    if (flags.stages > 0) {
        cfpr::StageConfig last = cfg.stages.empty() ? cfpr::StageConfig{} : cfg.stages.back();
        cfg.stages.resize(static_cast<std::size_t>(flags.stages), last);
    }
    if (flags.ratio > 0.0)
        for (auto& s : cfg.stages) s.ratio = flags.ratio;
    cfpr::validate_config(cfg);
    return cfg;
}

cfpr::SynthSpec synth_spec_of(const cfpr::RunConfig& cfg) {
    cfpr::SynthSpec s = cfg.synth;
    s.patch_size = cfg.patch_size;
    s.patch_slabs = cfg.patch_slabs;
    return s;
}

int cmd_synth(const CommonFlags& flags) {
    cfpr::RunConfig cfg = resolve_config(flags);
    cfpr::SynthSpec spec = synth_spec_of(cfg);
    cfpr::SynthResult data = cfpr::synthesize_dataset(spec, cfg.seed);
    cfpr::write_synth_dataset(data, spec, cfg.seed, cfg.out);
    std::printf("synth: %d volumes, %zu candidates -> %s\n", spec.n_volumes,
                data.candidates.size(), cfg.out.c_str());
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& mode) {
    cfpr::RunConfig cfg = resolve_config(flags);

    cfpr::Dataset data;
    if (cfg.dataset_kind == "synthetic") {
        cfpr::SynthResult synth = cfpr::synthesize_dataset(synth_spec_of(cfg), cfg.seed);
        data = cfpr::build_dataset(synth, cfg.patch_size, cfg.patch_slabs);
    } else {
        data = cfpr::load_dataset(cfg.volume_dir, cfg.candidates_file, cfg.patch_size,
                                  cfg.patch_slabs);
    }
    long long nodules = 0;
    for (const auto& c : data.candidates) nodules += c.label;
    std::printf("dataset: %zu candidates (%lld nodules) on %d scans\n", data.candidates.size(),
                nodules, data.n_scans);

    cfpr::ArchSpec arch = cfpr::arch_of(cfg);
    cfpr::CascadeResult result;
    if (mode == "cascade") {
        result = cfpr::run_cascade(cfg.stages, data, cfg.k, cfg.hyper, arch, cfg.seed, cfg.jobs);
        for (const auto& stage : result.stages)
            std::printf("stage %d: %zu survivors, %zu rejected\n", stage.stage,
                        stage.survivors.size(), stage.rejected.size());
    } else {
        result = cfpr::run_baseline(data, cfg.k, cfg.hyper, arch, cfg.seed, cfg.jobs);
    }

    std::string config_json = cfpr::resolved_config_json(cfg, mode);
    cfpr::emit_report(result, data.candidates, data.n_scans, config_json, cfg.out);

    auto rows = cfpr::probability_table(result, data.candidates);
    cfpr::FrocCurve curve = cfpr::froc(cfpr::scored_of(rows), data.n_scans);
    std::printf("sensitivity@4=%s sensitivity@8=%s average=%s\n",
                cfpr::fmt6(cfpr::sensitivity_at(curve, 4.0)).c_str(),
                cfpr::fmt6(cfpr::sensitivity_at(curve, 8.0)).c_str(),
                cfpr::fmt6(cfpr::average_sensitivity(curve)).c_str());
    std::printf("report: %s\n", cfg.out.c_str());
    return 0;
}

int cmd_eval(const std::string& table_path, int scans, const std::string& out) {
    auto rows = cfpr::parse_probability_table(read_text_file(table_path));
    int n_scans = scans;
    if (n_scans <= 0) {
        std::set<std::string> ids;
        for (const auto& r : rows) ids.insert(r.scan_id);
        n_scans = static_cast<int>(ids.size());
    }
    cfpr::emit_eval_report(rows, n_scans, out);
    std::printf("eval: %zu rows, %d scans -> %s\n", rows.size(), n_scans, out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascaded single-sided classifiers for false-positive reduction"};
    app.require_subcommand(1);
    app.footer(cfpr::config_reference());

    CommonFlags flags;
    std::string mode = "cascade";
    std::string table_path;
    int eval_scans = 0;
    std::string eval_out = "eval-report";

    auto add_common = [&flags](CLI::App* cmd) {
        cmd->add_option("--config", flags.config_path, "JSON config file; flags override it");
        cmd->add_option("--seed", flags.seed, "master seed override")
            ->each([&flags](const std::string&) { flags.seed_set = true; });
        cmd->add_option("--out", flags.out, "output directory override");
        cmd->add_option("--jobs", flags.jobs, "worker threads; results do not depend on it");
        cmd->add_option("--stages", flags.stages, "number of filtering stages override");
        cmd->add_option("--ratio", flags.ratio, "training ratio override for every stage");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    add_common(synth);

    CLI::App* run = app.add_subcommand("run", "train and evaluate the full pipeline");
    add_common(run);
    run->add_option("--mode", mode, "cascade (default) or baseline")
        ->check(CLI::IsMember({"cascade", "baseline"}));

    CLI::App* eval = app.add_subcommand("eval", "recompute evaluation from a probability table");
    eval->add_option("table", table_path, "candidates.csv from a previous run")->required();
    eval->add_option("--scans", eval_scans, "scan count (default: distinct seriesuids)");
    eval->add_option("--out", eval_out, "output directory (default eval-report)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(flags);
        if (run->parsed()) return cmd_run(flags, mode);
        if (eval->parsed()) return cmd_eval(table_path, eval_scans, eval_out);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n') ch = ' ';
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return 1;
    }
    return 0;
}
