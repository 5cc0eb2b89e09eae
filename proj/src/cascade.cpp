#include "cfpr/cascade.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <thread>

#include "cfpr/error.hpp"

namespace cfpr {

namespace {

std::string stem_of(const std::string& filename) {
    return std::filesystem::path(filename).stem().string();
}

// runs fn(0..n-1) on up to `jobs` threads; index->thread mapping never
// affects results because every unit derives its own rng and writes its
// own slot
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (jobs < 1) jobs = 1;
    int workers = std::min(jobs, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        threads.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double population_sigma(const std::vector<double>& xs) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    return std::sqrt(m2 / static_cast<double>(n));
}

std::vector<std::vector<int>> alive_ids_by_fold(const FoldAssignment& folds,
                                                const std::vector<char>& alive) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(folds.k));
    for (std::size_t i = 0; i < folds.fold_of.size(); ++i)
        if (alive[i]) out[static_cast<std::size_t>(folds.fold_of[i])].push_back(static_cast<int>(i));
    return out;
}

std::vector<SampleView> views_for_ids(const Dataset& data, const std::vector<int>& ids) {
    std::vector<SampleView> out;
    out.reserve(ids.size());
    for (int id : ids) {
        auto u = static_cast<std::size_t>(id);
        out.push_back({&data.patches[u].pixels, data.candidates[u].label});
    }
    return out;
}

}  // namespace

Dataset build_dataset(const SynthResult& synth, int patch_size, int slabs) {
    Dataset d;
    d.candidates = synth.candidates;
    d.n_scans = static_cast<int>(synth.volumes.size());
    std::map<std::string, std::size_t> vol_of;
    for (std::size_t i = 0; i < synth.volumes.size(); ++i)
        vol_of[stem_of(synth.volumes[i].meta.data_file)] = i;
    d.patches.reserve(d.candidates.size());
    for (std::size_t i = 0; i < d.candidates.size(); ++i) {
        auto it = vol_of.find(d.candidates[i].scan_id);
        if (it == vol_of.end())
            throw Error("dataset: no volume for scan id " + d.candidates[i].scan_id);
        Patch p = extract_patch(synth.volumes[it->second], d.candidates[i].voxel, patch_size, slabs);
        p.candidate_id = static_cast<int>(i);
        d.patches.push_back(std::move(p));
    }
    return d;
}

Dataset load_dataset(const std::string& volume_dir, const std::string& candidates_csv,
                     int patch_size, int slabs) {
    namespace fs = std::filesystem;
    std::vector<std::string> headers;
    if (!fs::is_directory(volume_dir)) throw Error("dataset: not a directory: " + volume_dir);
    for (const auto& entry : fs::directory_iterator(volume_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".mhd")
            headers.push_back(entry.path().string());
    std::sort(headers.begin(), headers.end());
    if (headers.empty()) throw Error("dataset: no .mhd volumes in " + volume_dir);

    std::map<std::string, Volume> volumes;
    for (const auto& h : headers) volumes[stem_of(h)] = read_volume_pair(h);

    Dataset d;
    d.candidates = read_candidates_file(candidates_csv);
    d.n_scans = static_cast<int>(volumes.size());
    d.patches.reserve(d.candidates.size());
    for (std::size_t i = 0; i < d.candidates.size(); ++i) {
        auto& c = d.candidates[i];
        auto it = volumes.find(c.scan_id);
        if (it == volumes.end())
            throw Error("dataset: candidate " + std::to_string(i + 1) + " references unknown scan " +
                        c.scan_id);
        try {
            c.voxel = world_to_voxel(c.world, it->second.meta);
        } catch (const Error& e) {
            throw Error("dataset: candidate " + std::to_string(i + 1) + " in scan " + c.scan_id +
                        ": " + e.what());
        }
        Patch p = extract_patch(it->second, c.voxel, patch_size, slabs);
        p.candidate_id = static_cast<int>(i);
        d.patches.push_back(std::move(p));
    }
    return d;
}

double compute_threshold(const std::vector<double>& nonnodule_probs, double divisor) {
    if (nonnodule_probs.empty()) throw Error("compute_threshold: empty probability list");
    if (!(divisor > 0.0)) throw Error("compute_threshold: divisor must be positive");
    return population_sigma(nonnodule_probs) / divisor;
}

GateResult gate(const std::vector<std::pair<int, double>>& scored, double th) {
    GateResult out;
    for (const auto& [id, p] : scored) {
        if (p < th)
            out.rejected.push_back(id);
        else
            out.survivors.push_back({id, p});
    }
    return out;
}

FoldPlan fold_plan(int fold, int k) {
    if (k < 3) throw Error("fold_plan: need k >= 3 folds (test, validation, training), got " +
                           std::to_string(k));
    if (fold < 0 || fold >= k) throw Error("fold_plan: fold out of range");
    FoldPlan plan;
    plan.test = fold;
    plan.val = (fold + 1) % k;
    for (int f = 0; f < k; ++f)
        if (f != plan.test && f != plan.val) plan.train.push_back(f);
    return plan;
}

StageResult run_stage(const StageConfig& cfg, int stage_index, const Dataset& data,
                      const FoldAssignment& folds, const std::vector<char>& alive,
                      const Hyper& hyper, const ArchSpec& arch, std::uint64_t run_seed, int jobs) {
    if (!(cfg.ratio > 0.0)) throw Error("stage config: ratio must be positive");
    if (!(cfg.divisor > 0.0)) throw Error("stage config: divisor must be positive");
    if (cfg.per_subset_count < 0) throw Error("stage config: per_subset_count must be >= 0");

    auto ids_by_fold = alive_ids_by_fold(folds, alive);
    int k = folds.k;

    StageResult result;
    result.stage = stage_index;
    result.config = cfg;
    result.folds.resize(static_cast<std::size_t>(k));

    parallel_for(k, jobs, [&](int f) {
        auto fu = static_cast<std::size_t>(f);
        try {
            FoldPlan plan = fold_plan(f, k);
            FoldDetail detail;
            detail.fold = f;
            detail.val_ids = ids_by_fold[static_cast<std::size_t>(plan.val)];
            detail.test_ids = ids_by_fold[fu];

            std::vector<std::vector<int>> train_fold_ids;
            for (int tf : plan.train) {
                train_fold_ids.push_back(ids_by_fold[static_cast<std::size_t>(tf)]);
                for (int id : train_fold_ids.back()) detail.train_ids.push_back(id);
            }

            RngStream fold_rng = RngStream(run_seed).child("stage", static_cast<std::uint64_t>(stage_index),
                                                           static_cast<std::uint64_t>(f));
            RngStream build_rng = fold_rng.child("build");
            TrainingSet ts = build_inverse_imbalanced(data.candidates, data.patches, train_fold_ids,
                                                      cfg.ratio, cfg.per_subset_count, build_rng);

            auto val_views = views_for_ids(data, detail.val_ids);
            Model init = init_model(arch, fold_rng.child("model").seed());
            TrainResult tr = train(init, ts, val_views, Criterion::NoduleAccuracy, hyper,
                                   fold_rng.child("sgd").seed());
            detail.model = std::move(tr.model);
            detail.log = std::move(tr.log);

            for (int id : detail.val_ids) {
                auto u = static_cast<std::size_t>(id);
                if (data.candidates[u].label == 0)
                    detail.val_nonnodule_probs.push_back(predict(detail.model, data.patches[u].pixels));
            }
            if (detail.val_nonnodule_probs.empty())
                throw Error("no non-nodules in validation fold");
            detail.sigma = population_sigma(detail.val_nonnodule_probs);
            detail.threshold = detail.sigma / cfg.divisor;

            for (int id : detail.test_ids) {
                auto u = static_cast<std::size_t>(id);
                detail.test_scored.push_back({id, predict(detail.model, data.patches[u].pixels)});
                (data.candidates[u].label == 1 ? detail.input_nodules : detail.input_nonnodules)++;
            }
            result.folds[fu] = std::move(detail);
        } catch (const std::exception& e) {
            throw Error("stage " + std::to_string(stage_index) + " fold " + std::to_string(f) + ": " +
                        e.what());
        }
    });

    for (auto& detail : result.folds) {
        GateResult g = gate(detail.test_scored, detail.threshold);
        for (const auto& [id, p] : detail.test_scored) result.scored.push_back({id, p});
        for (const auto& [id, p] : g.survivors) result.survivors.push_back(id);
        for (int id : g.rejected) {
            result.rejected.push_back(id);
            (data.candidates[static_cast<std::size_t>(id)].label == 1 ? detail.rejected_nodules
                                                                      : detail.rejected_nonnodules)++;
        }
    }
    std::sort(result.scored.begin(), result.scored.end());
    std::sort(result.survivors.begin(), result.survivors.end());
    std::sort(result.rejected.begin(), result.rejected.end());
    return result;
}

namespace {

FinalStage run_final(const Dataset& data, const FoldAssignment& folds,
                     const std::vector<char>& alive, const Hyper& hyper, const ArchSpec& arch,
                     std::uint64_t run_seed, int jobs) {
    auto ids_by_fold = alive_ids_by_fold(folds, alive);
    int k = folds.k;
    FinalStage result;
    result.folds.resize(static_cast<std::size_t>(k));

    parallel_for(k, jobs, [&](int f) {
        auto fu = static_cast<std::size_t>(f);
        try {
            FoldPlan plan = fold_plan(f, k);
            ScoreFold detail;
            detail.fold = f;
            detail.val_ids = ids_by_fold[static_cast<std::size_t>(plan.val)];
            detail.test_ids = ids_by_fold[fu];
            for (int tf : plan.train)
                for (int id : ids_by_fold[static_cast<std::size_t>(tf)])
                    detail.train_ids.push_back(id);

            RngStream fold_rng = RngStream(run_seed).child("final", static_cast<std::uint64_t>(f));
            RngStream build_rng = fold_rng.child("build");
            TrainingSet ts = build_balanced(data.candidates, data.patches, detail.train_ids, build_rng);

            auto val_views = views_for_ids(data, detail.val_ids);
            Model init = init_model(arch, fold_rng.child("model").seed());
            TrainResult tr = train(init, ts, val_views, Criterion::OverallAccuracy, hyper,
                                   fold_rng.child("sgd").seed());
            detail.model = std::move(tr.model);
            detail.log = std::move(tr.log);

            for (int id : detail.test_ids)
                detail.test_scored.push_back(
                    {id, predict(detail.model, data.patches[static_cast<std::size_t>(id)].pixels)});
            result.folds[fu] = std::move(detail);
        } catch (const std::exception& e) {
            throw Error("final stage fold " + std::to_string(f) + ": " + e.what());
        }
    });

    for (auto& detail : result.folds)
        for (const auto& [id, p] : detail.test_scored) result.scored.push_back({id, p});
    std::sort(result.scored.begin(), result.scored.end());
    return result;
}

}  // namespace

CascadeResult run_cascade(const std::vector<StageConfig>& stage_cfgs, const Dataset& data, int k,
                          const Hyper& hyper, const ArchSpec& arch, std::uint64_t seed, int jobs) {
    if (stage_cfgs.empty()) throw Error("run_cascade: need at least one stage");
    if (data.candidates.empty()) throw Error("run_cascade: empty dataset");

    CascadeResult result;
    result.seed = seed;
    result.folds = kfold_split(data.candidates, k, seed);
    result.final_prob.assign(data.candidates.size(), 0.0);

    std::vector<char> alive(data.candidates.size(), 1);
    for (std::size_t s = 0; s < stage_cfgs.size(); ++s) {
        StageResult stage = run_stage(stage_cfgs[s], static_cast<int>(s + 1), data, result.folds,
                                      alive, hyper, arch, seed, jobs);
        for (int id : stage.rejected) {
            alive[static_cast<std::size_t>(id)] = 0;
            result.final_prob[static_cast<std::size_t>(id)] = 0.0;
        }
        result.stages.push_back(std::move(stage));
    }

    result.final_stage = run_final(data, result.folds, alive, hyper, arch, seed, jobs);
    for (const auto& [id, p] : result.final_stage.scored)
        result.final_prob[static_cast<std::size_t>(id)] = p;
    return result;
}

CascadeResult run_baseline(const Dataset& data, int k, const Hyper& hyper, const ArchSpec& arch,
                           std::uint64_t seed, int jobs) {
    if (data.candidates.empty()) throw Error("run_baseline: empty dataset");
    CascadeResult result;
    result.seed = seed;
    result.folds = kfold_split(data.candidates, k, seed);
    result.final_prob.assign(data.candidates.size(), 0.0);
    std::vector<char> alive(data.candidates.size(), 1);
    result.final_stage = run_final(data, result.folds, alive, hyper, arch, seed, jobs);
    for (const auto& [id, p] : result.final_stage.scored)
        result.final_prob[static_cast<std::size_t>(id)] = p;
    return result;
}

}  // namespace cfpr
