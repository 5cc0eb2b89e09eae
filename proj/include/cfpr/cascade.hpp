#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cfpr/candidates.hpp"
#include "cfpr/folds.hpp"
#include "cfpr/patch.hpp"
#include "cfpr/synth.hpp"
#include "cfpr/train.hpp"

namespace cfpr {

/// Candidates plus their pre-extracted patches, aligned by index.
struct Dataset {
    std::vector<Candidate> candidates;
    std::vector<Patch> patches;
    int n_scans = 0;
};

Dataset build_dataset(const SynthResult& synth, int patch_size, int slabs);

/// Reads every .mhd volume under volume_dir; each candidate's seriesuid
/// must match a volume file stem. Voxel centers come from world_to_voxel.
Dataset load_dataset(const std::string& volume_dir, const std::string& candidates_csv,
                     int patch_size, int slabs);

struct StageConfig {
    double ratio = 24.0;       // nodule : non-nodule in the inverse-imbalanced set
    int per_subset_count = 0;  // explicit non-nodule count per training subset, 0 = from ratio
    double divisor = 10.0;     // th = sigma / divisor; +inf forces th = 0
};

/// Per-fold record of one single-sided stage.
struct FoldDetail {
    int fold = 0;
    double sigma = 0.0;
    double threshold = 0.0;
    std::vector<int> train_ids, val_ids, test_ids;  // stage-input candidate ids
    std::vector<double> val_nonnodule_probs;
    std::vector<std::pair<int, double>> test_scored;  // (candidate id, c(x))
    std::vector<EpochLog> log;
    Model model;
    int input_nodules = 0, input_nonnodules = 0;
    int rejected_nodules = 0, rejected_nonnodules = 0;
};

struct StageResult {
    int stage = 0;  // 1-based
    StageConfig config;
    std::vector<FoldDetail> folds;
    std::vector<std::pair<int, double>> scored;  // (candidate id, c(x)) before gating
    std::vector<int> survivors, rejected;        // candidate ids, ascending
};

/// Per-fold record of the balanced scoring pass (cascade final stage
/// and the baseline both use it).
struct ScoreFold {
    int fold = 0;
    std::vector<int> train_ids, val_ids, test_ids;
    std::vector<std::pair<int, double>> test_scored;
    std::vector<EpochLog> log;
    Model model;
};

struct FinalStage {
    std::vector<ScoreFold> folds;
    std::vector<std::pair<int, double>> scored;  // (candidate id, c(x))
};

struct CascadeResult {
    std::uint64_t seed = 0;
    FoldAssignment folds;
    std::vector<StageResult> stages;
    FinalStage final_stage;
    std::vector<double> final_prob;  // one entry per original candidate
};

/// th = sigma / divisor over the population standard deviation of the
/// given class-0 probabilities. divisor may be +inf (th becomes 0).
double compute_threshold(const std::vector<double>& nonnodule_probs, double divisor = 10.0);

/// Splits scored candidates at th: c(x) < th is rejected with its
/// probability overwritten to exactly 0.
struct GateResult {
    std::vector<std::pair<int, double>> survivors;  // keep their scores
    std::vector<int> rejected;
};
GateResult gate(const std::vector<std::pair<int, double>>& scored, double th);

/// Cross-validation plan shared by all stages: test fold f, validation
/// fold (f+1) mod k, the remaining k-2 folds train. Requires k >= 3.
struct FoldPlan {
    int test = 0, val = 0;
    std::vector<int> train;
};
FoldPlan fold_plan(int fold, int k);

/// Runs one single-sided stage over all folds of the surviving set:
/// inverse-imbalanced training, validation-driven epoch selection
/// (nodule accuracy), test-fold scoring, sigma/divisor gating.
StageResult run_stage(const StageConfig& cfg, int stage_index, const Dataset& data,
                      const FoldAssignment& folds, const std::vector<char>& alive,
                      const Hyper& hyper, const ArchSpec& arch, std::uint64_t run_seed, int jobs);

/// Full pipeline: the configured single-sided stages, then a balanced
/// scoring pass over the survivors. Rejected candidates keep
/// probability exactly 0.
CascadeResult run_cascade(const std::vector<StageConfig>& stage_cfgs, const Dataset& data, int k,
                          const Hyper& hyper, const ArchSpec& arch, std::uint64_t seed, int jobs);

/// Comparator: balanced scoring of every candidate, no gating. Shares
/// the fold plan and per-fold seeds with run_cascade's final stage.
CascadeResult run_baseline(const Dataset& data, int k, const Hyper& hyper, const ArchSpec& arch,
                           std::uint64_t seed, int jobs);

}  // namespace cfpr
