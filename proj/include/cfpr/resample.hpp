#pragma once

#include <string>
#include <vector>

#include "cfpr/candidates.hpp"
#include "cfpr/patch.hpp"
#include "cfpr/rng.hpp"

namespace cfpr {

/// One training example with its provenance, so a set can be audited
/// and reproduced.
struct TrainItem {
    Patch patch;
    int label = 0;
    int candidate_id = -1;
    bool augmented = false;
    double angle_deg = 0.0;
    double scale = 1.0;
};

struct TrainingSet {
    std::vector<TrainItem> items;
    double declared_ratio = 1.0;  // nodule : non-nodule
};

/// Rotates by angle_deg about the patch center and zooms by scale,
/// bilinear resampling with inverse mapping. Pixels pulled from outside
/// the source fill with 0. Output re-clamped to [0,1].
Patch augment_with(const Patch& patch, double angle_deg, double scale);

/// Random rotation in [0, 360) degrees and scale in [0.9, 1.1].
Patch augment(const Patch& patch, RngStream& rng);

/// factor x the input: each original followed by factor-1 augmented
/// copies. factor must be >= 1.
std::vector<Patch> oversample(const std::vector<Patch>& patches, int factor, RngStream& rng);

/// Uniform sample of n items without replacement. n >= count returns
/// the input unchanged.
template <typename T>
std::vector<T> subsample(const std::vector<T>& items, std::size_t n, RngStream& rng) {
    if (n >= items.size()) return items;
    std::vector<std::size_t> idx(items.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(
                                0, static_cast<std::int64_t>(idx.size() - 1 - i)));
        std::swap(idx[i], idx[j]);
    }
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items[idx[i]]);
    return out;
}

/// Inverse-imbalanced set: nodules from all training subsets are
/// oversampled 9x; non-nodules are subsampled per subset. A
/// per_subset_count of 0 derives the count from the requested ratio.
/// Throws when the achieved ratio misses the declared one by more than
/// 10%, or a class comes up empty.
TrainingSet build_inverse_imbalanced(const std::vector<Candidate>& candidates,
                                     const std::vector<Patch>& patches,
                                     const std::vector<std::vector<int>>& train_fold_ids,
                                     double ratio, int per_subset_count, RngStream& rng);

/// Balanced set: nodules oversampled 9x, non-nodules subsampled to
/// match. When non-nodules run short all of them are kept and the
/// declared ratio records what was actually achieved.
TrainingSet build_balanced(const std::vector<Candidate>& candidates,
                           const std::vector<Patch>& patches, const std::vector<int>& pool_ids,
                           RngStream& rng);

/// CSV audit trail: candidate id, label, augmented flag and transform
/// parameters per item.
std::string training_set_manifest(const TrainingSet& set);

int oversample_factor();  // the fixed 9

}  // namespace cfpr
