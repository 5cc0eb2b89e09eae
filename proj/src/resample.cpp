#include "cfpr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cfpr/error.hpp"

namespace cfpr {

int oversample_factor() { return 9; }

Patch augment_with(const Patch& patch, double angle_deg, double scale) {
    if (!(scale > 0.0)) throw Error("augment: scale must be positive, got " + std::to_string(scale));
    const Tensor& src = patch.pixels;
    int h = src.shape[0], w = src.shape[1], ch = src.shape[2];
    Patch out;
    out.candidate_id = patch.candidate_id;
    out.pixels = Tensor({h, w, ch});
    double cy = 0.5 * (h - 1);
    double cx = 0.5 * (w - 1);
    double rad = angle_deg * 3.14159265358979323846 / 180.0;
    double cs = std::cos(rad), sn = std::sin(rad);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // inverse map: rotate by -angle and divide by scale
            double dx = x - cx;
            double dy = y - cy;
            double sx = cx + (cs * dx + sn * dy) / scale;
            double sy = cy + (-sn * dx + cs * dy) / scale;
            double fx = std::floor(sx);
            double fy = std::floor(sy);
            int x0 = static_cast<int>(fx);
            int y0 = static_cast<int>(fy);
            double ax = sx - fx;
            double ay = sy - fy;
            for (int c = 0; c < ch; ++c) {
                auto sample = [&](int yy, int xx) -> double {
                    if (xx < 0 || xx >= w || yy < 0 || yy >= h) return 0.0;
                    return src.at(yy, xx, c);
                };
                double v = (1 - ay) * ((1 - ax) * sample(y0, x0) + ax * sample(y0, x0 + 1)) +
                           ay * ((1 - ax) * sample(y0 + 1, x0) + ax * sample(y0 + 1, x0 + 1));
                if (v < 0.0) v = 0.0;
                if (v > 1.0) v = 1.0;
                out.pixels.at(y, x, c) = v;
            }
        }
    }
    return out;
}

Patch augment(const Patch& patch, RngStream& rng) {
    double angle = rng.uniform(0.0, 360.0);
    double scale = rng.uniform(0.9, 1.1);
    return augment_with(patch, angle, scale);
}

std::vector<Patch> oversample(const std::vector<Patch>& patches, int factor, RngStream& rng) {
    if (factor < 1) throw Error("oversample: factor must be >= 1, got " + std::to_string(factor));
    std::vector<Patch> out;
    out.reserve(patches.size() * static_cast<std::size_t>(factor));
    for (const auto& p : patches) {
        out.push_back(p);
        for (int i = 1; i < factor; ++i) out.push_back(augment(p, rng));
    }
    return out;
}

namespace {

void append_nodules_oversampled(TrainingSet& set, const std::vector<Candidate>& candidates,
                                const std::vector<Patch>& patches, const std::vector<int>& ids,
                                RngStream& rng) {
    for (int id : ids) {
        auto u = static_cast<std::size_t>(id);
        (void)candidates;
        TrainItem orig;
        orig.patch = patches[u];
        orig.patch.candidate_id = id;
        orig.label = 1;
        orig.candidate_id = id;
        set.items.push_back(orig);
        for (int i = 1; i < oversample_factor(); ++i) {
            TrainItem item;
            item.angle_deg = rng.uniform(0.0, 360.0);
            item.scale = rng.uniform(0.9, 1.1);
            item.patch = augment_with(patches[u], item.angle_deg, item.scale);
            item.patch.candidate_id = id;
            item.label = 1;
            item.candidate_id = id;
            item.augmented = true;
            set.items.push_back(std::move(item));
        }
    }
}

void append_originals(TrainingSet& set, const std::vector<Patch>& patches,
                      const std::vector<int>& ids, int label) {
    for (int id : ids) {
        TrainItem item;
        item.patch = patches[static_cast<std::size_t>(id)];
        item.patch.candidate_id = id;
        item.label = label;
        item.candidate_id = id;
        set.items.push_back(std::move(item));
    }
}

}  // namespace

TrainingSet build_inverse_imbalanced(const std::vector<Candidate>& candidates,
                                     const std::vector<Patch>& patches,
                                     const std::vector<std::vector<int>>& train_fold_ids,
                                     double ratio, int per_subset_count, RngStream& rng) {
    if (train_fold_ids.empty()) throw Error("build_inverse_imbalanced: no training subsets");
    if (!(ratio > 0.0)) throw Error("build_inverse_imbalanced: ratio must be positive");
    if (per_subset_count < 0) throw Error("build_inverse_imbalanced: per_subset_count must be >= 0");

    std::vector<int> nodule_ids;
    std::vector<std::vector<int>> neg_by_fold;
    for (const auto& fold : train_fold_ids) {
        neg_by_fold.emplace_back();
        for (int id : fold) {
            if (candidates[static_cast<std::size_t>(id)].label == 1)
                nodule_ids.push_back(id);
            else
                neg_by_fold.back().push_back(id);
        }
    }
    if (nodule_ids.empty()) throw Error("build_inverse_imbalanced: no nodules in training subsets");

    std::size_t n_subsets = train_fold_ids.size();
    double total_nodule_patches =
        static_cast<double>(nodule_ids.size()) * oversample_factor();
    std::size_t count = static_cast<std::size_t>(per_subset_count);
    if (count == 0) {
        double per = total_nodule_patches / (static_cast<double>(n_subsets) * ratio);
        long long r = std::llround(per);
        if (r < 1) r = 1;
        count = static_cast<std::size_t>(r);
    }

    TrainingSet set;
    set.declared_ratio = ratio;
    append_nodules_oversampled(set, candidates, patches, nodule_ids, rng);

    std::size_t total_neg = 0;
    for (auto& fold_negs : neg_by_fold) {
        auto picked = subsample(fold_negs, count, rng);
        total_neg += picked.size();
        append_originals(set, patches, picked, 0);
    }
    if (total_neg == 0) throw Error("build_inverse_imbalanced: zero non-nodules after subsampling");

    double achieved = total_nodule_patches / static_cast<double>(total_neg);
    if (std::abs(achieved - ratio) > 0.1 * ratio)
        throw Error("build_inverse_imbalanced: achieved ratio " + std::to_string(achieved) +
                    " outside 10% of declared " + std::to_string(ratio) +
                    " (nodule patches " + std::to_string(static_cast<long long>(total_nodule_patches)) +
                    ", non-nodules " + std::to_string(total_neg) + ")");
    return set;
}

TrainingSet build_balanced(const std::vector<Candidate>& candidates,
                           const std::vector<Patch>& patches, const std::vector<int>& pool_ids,
                           RngStream& rng) {
    std::vector<int> nodule_ids, neg_ids;
    for (int id : pool_ids) {
        if (candidates[static_cast<std::size_t>(id)].label == 1)
            nodule_ids.push_back(id);
        else
            neg_ids.push_back(id);
    }
    if (nodule_ids.empty()) throw Error("build_balanced: no nodules in pool");
    if (neg_ids.empty()) throw Error("build_balanced: no non-nodules in pool");

    TrainingSet set;
    append_nodules_oversampled(set, candidates, patches, nodule_ids, rng);
    std::size_t n_nodule_patches = nodule_ids.size() * static_cast<std::size_t>(oversample_factor());
    auto picked = subsample(neg_ids, n_nodule_patches, rng);
    append_originals(set, patches, picked, 0);
    set.declared_ratio =
        static_cast<double>(n_nodule_patches) / static_cast<double>(picked.size());
    return set;
}

std::string training_set_manifest(const TrainingSet& set) {
    std::ostringstream os;
    os << "candidate_id,label,augmented,angle_deg,scale\n";
    char buf[96];
    for (const auto& item : set.items) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g\n", item.candidate_id, item.label,
                      item.augmented ? 1 : 0, item.angle_deg, item.scale);
        os << buf;
    }
    return os.str();
}

}  // namespace cfpr
