#include "cfpr/folds.hpp"

#include "cfpr/error.hpp"
#include "cfpr/rng.hpp"

namespace cfpr {

std::vector<int> FoldAssignment::members(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

FoldAssignment kfold_split(const std::vector<Candidate>& candidates, int k, std::uint64_t seed) {
    if (k < 2) throw Error("kfold_split: k must be >= 2, got " + std::to_string(k));
    std::vector<int> by_class[2];
    for (std::size_t i = 0; i < candidates.size(); ++i)
        by_class[candidates[i].label].push_back(static_cast<int>(i));
    for (int cls = 0; cls < 2; ++cls)
        if (by_class[cls].size() < static_cast<std::size_t>(k))
            throw Error(std::string("kfold_split: the ") + (cls == 1 ? "nodule" : "non-nodule") +
                        " class has only " + std::to_string(by_class[cls].size()) +
                        " members, need at least " + std::to_string(k));

    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.assign(candidates.size(), -1);
    RngStream rng = RngStream(seed).child("folds");
    for (int cls = 0; cls < 2; ++cls) {
        auto& idx = by_class[cls];
        shuffle(idx, rng);
        for (std::size_t j = 0; j < idx.size(); ++j)
            fa.fold_of[static_cast<std::size_t>(idx[j])] = static_cast<int>(j % static_cast<std::size_t>(k));
    }
    return fa;
}

}  // namespace cfpr
