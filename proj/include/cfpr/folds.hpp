#pragma once

#include <cstdint>
#include <vector>

#include "cfpr/candidates.hpp"

namespace cfpr {

/// Cross-validation fold assignment over candidates, addressed by
/// candidate index into the original list.
struct FoldAssignment {
    int k = 0;
    std::vector<int> fold_of;  // candidate index -> fold in [0, k)

    std::vector<int> members(int fold) const;
};

/// Stratified split: within each class, candidates are shuffled and
/// dealt round-robin, so per-class fold sizes differ by at most one.
/// Requires k >= 2 and at least k members in each class.
FoldAssignment kfold_split(const std::vector<Candidate>& candidates, int k, std::uint64_t seed);

}  // namespace cfpr
