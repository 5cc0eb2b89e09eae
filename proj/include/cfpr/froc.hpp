#pragma once

#include <string>
#include <vector>

#include "cfpr/cascade.hpp"

namespace cfpr {

/// One scored candidate as the evaluation layer sees it.
struct ScoredCandidate {
    std::string scan_id;
    int label = 0;
    double probability = 0.0;
};

struct FrocPoint {
    double fp_per_scan = 0.0;
    double sensitivity = 0.0;
};

struct FrocCurve {
    std::vector<FrocPoint> points;  // fp_per_scan ascending
    int n_scans = 0;
    int n_nodules = 0;
};

/// Descending sweep over the distinct observed probabilities > 0; a
/// candidate is positive at threshold t iff probability >= t. Zero
/// probabilities (cascade rejects) are positive at no swept threshold.
/// Duplicate operating points collapse to the best sensitivity.
FrocCurve froc(const std::vector<ScoredCandidate>& scored, int n_scans);

/// Linear interpolation along the curve, clamped to the end points.
double sensitivity_at(const FrocCurve& curve, double fp_per_scan);

/// (sensitivity at 4 + sensitivity at 8) / 2.
double average_sensitivity(const FrocCurve& curve);

struct Histogram {
    int bins = 0;
    std::vector<long long> class0, class1;  // counts per bin
};

/// Uniform bins on [0,1]; a probability of exactly 1 lands in the last
/// bin.
Histogram histogram(const std::vector<ScoredCandidate>& scored, int bins = 50);

struct ReductionPoint {
    int stage = 0;      // 1-based
    double nodule_fraction = 0.0;     // survivors / original count
    double nonnodule_fraction = 0.0;
};

using ReductionSeries = std::vector<ReductionPoint>;

ReductionSeries reduction_series(const CascadeResult& result,
                                 const std::vector<Candidate>& candidates);

}  // namespace cfpr
