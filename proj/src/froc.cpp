#include "cfpr/froc.hpp"

#include <algorithm>
#include <set>

#include "cfpr/error.hpp"

namespace cfpr {

FrocCurve froc(const std::vector<ScoredCandidate>& scored, int n_scans) {
    if (n_scans <= 0) throw Error("froc: scan count must be positive");
    FrocCurve curve;
    curve.n_scans = n_scans;
    for (const auto& s : scored)
        if (s.label == 1) ++curve.n_nodules;
    if (curve.n_nodules == 0) throw Error("froc: no label-1 candidates");

    std::set<double, std::greater<double>> thresholds;
    for (const auto& s : scored)
        if (s.probability > 0.0) thresholds.insert(s.probability);

    if (thresholds.empty()) {
        curve.points.push_back({0.0, 0.0});
        return curve;
    }

    for (double t : thresholds) {
        long long tp = 0, fp = 0;
        for (const auto& s : scored) {
            if (s.probability >= t) {
                if (s.label == 1)
                    ++tp;
                else
                    ++fp;
            }
        }
        FrocPoint p;
        p.fp_per_scan = static_cast<double>(fp) / static_cast<double>(n_scans);
        p.sensitivity = static_cast<double>(tp) / static_cast<double>(curve.n_nodules);
        if (!curve.points.empty() && curve.points.back().fp_per_scan == p.fp_per_scan) {
            // same FP rate reached with a lower threshold: keep the better sensitivity
            if (p.sensitivity > curve.points.back().sensitivity)
                curve.points.back().sensitivity = p.sensitivity;
        } else {
            curve.points.push_back(p);
        }
    }
    return curve;
}

double sensitivity_at(const FrocCurve& curve, double fp_per_scan) {
    if (curve.points.empty()) throw Error("sensitivity_at: empty curve");
    if (fp_per_scan < 0.0) throw Error("sensitivity_at: fp_per_scan must be >= 0");
    const auto& pts = curve.points;
    if (fp_per_scan <= pts.front().fp_per_scan) return pts.front().sensitivity;
    if (fp_per_scan >= pts.back().fp_per_scan) return pts.back().sensitivity;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (fp_per_scan <= pts[i].fp_per_scan) {
            const auto& a = pts[i - 1];
            const auto& b = pts[i];
            if (b.fp_per_scan == a.fp_per_scan) return b.sensitivity;
            double w = (fp_per_scan - a.fp_per_scan) / (b.fp_per_scan - a.fp_per_scan);
            return a.sensitivity + w * (b.sensitivity - a.sensitivity);
        }
    }
    return pts.back().sensitivity;
}

double average_sensitivity(const FrocCurve& curve) {
    return (sensitivity_at(curve, 4.0) + sensitivity_at(curve, 8.0)) / 2.0;
}

Histogram histogram(const std::vector<ScoredCandidate>& scored, int bins) {
    if (bins < 1) throw Error("histogram: bins must be >= 1");
    Histogram h;
    h.bins = bins;
    h.class0.assign(static_cast<std::size_t>(bins), 0);
    h.class1.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& s : scored) {
        double p = s.probability;
        if (p < 0.0 || p > 1.0)
            throw Error("histogram: probability out of [0,1]: " + std::to_string(p));
        auto bin = static_cast<std::size_t>(p * bins);
        if (bin >= static_cast<std::size_t>(bins)) bin = static_cast<std::size_t>(bins) - 1;
        (s.label == 1 ? h.class1 : h.class0)[bin]++;
    }
    return h;
}

ReductionSeries reduction_series(const CascadeResult& result,
                                 const std::vector<Candidate>& candidates) {
    long long total1 = 0, total0 = 0;
    for (const auto& c : candidates) (c.label == 1 ? total1 : total0)++;
    ReductionSeries series;
    for (const auto& stage : result.stages) {
        long long live1 = 0, live0 = 0;
        for (int id : stage.survivors)
            (candidates[static_cast<std::size_t>(id)].label == 1 ? live1 : live0)++;
        ReductionPoint p;
        p.stage = stage.stage;
        p.nodule_fraction = total1 ? static_cast<double>(live1) / static_cast<double>(total1) : 0.0;
        p.nonnodule_fraction =
            total0 ? static_cast<double>(live0) / static_cast<double>(total0) : 0.0;
        series.push_back(p);
    }
    return series;
}

}  // namespace cfpr
