#pragma once

// Reference implementations kept deliberately naive and independent of
// the library code paths. Test RNG is std::mt19937_64 on purpose so the
// oracles share nothing with the library's generator.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cfpr/froc.hpp"
#include "cfpr/ops.hpp"
#include "cfpr/tensor.hpp"

namespace oracle {

inline cfpr::Tensor random_tensor(const std::vector<int>& shape, std::mt19937_64& g, double lo = -1.0,
                                  double hi = 1.0) {
    cfpr::Tensor t(shape);
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& v : t.v) v = d(g);
    return t;
}

inline std::vector<double> random_vec(std::size_t n, std::mt19937_64& g, double lo = -1.0,
                                      double hi = 1.0) {
    std::vector<double> v(n);
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& x : v) x = d(g);
    return v;
}

inline cfpr::Tensor conv_ref(const cfpr::Tensor& input, const cfpr::Tensor& kernels,
                             const std::vector<double>& bias, cfpr::Padding padding) {
    const int h = input.shape[0], w = input.shape[1], c = input.shape[2];
    const int k = kernels.shape[0], f = kernels.shape[3];
    const int pad = padding == cfpr::Padding::Same ? (k - 1) / 2 : 0;
    const int oh = padding == cfpr::Padding::Same ? h : h - k + 1;
    const int ow = padding == cfpr::Padding::Same ? w : w - k + 1;
    cfpr::Tensor out({oh, ow, f});
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int of = 0; of < f; ++of) {
                double acc = bias[static_cast<std::size_t>(of)];
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        for (int ic = 0; ic < c; ++ic) {
                            int iy = oy + ky - pad;
                            int ix = ox + kx - pad;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += input.at(iy, ix, ic) * kernels.at4(ky, kx, ic, of);
                        }
                out.at(oy, ox, of) = acc;
            }
    return out;
}

inline cfpr::Tensor pool_ref(const cfpr::Tensor& input) {
    const int h = input.shape[0], w = input.shape[1], c = input.shape[2];
    cfpr::Tensor out({h / 2, w / 2, c});
    for (int y = 0; y < h / 2; ++y)
        for (int x = 0; x < w / 2; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double m = input.at(2 * y, 2 * x, ch);
                m = std::max(m, input.at(2 * y, 2 * x + 1, ch));
                m = std::max(m, input.at(2 * y + 1, 2 * x, ch));
                m = std::max(m, input.at(2 * y + 1, 2 * x + 1, ch));
                out.at(y, x, ch) = m;
            }
    return out;
}

inline cfpr::Tensor dense_ref(const cfpr::Tensor& input, const cfpr::Tensor& weights,
                              const std::vector<double>& bias) {
    const int out_n = weights.shape[0], in_n = weights.shape[1];
    cfpr::Tensor out({out_n});
    for (int o = 0; o < out_n; ++o) {
        double acc = bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < in_n; ++i)
            acc += weights.v[static_cast<std::size_t>(o * in_n + i)] * input.v[static_cast<std::size_t>(i)];
        out.v[static_cast<std::size_t>(o)] = acc;
    }
    return out;
}

// two-pass population standard deviation
inline double sigma_two_pass(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    double mean = sum / static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

// piecewise-linear read-off over (x, y) points sorted by x
inline double interp_ref(const std::vector<std::pair<double, double>>& pts, double x) {
    if (x <= pts.front().first) return pts.front().second;
    if (x >= pts.back().first) return pts.back().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (x <= pts[i].first) {
            double x0 = pts[i - 1].first, y0 = pts[i - 1].second;
            double x1 = pts[i].first, y1 = pts[i].second;
            if (x1 == x0) return y1;
            return y0 + (x - x0) * (y1 - y0) / (x1 - x0);
        }
    }
    return pts.back().second;
}

// exhaustive threshold enumeration: every observed probability > 0 is a
// threshold; operating points with equal FP rate collapse to the best
// sensitivity
inline cfpr::FrocCurve froc_brute(const std::vector<cfpr::ScoredCandidate>& scored, int n_scans) {
    std::vector<double> ts;
    int nodules = 0;
    for (const auto& s : scored) {
        if (s.probability > 0.0) ts.push_back(s.probability);
        if (s.label == 1) ++nodules;
    }
    std::sort(ts.begin(), ts.end(), std::greater<double>());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    cfpr::FrocCurve curve;
    curve.n_scans = n_scans;
    curve.n_nodules = nodules;
    if (ts.empty()) {
        curve.points.push_back({0.0, 0.0});
        return curve;
    }
    for (double t : ts) {
        long long fp = 0, tp = 0;
        for (const auto& s : scored)
            if (s.probability >= t) (s.label == 1 ? tp : fp)++;
        double x = static_cast<double>(fp) / n_scans;
        double y = static_cast<double>(tp) / nodules;
        if (!curve.points.empty() && curve.points.back().fp_per_scan == x)
            curve.points.back().sensitivity = std::max(curve.points.back().sensitivity, y);
        else
            curve.points.push_back({x, y});
    }
    return curve;
}

}  // namespace oracle
