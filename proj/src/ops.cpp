#include "cfpr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfpr/error.hpp"

namespace cfpr {

Tensor conv2d(const Tensor& input, const Tensor& kernels, const std::vector<double>& bias,
              Padding padding) {
    if (input.rank() != 3) throw Error("conv2d: input must be rank 3 {h,w,c}");
    if (kernels.rank() != 4) throw Error("conv2d: kernels must be rank 4 {k,k,c,f}");
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    const int k = kernels.dim(0), f = kernels.dim(3);
    if (kernels.dim(1) != k) throw Error("conv2d: kernels must be square");
    if (k % 2 == 0) throw Error("conv2d: kernel size must be odd, got " + std::to_string(k));
    if (kernels.dim(2) != c) {
        throw Error("conv2d: input channels " + std::to_string(c) + " do not match kernel channels " +
                    std::to_string(kernels.dim(2)));
    }
    if (static_cast<int>(bias.size()) != f) {
        throw Error("conv2d: bias length " + std::to_string(bias.size()) + " does not match filter count " +
                    std::to_string(f));
    }

    const int pad = padding == Padding::Same ? (k - 1) / 2 : 0;
    const int oh = padding == Padding::Same ? h : h - k + 1;
    const int ow = padding == Padding::Same ? w : w - k + 1;
    if (oh <= 0 || ow <= 0) throw Error("conv2d: kernel larger than input under valid padding");

    Tensor out({oh, ow, f});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            double* dst = &out.at(oy, ox, 0);
            for (int co = 0; co < f; ++co) dst[co] = bias[static_cast<std::size_t>(co)];
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy + ky - pad;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox + kx - pad;
                    if (ix < 0 || ix >= w) continue;
                    const double* src = &input.at(iy, ix, 0);
                    const double* ker = &kernels.at4(ky, kx, 0, 0);
                    for (int ci = 0; ci < c; ++ci) {
                        const double xv = src[ci];
                        const double* kf = ker + ci * f;
                        for (int co = 0; co < f; ++co) dst[co] += xv * kf[co];
                    }
                }
            }
        }
    }
    return out;
}

PoolResult maxpool2(const Tensor& input) {
    if (input.rank() != 3) throw Error("maxpool2: input must be rank 3 {h,w,c}");
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw Error("maxpool2: spatial dims must be even, got " + std::to_string(h) + "x" +
                    std::to_string(w));
    }
    PoolResult r;
    r.out = Tensor({h / 2, w / 2, c});
    r.argmax.assign(r.out.size(), 0);
    std::size_t oi = 0;
    for (int oy = 0; oy < h / 2; ++oy) {
        for (int ox = 0; ox < w / 2; ++ox) {
            for (int ch = 0; ch < c; ++ch, ++oi) {
                double best = input.at(2 * oy, 2 * ox, ch);
                int best_idx = (2 * oy * w + 2 * ox) * c + ch;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int y = 2 * oy + dy, x = 2 * ox + dx;
                        const double val = input.at(y, x, ch);
                        if (val > best) {
                            best = val;
                            best_idx = (y * w + x) * c + ch;
                        }
                    }
                }
                r.out[oi] = best;
                r.argmax[oi] = best_idx;
            }
        }
    }
    return r;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (double& x : out.v) x = std::max(0.0, x);
    return out;
}

Tensor dense(const Tensor& input, const Tensor& weights, const std::vector<double>& bias) {
    if (weights.rank() != 2) throw Error("dense: weights must be rank 2 {out,in}");
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    if (static_cast<int>(input.size()) != in_n) {
        throw Error("dense: input length " + std::to_string(input.size()) + " does not match weight columns " +
                    std::to_string(in_n));
    }
    if (static_cast<int>(bias.size()) != out_n) {
        throw Error("dense: bias length " + std::to_string(bias.size()) + " does not match weight rows " +
                    std::to_string(out_n));
    }
    Tensor out({out_n});
    for (int o = 0; o < out_n; ++o) {
        double acc = bias[static_cast<std::size_t>(o)];
        const double* row = &weights.v[static_cast<std::size_t>(o) * in_n];
        for (int i = 0; i < in_n; ++i) acc += row[i] * input.v[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = acc;
    }
    return out;
}

SoftmaxXent softmax_xent(const std::array<double, 2>& logits, int label) {
    if (label != 0 && label != 1) throw Error("softmax_xent: label must be 0 or 1");
    SoftmaxXent r;
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double z = e0 + e1;
    // Clamp keeps both probabilities strictly inside (0, 1) even for
    // extreme logits where exp underflows.
    constexpr double kEps = 1e-15;
    r.prob[0] = std::clamp(e0 / z, kEps, 1.0 - kEps);
    r.prob[1] = std::clamp(e1 / z, kEps, 1.0 - kEps);
    const std::size_t lab = static_cast<std::size_t>(label);
    r.loss = std::log(z) - (logits[lab] - m);
    r.grad = r.prob;
    r.grad[lab] -= 1.0;
    return r;
}

}  // namespace cfpr
