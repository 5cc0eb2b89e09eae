#include "cfpr/net.hpp"

#include <cmath>
#include <sstream>

#include "cfpr/error.hpp"

namespace cfpr {

ArchSpec ArchSpec::standard(int patch_size, const std::vector<int>& conv_channels,
                            const std::vector<int>& dense_units) {
    ArchSpec a;
    a.input_h = patch_size;
    a.input_w = patch_size;
    a.input_c = 3;
    for (const int c : conv_channels) {
        a.layers.push_back({LayerKind::Conv, c, 3});
        a.layers.push_back({LayerKind::Pool, 0, 0});
    }
    for (const int d : dense_units) a.layers.push_back({LayerKind::Dense, d, 0});
    a.layers.push_back({LayerKind::Dense, 2, 0});
    return a;
}

void ArchSpec::validate() const {
    if (layers.empty()) throw Error("arch: layer list is empty");
    if (input_h <= 0 || input_w <= 0 || input_c <= 0) throw Error("arch: input dims must be positive");
    int h = input_h, w = input_w;
    bool flattened = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        switch (l.kind) {
            case LayerKind::Conv:
                if (flattened) throw Error("arch: conv layer after dense is not supported");
                if (l.channels <= 0) throw Error("arch: conv channels must be positive");
                if (l.kernel <= 0 || l.kernel % 2 == 0) throw Error("arch: conv kernel must be odd");
                break;
            case LayerKind::Pool:
                if (flattened) throw Error("arch: pool layer after dense is not supported");
                if (h % 2 != 0 || w % 2 != 0) {
                    throw Error("arch: pool requires even spatial dims, got " + std::to_string(h) + "x" +
                                std::to_string(w));
                }
                h /= 2;
                w /= 2;
                if (h < 1 || w < 1) throw Error("arch: spatial dims collapsed below 1");
                break;
            case LayerKind::Dense:
                if (l.channels <= 0) throw Error("arch: dense units must be positive");
                flattened = true;
                break;
        }
    }
    const LayerSpec& last = layers.back();
    if (last.kind != LayerKind::Dense || last.channels != 2) {
        throw Error("arch: final layer must be a dense with 2 outputs");
    }
}

long long ArchSpec::param_count() const {
    long long total = 0;
    int h = input_h, w = input_w, c = input_c;
    int flat = 0;
    for (const LayerSpec& l : layers) {
        switch (l.kind) {
            case LayerKind::Conv:
                total += static_cast<long long>(l.kernel) * l.kernel * c * l.channels + l.channels;
                c = l.channels;
                break;
            case LayerKind::Pool:
                h /= 2;
                w /= 2;
                break;
            case LayerKind::Dense: {
                if (flat == 0) flat = h * w * c;
                total += static_cast<long long>(l.channels) * flat + l.channels;
                flat = l.channels;
                break;
            }
        }
    }
    return total;
}

std::string ArchSpec::describe() const {
    std::ostringstream os;
    os << input_h << "x" << input_w << "x" << input_c;
    for (const LayerSpec& l : layers) {
        switch (l.kind) {
            case LayerKind::Conv: os << " conv" << l.kernel << "x" << l.kernel << "/" << l.channels; break;
            case LayerKind::Pool: os << " pool"; break;
            case LayerKind::Dense: os << " dense/" << l.channels; break;
        }
    }
    return os.str();
}

Model init_model(const ArchSpec& arch, std::uint64_t seed) {
    arch.validate();
    Model m;
    m.arch = arch;
    m.meta.seed = seed;
    RngStream rng = RngStream(seed).child("init");
    int h = arch.input_h, w = arch.input_w, c = arch.input_c;
    int flat = 0;
    for (const LayerSpec& l : arch.layers) {
        LayerParams p;
        switch (l.kind) {
            case LayerKind::Conv: {
                p.weights = Tensor({l.kernel, l.kernel, c, l.channels});
                p.bias.assign(static_cast<std::size_t>(l.channels), 0.0);
                const double limit = std::sqrt(3.0 / (static_cast<double>(l.kernel) * l.kernel * c));
                for (double& x : p.weights.v) x = rng.uniform(-limit, limit);
                c = l.channels;
                break;
            }
            case LayerKind::Pool:
                h /= 2;
                w /= 2;
                break;
            case LayerKind::Dense: {
                if (flat == 0) flat = h * w * c;
                p.weights = Tensor({l.channels, flat});
                p.bias.assign(static_cast<std::size_t>(l.channels), 0.0);
                const double limit = std::sqrt(3.0 / flat);
                for (double& x : p.weights.v) x = rng.uniform(-limit, limit);
                flat = l.channels;
                break;
            }
        }
        m.params.push_back(std::move(p));
    }
    // the output head starts biased toward the negative class so the first
    // epoch never scores everything near even odds; detector training on
    // skewed batches settles much faster from this side
    auto& head = m.params.back().bias;
    if (head.size() == 2) {
        head[0] = 1.0;
        head[1] = -1.0;
    }
    return m;
}

namespace {

Tensor flatten(const Tensor& t) {
    Tensor f({static_cast<int>(t.size())});
    f.v = t.v;
    return f;
}

}  // namespace

std::array<double, 2> forward(const Model& m, const Tensor& input, Tape* tape) {
    if (input.rank() != 3 || input.dim(0) != m.arch.input_h || input.dim(1) != m.arch.input_w ||
        input.dim(2) != m.arch.input_c) {
        throw Error("forward: input dims do not match arch input " + std::to_string(m.arch.input_h) + "x" +
                    std::to_string(m.arch.input_w) + "x" + std::to_string(m.arch.input_c));
    }
    if (tape) {
        tape->inputs.clear();
        tape->preact.clear();
        tape->argmax.clear();
        tape->recorded = true;
    }
    Tensor cur = input;
    bool flattened = false;
    const std::size_t n = m.arch.layers.size();
    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& l = m.arch.layers[i];
        const LayerParams& p = m.params[i];
        if (l.kind == LayerKind::Dense && !flattened) {
            cur = flatten(cur);
            flattened = true;
        }
        if (tape) tape->inputs.push_back(cur);
        switch (l.kind) {
            case LayerKind::Conv: {
                Tensor z = conv2d(cur, p.weights, p.bias, Padding::Same);
                if (tape) tape->preact.push_back(z);
                cur = relu(z);
                if (tape) tape->argmax.emplace_back();
                break;
            }
            case LayerKind::Pool: {
                PoolResult r = maxpool2(cur);
                cur = std::move(r.out);
                if (tape) {
                    tape->preact.emplace_back();
                    tape->argmax.push_back(std::move(r.argmax));
                }
                break;
            }
            case LayerKind::Dense: {
                Tensor z = dense(cur, p.weights, p.bias);
                if (tape) tape->preact.push_back(z);
                cur = (i + 1 == n) ? z : relu(z);  // final dense keeps raw logits
                if (tape) tape->argmax.emplace_back();
                break;
            }
        }
    }
    return {cur[0], cur[1]};
}

std::vector<LayerGrads> backward(const Model& m, const Tape& tape,
                                 const std::array<double, 2>& dlogits) {
    if (!tape.recorded) throw Error("backward: no forward pass recorded");
    const std::size_t n = m.arch.layers.size();
    std::vector<LayerGrads> grads = zero_grads(m);

    Tensor dcur({2});
    dcur[0] = dlogits[0];
    dcur[1] = dlogits[1];

    for (std::size_t ri = n; ri-- > 0;) {
        const LayerSpec& l = m.arch.layers[ri];
        const LayerParams& p = m.params[ri];
        const Tensor& in = tape.inputs[ri];
        switch (l.kind) {
            case LayerKind::Dense: {
                if (ri + 1 != n) {  // hidden dense: undo the ReLU first
                    const Tensor& z = tape.preact[ri];
                    for (std::size_t j = 0; j < dcur.size(); ++j) {
                        if (z[j] <= 0.0) dcur[j] = 0.0;
                    }
                }
                const int out_n = p.weights.dim(0), in_n = p.weights.dim(1);
                LayerGrads& g = grads[ri];
                Tensor din({in_n});
                for (int o = 0; o < out_n; ++o) {
                    const double d = dcur[static_cast<std::size_t>(o)];
                    g.bias[static_cast<std::size_t>(o)] += d;
                    const double* row = &p.weights.v[static_cast<std::size_t>(o) * in_n];
                    double* grow = &g.weights.v[static_cast<std::size_t>(o) * in_n];
                    for (int i = 0; i < in_n; ++i) {
                        grow[i] += d * in[static_cast<std::size_t>(i)];
                        din[static_cast<std::size_t>(i)] += d * row[i];
                    }
                }
                dcur = std::move(din);
                break;
            }
            case LayerKind::Pool: {
                Tensor din(in.shape);
                const std::vector<int>& am = tape.argmax[ri];
                for (std::size_t j = 0; j < am.size(); ++j) {
                    din[static_cast<std::size_t>(am[j])] += dcur[j];
                }
                dcur = std::move(din);
                break;
            }
            case LayerKind::Conv: {
                const Tensor& z = tape.preact[ri];
                for (std::size_t j = 0; j < dcur.size(); ++j) {
                    if (z[j] <= 0.0) dcur[j] = 0.0;
                }
                const int h = in.dim(0), w = in.dim(1), ci_n = in.dim(2);
                const int k = p.weights.dim(0), co_n = p.weights.dim(3);
                const int pad = (k - 1) / 2;
                LayerGrads& g = grads[ri];
                Tensor din({h, w, ci_n});
                for (int oy = 0; oy < h; ++oy) {
                    for (int ox = 0; ox < w; ++ox) {
                        const double* dout = &dcur.v[static_cast<std::size_t>((oy * w + ox) * co_n)];
                        for (int co = 0; co < co_n; ++co) g.bias[static_cast<std::size_t>(co)] += dout[co];
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy + ky - pad;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox + kx - pad;
                                if (ix < 0 || ix >= w) continue;
                                const double* src = &in.at(iy, ix, 0);
                                for (int ci = 0; ci < ci_n; ++ci) {
                                    const double xv = src[ci];
                                    double* gk = &g.weights.at4(ky, kx, ci, 0);
                                    const double* kf = &p.weights.at4(ky, kx, ci, 0);
                                    double acc = 0.0;
                                    for (int co = 0; co < co_n; ++co) {
                                        gk[co] += xv * dout[co];
                                        acc += kf[co] * dout[co];
                                    }
                                    din.at(iy, ix, ci) += acc;
                                }
                            }
                        }
                    }
                }
                dcur = std::move(din);
                break;
            }
        }
    }
    return grads;
}

std::vector<LayerGrads> zero_grads(const Model& m) {
    std::vector<LayerGrads> g;
    g.reserve(m.params.size());
    for (const LayerParams& p : m.params) {
        LayerGrads z;
        if (p.weights.size() > 0) z.weights = Tensor(p.weights.shape);
        z.bias.assign(p.bias.size(), 0.0);
        g.push_back(std::move(z));
    }
    return g;
}

void accumulate(std::vector<LayerGrads>& acc, const std::vector<LayerGrads>& g, double scale) {
    for (std::size_t i = 0; i < acc.size(); ++i) {
        for (std::size_t j = 0; j < acc[i].weights.size(); ++j) acc[i].weights[j] += scale * g[i].weights[j];
        for (std::size_t j = 0; j < acc[i].bias.size(); ++j) acc[i].bias[j] += scale * g[i].bias[j];
    }
}

void sgd_step(Model& m, const std::vector<LayerGrads>& grads, double learning_rate, double momentum,
              std::vector<LayerGrads>& state) {
    if (learning_rate <= 0.0) throw Error("sgd_step: learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw Error("sgd_step: momentum must be in [0, 1)");
    for (const LayerGrads& g : grads) {
        if (!g.weights.all_finite()) throw Error("sgd_step: non-finite gradient, step refused");
        for (const double b : g.bias) {
            if (!std::isfinite(b)) throw Error("sgd_step: non-finite gradient, step refused");
        }
    }
    if (state.empty()) state = zero_grads(m);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        LayerParams& p = m.params[i];
        LayerGrads& v = state[i];
        for (std::size_t j = 0; j < p.weights.size(); ++j) {
            v.weights[j] = momentum * v.weights[j] + grads[i].weights[j];
            p.weights[j] -= learning_rate * v.weights[j];
        }
        for (std::size_t j = 0; j < p.bias.size(); ++j) {
            v.bias[j] = momentum * v.bias[j] + grads[i].bias[j];
            p.bias[j] -= learning_rate * v.bias[j];
        }
    }
}

}  // namespace cfpr
