#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cfpr/ops.hpp"
#include "cfpr/rng.hpp"
#include "cfpr/tensor.hpp"

namespace cfpr {

enum class LayerKind { Conv, Pool, Dense };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int channels = 0;  // conv: output filters, dense: output units
    int kernel = 3;    // conv only
};

/// Network architecture: input block dims plus an ordered layer list.
/// Every conv is followed by ReLU; every dense except the last is
/// followed by ReLU; the last layer must be a dense producing the two
/// class logits. The first dense flattens its input in (y, x, c) order.
struct ArchSpec {
    int input_h = 48;
    int input_w = 48;
    int input_c = 3;
    std::vector<LayerSpec> layers;

    /// conv(c)+pool per entry of conv_channels, then the given hidden
    /// dense units, then the final dense of 2 logits.
    static ArchSpec standard(int patch_size, const std::vector<int>& conv_channels,
                             const std::vector<int>& dense_units);

    /// Throws Error when the layer list is empty, a pool meets odd
    /// spatial dims, dims collapse below 1, a conv follows a dense, or
    /// the final layer is not a 2-unit dense.
    void validate() const;

    long long param_count() const;
    std::string describe() const;
};

struct LayerParams {
    Tensor weights;             // conv {k,k,in,out}, dense {out,in}, pool: empty
    std::vector<double> bias;
};
using LayerGrads = LayerParams;

struct TrainMeta {
    std::uint64_t seed = 0;
    int selected_epoch = 0;     // 0 means the initial parameters
    double criterion_value = 0.0;
};

struct Model {
    ArchSpec arch;
    std::vector<LayerParams> params;  // one entry per layer, pool slots empty
    TrainMeta meta;

    long long param_count() const { return arch.param_count(); }
};

/// Weights drawn from the fan-in-scaled uniform U(-sqrt(3/fan_in),
/// sqrt(3/fan_in)) in layer declaration order, biases zero. The stream
/// is the caller's seed passed through child("init").
Model init_model(const ArchSpec& arch, std::uint64_t seed);

/// Recording of one forward pass, consumed by backward().
struct Tape {
    std::vector<Tensor> inputs;            // input to each layer (pre-flatten for conv/pool)
    std::vector<Tensor> preact;            // pre-ReLU outputs for conv/dense layers
    std::vector<std::vector<int>> argmax;  // pool layers only
    bool recorded = false;
};

/// Returns the two class logits; fills the tape when given.
std::array<double, 2> forward(const Model& m, const Tensor& input, Tape* tape = nullptr);

/// Reverse pass over a recorded tape. Throws when the tape was never
/// recorded. Returns per-layer gradients shaped like the parameters.
std::vector<LayerGrads> backward(const Model& m, const Tape& tape,
                                 const std::array<double, 2>& dlogits);

std::vector<LayerGrads> zero_grads(const Model& m);
void accumulate(std::vector<LayerGrads>& acc, const std::vector<LayerGrads>& g, double scale);

/// Momentum SGD: velocity = momentum * velocity + grad, then
/// params -= learning_rate * velocity. Velocity persists in `state`
/// (zero-initialized on first use). Non-finite gradients refuse the
/// step and leave the parameters untouched.
void sgd_step(Model& m, const std::vector<LayerGrads>& grads, double learning_rate,
              double momentum, std::vector<LayerGrads>& state);

}  // namespace cfpr
