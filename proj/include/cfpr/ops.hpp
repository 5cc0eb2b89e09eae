#pragma once

#include <array>
#include <vector>

#include "cfpr/tensor.hpp"

namespace cfpr {

enum class Padding { Same, Valid };

/// 2-D convolution (cross-correlation), stride 1.
/// input {h,w,c}, kernels {k,k,c,f}, bias length f. Same padding
/// zero-pads by (k-1)/2 so the spatial dims are preserved.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const std::vector<double>& bias,
              Padding padding);

struct PoolResult {
    Tensor out;
    // flat input index of the max per output cell; ties resolved to the
    // first element in (y, x) scan order
    std::vector<int> argmax;
};

/// 2x2 max pooling, stride 2. Requires even height and width.
PoolResult maxpool2(const Tensor& input);

Tensor relu(const Tensor& input);

/// Affine map weights{out,in} * input + bias.
Tensor dense(const Tensor& input, const Tensor& weights, const std::vector<double>& bias);

struct SoftmaxXent {
    double loss = 0.0;
    std::array<double, 2> prob{};   // clamped to (0, 1), sums to 1
    std::array<double, 2> grad{};   // d loss / d logits = prob - onehot(label)
};

/// Two-class softmax cross-entropy with log-sum-exp stabilization.
SoftmaxXent softmax_xent(const std::array<double, 2>& logits, int label);

}  // namespace cfpr
