#pragma once

#include <cstddef>
#include <vector>

namespace cfpr {

/// Dense row-major array of doubles with a small dynamic shape.
///
/// Layouts used in this project:
///   rank 1: {n}            flat vector
///   rank 2: {out, in}      dense-layer weights
///   rank 3: {h, w, c}      image/patch, index (y*w + x)*c + ch
///   rank 4: {k, k, in, out} conv kernels, index ((ky*k + kx)*in + ci)*out + co
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> dims);

    static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

    std::size_t size() const { return v.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    // rank-3 access, shape {h, w, c}
    double& at(int y, int x, int c) {
        return v[static_cast<std::size_t>((y * shape[1] + x) * shape[2] + c)];
    }
    const double& at(int y, int x, int c) const {
        return v[static_cast<std::size_t>((y * shape[1] + x) * shape[2] + c)];
    }

    // rank-4 access, shape {k, k, in, out}
    double& at4(int a, int b, int c, int d) {
        return v[static_cast<std::size_t>(((a * shape[1] + b) * shape[2] + c) * shape[3] + d)];
    }
    const double& at4(int a, int b, int c, int d) const {
        return v[static_cast<std::size_t>(((a * shape[1] + b) * shape[2] + c) * shape[3] + d)];
    }

    bool all_finite() const;
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::size_t shape_count(const std::vector<int>& dims);

}  // namespace cfpr
