#include "cfpr/tensor.hpp"

#include <cmath>

#include "cfpr/error.hpp"

namespace cfpr {

std::size_t shape_count(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (const int d : dims) {
        if (d <= 0) throw Error("tensor dimension must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> dims) : shape(std::move(dims)), v(shape_count(shape), 0.0) {}

bool Tensor::all_finite() const {
    for (const double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace cfpr
