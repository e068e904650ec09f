#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "mimic/tensor.hpp"

namespace mimic {

/// Central-difference gradient of a scalar-valued function. Independent of
/// the tape; serves as the reference for gradient checks.
inline std::vector<double> finite_diff_grad(const std::function<double(const Tensor&)>& fn,
                                            const Tensor& x, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be positive");
    std::vector<double> g(x.size());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.data[i];
        probe.data[i] = v + h;
        const double fp = fn(probe);
        probe.data[i] = v - h;
        const double fm = fn(probe);
        probe.data[i] = v;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace mimic
