#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mimic {

/// Bias-corrected Adam over one flat parameter array.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_stability = 1e-8;
    double lr;

    AdamState(std::size_t n, double lr_);

    /// In-place update; increments t.
    void step(std::span<double> param, std::span<const double> grad);
};

} // namespace mimic
