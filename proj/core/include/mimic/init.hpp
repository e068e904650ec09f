#pragma once

#include <cmath>

#include "mimic/rng.hpp"
#include "mimic/tensor.hpp"

namespace mimic {

/// Fan-in-scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline void init_uniform_fanin(Tensor& t, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

} // namespace mimic
