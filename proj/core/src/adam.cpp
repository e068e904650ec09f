#include "mimic/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mimic {

AdamState::AdamState(std::size_t n, double lr_) : m(n, 0.0), v(n, 0.0), lr(lr_) {
    if (lr <= 0.0) throw std::invalid_argument("adam: learning rate must be positive");
}

void AdamState::step(std::span<double> param, std::span<const double> grad) {
    if (param.size() != m.size() || grad.size() != m.size())
        throw std::invalid_argument("adam: length mismatch, state " + std::to_string(m.size()) +
                                    " param " + std::to_string(param.size()) + " grad " +
                                    std::to_string(grad.size()));
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps_stability);
    }
}

} // namespace mimic
