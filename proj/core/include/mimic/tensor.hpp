#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mimic {

/// Dense N-dimensional array of doubles in row-major order.
/// Images use HWC layout, conv kernels KKIO.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_);
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    std::size_t size() const { return data.size(); }

    static Tensor zeros(std::vector<int> shape_) { return Tensor(std::move(shape_)); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    bool all_finite() const;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

} // namespace mimic
