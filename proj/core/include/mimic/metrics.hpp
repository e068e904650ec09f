#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mimic/image.hpp"

namespace mimic {

struct MetricsReport {
    double psnr_db = 0.0; // +infinity when images are identical
    double ssim = 0.0;
    double feature_mse = 0.0;
    std::optional<std::array<double, 4>> bleu; // BLEU-1..4, sequence tasks only
};

/// 20 log10(255 / sqrt(MSE)); +infinity for identical images.
double psnr(const ImageU8& a, const ImageU8& b);

/// Mean SSIM over 8x8 non-overlapping windows, per channel, standard
/// stabilizers C1=(0.01*255)^2, C2=(0.03*255)^2. Images must be >= 8x8.
double ssim(const ImageU8& a, const ImageU8& b);

/// BLEU-n with a single reference: geometric mean of modified n-gram
/// precisions up to n, times the brevity penalty. No smoothing; an empty
/// candidate or a zero precision yields 0.
double bleu_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
              int n);

/// ||a - b||^2 / d; the same arithmetic as the attack objective.
double feature_mse(std::span<const double> a, std::span<const double> b);

} // namespace mimic
