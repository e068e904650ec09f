#include "mimic/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mimic {

double psnr(const ImageU8& a, const ImageU8& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("psnr: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        acc += diff * diff;
    }
    const double mse = acc / static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(255.0 / std::sqrt(mse));
}

double ssim(const ImageU8& a, const ImageU8& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("ssim: dimension mismatch");
    if (a.height < 8 || a.width < 8)
        throw std::invalid_argument("ssim: images must be at least 8x8");
    constexpr int kWin = 8;
    constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const int wy = a.height / kWin, wx = a.width / kWin;
    const double inv_n = 1.0 / (kWin * kWin);

    double total = 0.0;
    int windows = 0;
    for (int c = 0; c < 3; ++c)
        for (int by = 0; by < wy; ++by)
            for (int bx = 0; bx < wx; ++bx) {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int y = 0; y < kWin; ++y)
                    for (int x = 0; x < kWin; ++x) {
                        const std::size_t idx =
                            (static_cast<std::size_t>(by * kWin + y) * a.width + (bx * kWin + x)) * 3 +
                            static_cast<std::size_t>(c);
                        const double va = a.pixels[idx], vb = b.pixels[idx];
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double mu_a = sa * inv_n, mu_b = sb * inv_n;
                const double var_a = saa * inv_n - mu_a * mu_a;
                const double var_b = sbb * inv_n - mu_b * mu_b;
                const double cov = sab * inv_n - mu_a * mu_b;
                total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                ++windows;
            }
    return total / windows;
}

double bleu_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
              int n) {
    if (n < 1 || n > 4) throw std::invalid_argument("bleu: order must be in 1..4");
    if (candidate.empty()) return 0.0;

    double log_precisions = 0.0;
    int orders_used = 0;
    for (int k = 1; k <= n; ++k) {
        const std::size_t order = static_cast<std::size_t>(k);
        // Orders longer than the candidate have no n-grams; skip them so a
        // short identity still scores 1.
        if (candidate.size() < order) break;
        ++orders_used;
        std::map<std::vector<std::string>, int> ref_counts;
        if (reference.size() >= order)
            for (std::size_t i = 0; i + order <= reference.size(); ++i)
                ++ref_counts[{reference.begin() + static_cast<long>(i),
                              reference.begin() + static_cast<long>(i + order)}];
        std::map<std::vector<std::string>, int> cand_counts;
        for (std::size_t i = 0; i + order <= candidate.size(); ++i)
            ++cand_counts[{candidate.begin() + static_cast<long>(i),
                           candidate.begin() + static_cast<long>(i + order)}];
        long matched = 0, total = 0;
        for (const auto& [gram, count] : cand_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matched += std::min(count, it->second); // clipped counts
            total += count;
        }
        if (matched == 0) return 0.0;
        log_precisions += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    const double geo_mean = std::exp(log_precisions / orders_used);
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return bp * geo_mean;
}

double feature_mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("feature_mse: length mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(a.size());
}

} // namespace mimic
