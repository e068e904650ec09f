#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mimic/tensor.hpp"

namespace mimic {

/// H x W x 3 byte image, row-major, channels interleaved.
struct ImageU8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    ImageU8() = default;
    ImageU8(int h, int w);

    std::size_t size() const { return pixels.size(); }
    bool operator==(const ImageU8&) const = default;
};

/// Byte v -> 2(v/255) - 1.
Tensor scale_to_unit(const ImageU8& img);

/// v in [-1,1] -> 255(v+1)/2, rounded half away from zero. Rejects out-of-range input.
ImageU8 unscale_from_tanh(const Tensor& t);

/// {H,W,3} tensor with values as raw bytes (0..255).
Tensor to_byte_tensor(const ImageU8& img);

/// Clamp to [0,255] and round half away from zero.
ImageU8 quantize_bytes(const Tensor& t);

/// 0.5 * ln((1+x)/(1-x)); rejects |x| >= 1.
double atanh_safe(double x);

/// Project values into the L-inf ball of radius epsilon around center,
/// then clamp to [0,255].
std::vector<double> clip_linf(std::span<const double> values, std::span<const double> center,
                              double epsilon);

ImageU8 read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageU8& img, const std::filesystem::path& path);

} // namespace mimic
