#include "mimic/image.hpp"

#include <cmath>
#include <stdexcept>

namespace mimic {

ImageU8::ImageU8(int h, int w) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("image: non-positive dimensions");
    pixels.assign(static_cast<std::size_t>(h) * w * 3, 0);
}

Tensor scale_to_unit(const ImageU8& img) {
    Tensor t({img.height, img.width, 3});
    for (std::size_t i = 0; i < img.size(); ++i)
        t.data[i] = 2.0 * (img.pixels[i] / 255.0) - 1.0;
    return t;
}

ImageU8 unscale_from_tanh(const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[2] != 3)
        throw std::invalid_argument("unscale_from_tanh: expected {H,W,3}, got " + shape_str(t.shape));
    for (double v : t.data)
        if (v < -1.0 || v > 1.0 || !std::isfinite(v))
            throw std::invalid_argument("unscale_from_tanh: value " + std::to_string(v) +
                                        " outside [-1,1]");
    ImageU8 img(t.shape[0], t.shape[1]);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(std::round(255.0 * (t.data[i] + 1.0) / 2.0));
    return img;
}

Tensor to_byte_tensor(const ImageU8& img) {
    Tensor t({img.height, img.width, 3});
    for (std::size_t i = 0; i < img.size(); ++i) t.data[i] = static_cast<double>(img.pixels[i]);
    return t;
}

ImageU8 quantize_bytes(const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[2] != 3)
        throw std::invalid_argument("quantize_bytes: expected {H,W,3}, got " + shape_str(t.shape));
    ImageU8 img(t.shape[0], t.shape[1]);
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = t.data[i];
        if (!std::isfinite(v)) throw std::invalid_argument("quantize_bytes: non-finite value");
        v = std::min(255.0, std::max(0.0, v));
        img.pixels[i] = static_cast<std::uint8_t>(std::round(v));
    }
    return img;
}

double atanh_safe(double x) {
    if (!(std::fabs(x) < 1.0))
        throw std::invalid_argument("atanh_safe: |" + std::to_string(x) + "| >= 1");
    return 0.5 * std::log((1.0 + x) / (1.0 - x));
}

std::vector<double> clip_linf(std::span<const double> values, std::span<const double> center,
                              double epsilon) {
    if (values.size() != center.size())
        throw std::invalid_argument("clip_linf: length mismatch");
    if (epsilon < 0.0) throw std::invalid_argument("clip_linf: negative epsilon");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = std::min(std::max(values[i], center[i] - epsilon), center[i] + epsilon);
        out[i] = std::min(255.0, std::max(0.0, v));
    }
    return out;
}

} // namespace mimic
