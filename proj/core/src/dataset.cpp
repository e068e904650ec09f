#include "mimic/dataset.hpp"

#include <cmath>
#include <stdexcept>

#include "mimic/rng.hpp"

namespace mimic {

namespace {

const std::vector<std::string> kColors{"red", "green", "blue"};
const std::vector<std::string> kShapes{"square", "circle", "triangle"};
const std::vector<std::string> kSizes{"small", "large"};

constexpr std::uint8_t kPalette[3][3] = {
    {220, 40, 40},
    {40, 200, 50},
    {50, 70, 220},
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

bool inside_shape(int shape, double x, double y, double cx, double cy, double r) {
    const double dx = x - cx, dy = y - cy;
    switch (shape) {
    case 0: return std::fabs(dx) <= r && std::fabs(dy) <= r;
    case 1: return dx * dx + dy * dy <= r * r;
    default: { // upward triangle
        if (dy < -r || dy > r) return false;
        const double half_width = (dy + r) / 2.0;
        return std::fabs(dx) <= half_width;
    }
    }
}

SyntheticSample render(int index, std::uint64_t seed, int s) {
    Rng rng(mix(seed, static_cast<std::uint64_t>(index)));
    SyntheticSample sample;
    const int cls = index % kNumClasses;
    sample.shape = cls / 3;
    sample.color = cls % 3;
    sample.label = cls;
    sample.size = static_cast<int>(rng.below(2));
    sample.description = {kColors[static_cast<std::size_t>(sample.color)],
                          kShapes[static_cast<std::size_t>(sample.shape)],
                          kSizes[static_cast<std::size_t>(sample.size)]};

    sample.image = ImageU8(s, s);
    for (auto& p : sample.image.pixels) p = static_cast<std::uint8_t>(rng.below(60));

    const double r = sample.size == 0 ? 0.16 * s : 0.30 * s;
    const double cx = s / 2.0 + rng.uniform(-0.1, 0.1) * s;
    const double cy = s / 2.0 + rng.uniform(-0.1, 0.1) * s;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            if (!inside_shape(sample.shape, x + 0.5, y + 0.5, cx, cy, r)) continue;
            for (int c = 0; c < 3; ++c) {
                const double noise = rng.uniform(-20.0, 20.0);
                double v = kPalette[sample.color][c] + noise;
                v = std::min(255.0, std::max(0.0, v));
                sample.image.pixels[(static_cast<std::size_t>(y) * s + x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<std::uint8_t>(std::round(v));
            }
        }
    return sample;
}

} // namespace

const std::vector<std::string>& color_names() { return kColors; }
const std::vector<std::string>& shape_names() { return kShapes; }
const std::vector<std::string>& size_names() { return kSizes; }

std::vector<SyntheticSample> synth_dataset(int n, std::uint64_t seed, int image_size) {
    if (n < 1) throw std::invalid_argument("synth_dataset: count must be >= 1");
    if (image_size < 8) throw std::invalid_argument("synth_dataset: image size too small");
    std::vector<SyntheticSample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) samples.push_back(render(i, seed, image_size));
    return samples;
}

int ground_truth_answer(const SyntheticSample& sample, int question_id) {
    switch (question_id) {
    case 0: return sample.color;
    case 1: return 3 + sample.shape;
    case 2: return 6 + sample.size;
    case 3: return sample.color == 0 ? 8 : 9;
    case 4: return sample.shape == 0 ? 8 : 9;
    default:
        throw std::invalid_argument("ground_truth_answer: unknown question id " +
                                    std::to_string(question_id));
    }
}

std::vector<std::string> caption_vocab() {
    std::vector<std::string> v{"<s>", "</s>"};
    for (const auto& w : kColors) v.push_back(w);
    for (const auto& w : kShapes) v.push_back(w);
    for (const auto& w : kSizes) v.push_back(w);
    return v;
}

std::vector<int> caption_token_ids(const SyntheticSample& sample) {
    return {2 + sample.color, 5 + sample.shape, 8 + sample.size};
}

} // namespace mimic
