#include "mimic/extractor.hpp"

#include <cmath>
#include <stdexcept>

#include "mimic/init.hpp"
#include "mimic/rng.hpp"

namespace mimic {

namespace {
constexpr double kRangeSlack = 1e-9;
}

Tensor FeatureNet::extract_eval(const Tensor& image) const {
    Tape tape;
    Tape::Id img = tape.leaf(image);
    Tape::Id feat = extract(tape, img);
    return tape.value(feat);
}

void FeatureNet::check_range(const Tensor& image) const {
    double lo = 0.0, hi = 0.0;
    for (double v : image.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double lo_bound = input_range() == InputRange::unit ? -1.0 : 0.0;
    const double hi_bound = input_range() == InputRange::unit ? 1.0 : 255.0;
    if (lo < lo_bound - kRangeSlack || hi > hi_bound + kRangeSlack)
        throw std::invalid_argument(
            "extract: image value outside [" + std::to_string(lo_bound) + "," +
            std::to_string(hi_bound) + "], extremum " +
            std::to_string(lo < lo_bound - kRangeSlack ? lo : hi));
}

PlainCnnExtractor::PlainCnnExtractor(InputRange range, int input_size, int feature_dim,
                                     std::uint64_t seed)
    : range_(range), input_size_(input_size), feature_dim_(feature_dim) {
    if (input_size < 8 || (input_size & (input_size - 1)) != 0)
        throw std::invalid_argument("extractor: input size must be a power of two >= 8");
    if (feature_dim <= 0) throw std::invalid_argument("extractor: feature_dim must be positive");

    Rng rng(seed);
    int spatial = input_size;
    int cin = 3;
    const int plan[3] = {8, 16, 16};
    int stage = 0;
    while (spatial > 4) {
        const int cout = plan[std::min(stage, 2)];
        Tensor k({3, 3, cin, cout});
        init_uniform_fanin(k, 9 * cin, rng);
        weights_.push_back(std::move(k));
        Tensor kb({cout});
        init_uniform_fanin(kb, 9 * cin, rng);
        weights_.push_back(std::move(kb));
        conv_channels_.push_back(cout);
        cin = cout;
        spatial /= 2;
        ++stage;
    }
    const int flat = 2 * 2 * cin; // after the final 2x2 average pool
    Tensor w({flat, feature_dim});
    init_uniform_fanin(w, flat, rng);
    weights_.push_back(std::move(w));
    weights_.push_back(Tensor({feature_dim}));
}

Tape::Id PlainCnnExtractor::extract(Tape& tape, Tape::Id image,
                                    std::vector<Tape::Id>* weight_ids) const {
    const Tensor& img = tape.value(image);
    if (img.shape != std::vector<int>{input_size_, input_size_, 3})
        throw std::invalid_argument("extract: image shape " + shape_str(img.shape) +
                                    " does not match extractor input " +
                                    shape_str({input_size_, input_size_, 3}));
    check_range(img);

    const bool train = weight_ids != nullptr;
    std::vector<Tape::Id> wid;
    wid.reserve(weights_.size());
    for (const Tensor& w : weights_) wid.push_back(tape.leaf(w, train));
    if (train) *weight_ids = wid;

    Tape::Id x = image;
    if (range_ == InputRange::byte) x = tape.scale_shift(x, 1.0 / 127.5, -1.0);
    for (std::size_t i = 0; i < conv_channels_.size(); ++i) {
        x = tape.conv2d(x, wid[2 * i], wid[2 * i + 1], /*stride=*/2, /*pad=*/1);
        x = tape.relu(x);
    }
    x = tape.avgpool2d(x, 2);
    return tape.dense(x, wid[weights_.size() - 2], wid[weights_.size() - 1], feature_dim_);
}

// ---------------------------------------------------------------------------

InvertibleExtractor::InvertibleExtractor(std::uint64_t seed) {
    Rng rng(seed);
    // Residual weights are drawn well above the fan-in scale so the coupling
    // stack amplifies small input perturbations instead of acting as a
    // near-identity; inversion stays exact either way.
    constexpr double kResidualGain = 4.0;
    // blocks 0,1 act on 8x8x12 (halves of 6), blocks 2,3 on 4x4x48 (halves of 24)
    const int half[4] = {6, 6, 24, 24};
    const int hidden = 8;
    for (int b = 0; b < 4; ++b) {
        Tensor c1({3, 3, half[b], hidden});
        init_uniform_fanin(c1, 9 * half[b], rng);
        weights_.push_back(std::move(c1));
        Tensor b1({hidden});
        init_uniform_fanin(b1, 9 * half[b], rng);
        weights_.push_back(std::move(b1));
        Tensor c2({3, 3, hidden, half[b]});
        init_uniform_fanin(c2, 9 * hidden, rng);
        weights_.push_back(std::move(c2));
        Tensor b2({half[b]});
        init_uniform_fanin(b2, 9 * hidden, rng);
        weights_.push_back(std::move(b2));
    }
    for (Tensor& w : weights_)
        for (double& v : w.data) v *= kResidualGain;
}

Tape::Id InvertibleExtractor::extract(Tape& tape, Tape::Id image,
                                      std::vector<Tape::Id>* weight_ids) const {
    const Tensor& img = tape.value(image);
    if (img.shape != std::vector<int>{16, 16, 3})
        throw std::invalid_argument("extract: image shape " + shape_str(img.shape) +
                                    " does not match extractor input [16x16x3]");
    check_range(img);

    const bool train = weight_ids != nullptr;
    std::vector<Tape::Id> wid;
    for (const Tensor& w : weights_) wid.push_back(tape.leaf(w, train));
    if (train) *weight_ids = wid;

    auto couple = [&](Tape::Id x, int block) {
        const int C = tape.value(x).shape[2];
        const int h = C / 2;
        Tape::Id x1 = tape.slice_channels(x, 0, h);
        Tape::Id x2 = tape.slice_channels(x, h, C);
        const std::size_t w0 = static_cast<std::size_t>(4 * block);
        Tape::Id f = tape.conv2d(x1, wid[w0], wid[w0 + 1], 1, 1);
        f = tape.relu(f);
        f = tape.conv2d(f, wid[w0 + 2], wid[w0 + 3], 1, 1);
        Tape::Id y2 = tape.add(x2, f);
        return tape.concat_channels(y2, x1); // swap halves for the next block
    };

    Tape::Id x = tape.scale_shift(image, 1.0 / 127.5, -1.0);
    x = tape.space_to_channel(x); // 8x8x12
    x = couple(x, 0);
    x = couple(x, 1);
    x = tape.space_to_channel(x); // 4x4x48
    x = couple(x, 2);
    x = couple(x, 3);
    return x; // 4*4*48 == 768 values, element count preserved
}

Tensor InvertibleExtractor::residual_eval(const Tensor& x, int block) const {
    Tape tape;
    const std::size_t w0 = static_cast<std::size_t>(4 * block);
    Tape::Id in = tape.leaf(x);
    Tape::Id f = tape.conv2d(in, tape.leaf(weights_[w0]), tape.leaf(weights_[w0 + 1]), 1, 1);
    f = tape.relu(f);
    f = tape.conv2d(f, tape.leaf(weights_[w0 + 2]), tape.leaf(weights_[w0 + 3]), 1, 1);
    return tape.value(f);
}

Tensor channel_to_space(const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[2] % 4 != 0)
        throw std::invalid_argument("channel_to_space: bad shape " + shape_str(t.shape));
    const int Ho = t.shape[0], Wo = t.shape[1], Co = t.shape[2];
    const int H = Ho * 2, W = Wo * 2, C = Co / 4;
    Tensor out({H, W, C});
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    for (int c = 0; c < C; ++c)
                        out.data[(static_cast<std::size_t>(2 * ho + dy) * W + (2 * wo + dx)) * C + c] =
                            t.data[(static_cast<std::size_t>(ho) * Wo + wo) * Co + (dy * 2 + dx) * C + c];
    return out;
}

Tensor InvertibleExtractor::invert(const Tensor& feature) const {
    if (feature.size() != 768)
        throw std::invalid_argument("invert: feature length " + std::to_string(feature.size()) +
                                    " != 768");
    auto uncouple = [&](const Tensor& y, int block) {
        const int C = y.shape[2];
        const int h = C / 2;
        // y = concat(y2, x1) with y2 = x2 + F(x1)
        Tensor y2({y.shape[0], y.shape[1], h});
        Tensor x1({y.shape[0], y.shape[1], h});
        const int HW = y.shape[0] * y.shape[1];
        for (int p = 0; p < HW; ++p)
            for (int c = 0; c < h; ++c) {
                y2.data[static_cast<std::size_t>(p) * h + c] = y.data[static_cast<std::size_t>(p) * C + c];
                x1.data[static_cast<std::size_t>(p) * h + c] = y.data[static_cast<std::size_t>(p) * C + h + c];
            }
        Tensor f = residual_eval(x1, block);
        Tensor x({y.shape[0], y.shape[1], C});
        for (int p = 0; p < HW; ++p)
            for (int c = 0; c < h; ++c) {
                x.data[static_cast<std::size_t>(p) * C + c] = x1.data[static_cast<std::size_t>(p) * h + c];
                x.data[static_cast<std::size_t>(p) * C + h + c] =
                    y2.data[static_cast<std::size_t>(p) * h + c] - f.data[static_cast<std::size_t>(p) * h + c];
            }
        return x;
    };

    Tensor x({4, 4, 48}, feature.data);
    x = uncouple(x, 3);
    x = uncouple(x, 2);
    x = channel_to_space(x); // 8x8x12
    x = uncouple(x, 1);
    x = uncouple(x, 0);
    x = channel_to_space(x); // 16x16x3
    for (double& v : x.data) v = (v + 1.0) * 127.5;
    return x;
}

} // namespace mimic
