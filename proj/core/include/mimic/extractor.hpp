#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "mimic/tape.hpp"
#include "mimic/tensor.hpp"

namespace mimic {

enum class InputRange { unit, byte };

/// Differentiable image-to-feature map. Weights are immutable once training
/// finishes; extract() records onto the caller's tape.
class FeatureNet {
public:
    virtual ~FeatureNet() = default;

    /// Records the feature computation on `tape`. If `weight_ids` is given,
    /// weights are registered as grad-tracked leaves and their ids returned
    /// in checkpoint order.
    virtual Tape::Id extract(Tape& tape, Tape::Id image,
                             std::vector<Tape::Id>* weight_ids = nullptr) const = 0;

    virtual std::array<int, 3> input_shape() const = 0;
    virtual int feature_dim() const = 0;
    virtual InputRange input_range() const = 0;

    virtual std::vector<Tensor>& weights() = 0;
    virtual const std::vector<Tensor>& weights() const = 0;

    /// Convenience one-shot evaluation on a private tape.
    Tensor extract_eval(const Tensor& image) const;

protected:
    /// Rejects images whose values leave the declared range, naming the
    /// offending extremum.
    void check_range(const Tensor& image) const;
};

/// Conv/relu stack with stride-2 downsampling, an average pool, and a dense
/// projection to `feature_dim`. Supports unit ([-1,1]) and byte ([0,255])
/// input conventions; the byte variant rescales internally.
class PlainCnnExtractor final : public FeatureNet {
public:
    /// `input_size` must be a power of two >= 8.
    PlainCnnExtractor(InputRange range, int input_size, int feature_dim, std::uint64_t seed);

    Tape::Id extract(Tape& tape, Tape::Id image,
                     std::vector<Tape::Id>* weight_ids = nullptr) const override;
    std::array<int, 3> input_shape() const override { return {input_size_, input_size_, 3}; }
    int feature_dim() const override { return feature_dim_; }
    InputRange input_range() const override { return range_; }
    std::vector<Tensor>& weights() override { return weights_; }
    const std::vector<Tensor>& weights() const override { return weights_; }

private:
    InputRange range_;
    int input_size_;
    int feature_dim_;
    std::vector<int> conv_channels_;
    std::vector<Tensor> weights_; // per conv: kernel, bias; then dense W, dense b
};

/// Bijective extractor: invertible space-to-channel downsampling interleaved
/// with additive coupling blocks (y1 = x1, y2 = x2 + F(x1), halves swapped).
/// Input is a 16x16x3 byte image; the feature preserves element count (768).
class InvertibleExtractor final : public FeatureNet {
public:
    explicit InvertibleExtractor(std::uint64_t seed);

    Tape::Id extract(Tape& tape, Tape::Id image,
                     std::vector<Tape::Id>* weight_ids = nullptr) const override;
    std::array<int, 3> input_shape() const override { return {16, 16, 3}; }
    int feature_dim() const override { return 768; }
    InputRange input_range() const override { return InputRange::byte; }
    std::vector<Tensor>& weights() override { return weights_; }
    const std::vector<Tensor>& weights() const override { return weights_; }

    /// Unique preimage of a feature vector, as a byte-range {16,16,3} tensor.
    Tensor invert(const Tensor& feature) const;

private:
    Tensor residual_eval(const Tensor& x, int block) const;
    std::vector<Tensor> weights_; // per block: conv1 kernel, bias, conv2 kernel, bias
};

/// Inverse of Tape::space_to_channel, as a plain tensor transform.
Tensor channel_to_space(const Tensor& t);

} // namespace mimic
