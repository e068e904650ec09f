#pragma once

#include <array>
#include <span>
#include <vector>

#include "mimic/tensor.hpp"

namespace mimic {

/// Single-use reverse-mode tape. Operations append nodes in topological
/// order; backward() replays them once in reverse and populates gradients
/// for every value that (transitively) depends on a grad-tracked leaf.
///
/// Tapes are built fresh per optimization step and are not thread-shared.
class Tape {
public:
    using Id = int;

    Id leaf(Tensor t, bool requires_grad = false);

    /// input {H,W,Cin}, kernel {K,K,Cin,Cout}, zero padding; bias {Cout}
    /// added per output channel, or -1 for none.
    Id conv2d(Id input, Id kernel, Id bias, int stride, int pad);
    /// weight holds in*out values laid out [in][out]; bias may be -1 for none.
    Id dense(Id input, Id weight, Id bias, int out_dim);
    Id relu(Id x);
    Id tanh(Id x);
    Id avgpool2d(Id x, int window);
    Id maxpool2d(Id x, int window);
    Id add(Id a, Id b);
    Id mul(Id a, Id b);
    Id scale_shift(Id x, double scale, double shift);
    Id sumsq(Id x);
    /// Flat views, used for embedding rows and stacked logits.
    Id slice(Id x, int begin, int len);
    Id concat(Id a, Id b);
    Id slice_channels(Id x, int c_begin, int c_end);
    Id concat_channels(Id a, Id b);
    /// {H,W,C} -> {H/2,W/2,4C}; exact permutation, used by the invertible net.
    Id space_to_channel(Id x);

    const Tensor& value(Id id) const;
    bool tracks_grad(Id id) const { return needs_grad_.at(static_cast<std::size_t>(id)); }

    /// Accumulates d<seed,output>/dx into every grad-tracked value.
    /// A tape may only be consumed once.
    void backward(Id output, std::span<const double> seed);
    bool consumed() const { return consumed_; }

    /// Valid after backward(), for ids with tracks_grad().
    const std::vector<double>& grad(Id id) const;

private:
    enum class Op {
        leaf, conv2d, dense, relu, tanh_, avgpool2d, maxpool2d,
        add, mul, scale_shift, sumsq, slice, concat,
        slice_channels, concat_channels, space_to_channel,
    };
    struct Node {
        Op op;
        std::array<Id, 3> in{-1, -1, -1};
        Id out = -1;
        std::array<int, 4> iparam{0, 0, 0, 0};
        std::array<double, 2> dparam{0.0, 0.0};
        std::vector<int> saved; // maxpool argmax indices
    };

    Id push_value(Tensor t, bool needs_grad);
    Id unary(Op op, Id x, Tensor out);
    void check_id(Id id, const char* who) const;
    std::vector<double>& grad_buf(Id id);

    std::vector<Tensor> values_;
    std::vector<bool> needs_grad_;
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    bool consumed_ = false;
};

} // namespace mimic
