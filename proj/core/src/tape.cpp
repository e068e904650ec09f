#include "mimic/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mimic {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require_image(const Tensor& t, const char* op) {
    if (t.shape.size() != 3)
        fail(std::string(op) + ": expected {H,W,C} input, got " + shape_str(t.shape));
}

} // namespace

Tape::Id Tape::push_value(Tensor t, bool needs_grad) {
    values_.push_back(std::move(t));
    needs_grad_.push_back(needs_grad);
    return static_cast<Id>(values_.size()) - 1;
}

void Tape::check_id(Id id, const char* who) const {
    if (id < 0 || static_cast<std::size_t>(id) >= values_.size())
        fail(std::string(who) + ": invalid tape id " + std::to_string(id));
}

Tape::Id Tape::leaf(Tensor t, bool requires_grad) {
    Id id = push_value(std::move(t), requires_grad);
    Node n;
    n.op = Op::leaf;
    n.out = id;
    nodes_.push_back(std::move(n));
    return id;
}

const Tensor& Tape::value(Id id) const {
    check_id(id, "value");
    return values_[static_cast<std::size_t>(id)];
}

Tape::Id Tape::unary(Op op, Id x, Tensor out) {
    check_id(x, "unary");
    Id id = push_value(std::move(out), needs_grad_[static_cast<std::size_t>(x)]);
    Node n;
    n.op = op;
    n.in[0] = x;
    n.out = id;
    nodes_.push_back(std::move(n));
    return id;
}

Tape::Id Tape::conv2d(Id input, Id kernel, Id bias, int stride, int pad) {
    check_id(input, "conv2d");
    check_id(kernel, "conv2d");
    const Tensor& in = value(input);
    const Tensor& ker = value(kernel);
    require_image(in, "conv2d");
    if (ker.shape.size() != 4 || ker.shape[0] != ker.shape[1])
        fail("conv2d: expected {K,K,Cin,Cout} kernel, got " + shape_str(ker.shape));
    if (stride <= 0) fail("conv2d: non-positive stride " + std::to_string(stride));
    if (pad < 0) fail("conv2d: negative padding");
    const int H = in.shape[0], W = in.shape[1], Cin = in.shape[2];
    const int K = ker.shape[0], Cout = ker.shape[3];
    if (ker.shape[2] != Cin)
        fail("conv2d: input channels mismatch, input " + shape_str(in.shape) +
             " vs kernel " + shape_str(ker.shape));
    const int Ho = (H + 2 * pad - K) / stride + 1;
    const int Wo = (W + 2 * pad - K) / stride + 1;
    if (H + 2 * pad < K || W + 2 * pad < K)
        fail("conv2d: kernel larger than padded input, input " + shape_str(in.shape) +
             " vs kernel " + shape_str(ker.shape));

    Tensor out({Ho, Wo, Cout});
    bool ng = needs_grad_[static_cast<std::size_t>(input)] || needs_grad_[static_cast<std::size_t>(kernel)];
    if (bias >= 0) {
        check_id(bias, "conv2d");
        const Tensor& b = value(bias);
        if (b.size() != static_cast<std::size_t>(Cout))
            fail("conv2d: bias shape " + shape_str(b.shape) + " does not match Cout " +
                 std::to_string(Cout));
        for (std::size_t p = 0; p < static_cast<std::size_t>(Ho) * Wo; ++p)
            for (int co = 0; co < Cout; ++co) out.data[p * Cout + co] = b.data[static_cast<std::size_t>(co)];
        ng = ng || needs_grad_[static_cast<std::size_t>(bias)];
    }
    const double* id_ = in.data.data();
    const double* kd = ker.data.data();
    double* od = out.data.data();
    for (int ho = 0; ho < Ho; ++ho) {
        for (int kh = 0; kh < K; ++kh) {
            const int h = ho * stride + kh - pad;
            if (h < 0 || h >= H) continue;
            for (int wo = 0; wo < Wo; ++wo) {
                double* opx = od + (static_cast<std::size_t>(ho) * Wo + wo) * Cout;
                for (int kw = 0; kw < K; ++kw) {
                    const int w = wo * stride + kw - pad;
                    if (w < 0 || w >= W) continue;
                    const double* ipx = id_ + (static_cast<std::size_t>(h) * W + w) * Cin;
                    const double* krow = kd + (static_cast<std::size_t>(kh) * K + kw) * Cin * Cout;
                    for (int ci = 0; ci < Cin; ++ci) {
                        const double a = ipx[ci];
                        const double* kr = krow + static_cast<std::size_t>(ci) * Cout;
                        for (int co = 0; co < Cout; ++co) opx[co] += a * kr[co];
                    }
                }
            }
        }
    }

    Id idout = push_value(std::move(out), ng);
    Node n;
    n.op = Op::conv2d;
    n.in[0] = input;
    n.in[1] = kernel;
    n.in[2] = bias;
    n.out = idout;
    n.iparam = {stride, pad, 0, 0};
    nodes_.push_back(std::move(n));
    return idout;
}

Tape::Id Tape::dense(Id input, Id weight, Id bias, int out_dim) {
    check_id(input, "dense");
    check_id(weight, "dense");
    const Tensor& in = value(input);
    const Tensor& w = value(weight);
    if (out_dim <= 0) fail("dense: non-positive out_dim");
    const std::size_t nin = in.size();
    const std::size_t m = static_cast<std::size_t>(out_dim);
    if (w.size() != nin * m)
        fail("dense: weight size " + std::to_string(w.size()) + " does not match input " +
             shape_str(in.shape) + " x out " + std::to_string(out_dim));
    bool ng = needs_grad_[static_cast<std::size_t>(input)] || needs_grad_[static_cast<std::size_t>(weight)];

    Tensor out({out_dim});
    if (bias >= 0) {
        check_id(bias, "dense");
        const Tensor& b = value(bias);
        if (b.size() != m)
            fail("dense: bias shape " + shape_str(b.shape) + " does not match out " +
                 std::to_string(out_dim));
        out.data = b.data;
        ng = ng || needs_grad_[static_cast<std::size_t>(bias)];
    }
    const double* xd = in.data.data();
    const double* wd = w.data.data();
    double* od = out.data.data();
    for (std::size_t i = 0; i < nin; ++i) {
        const double a = xd[i];
        const double* wr = wd + i * m;
        for (std::size_t j = 0; j < m; ++j) od[j] += a * wr[j];
    }

    Id idout = push_value(std::move(out), ng);
    Node n;
    n.op = Op::dense;
    n.in[0] = input;
    n.in[1] = weight;
    n.in[2] = bias;
    n.out = idout;
    n.iparam = {out_dim, 0, 0, 0};
    nodes_.push_back(std::move(n));
    return idout;
}

Tape::Id Tape::relu(Id x) {
    Tensor out = value(x);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return unary(Op::relu, x, std::move(out));
}

Tape::Id Tape::tanh(Id x) {
    Tensor out = value(x);
    for (double& v : out.data) v = std::tanh(v);
    return unary(Op::tanh_, x, std::move(out));
}

Tape::Id Tape::avgpool2d(Id x, int window) {
    const Tensor& in = value(x);
    require_image(in, "avgpool2d");
    const int H = in.shape[0], W = in.shape[1], C = in.shape[2];
    if (window <= 0 || H % window != 0 || W % window != 0)
        fail("avgpool2d: window " + std::to_string(window) + " does not divide " + shape_str(in.shape));
    const int Ho = H / window, Wo = W / window;
    Tensor out({Ho, Wo, C});
    const double inv = 1.0 / (window * window);
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int c = 0; c < C; ++c) {
                double s = 0.0;
                for (int dy = 0; dy < window; ++dy)
                    for (int dx = 0; dx < window; ++dx)
                        s += in.data[(static_cast<std::size_t>(ho * window + dy) * W + (wo * window + dx)) * C + c];
                out.data[(static_cast<std::size_t>(ho) * Wo + wo) * C + c] = s * inv;
            }
    Id idout = unary(Op::avgpool2d, x, std::move(out));
    nodes_.back().iparam[0] = window;
    return idout;
}

Tape::Id Tape::maxpool2d(Id x, int window) {
    const Tensor& in = value(x);
    require_image(in, "maxpool2d");
    const int H = in.shape[0], W = in.shape[1], C = in.shape[2];
    if (window <= 0 || H % window != 0 || W % window != 0)
        fail("maxpool2d: window " + std::to_string(window) + " does not divide " + shape_str(in.shape));
    const int Ho = H / window, Wo = W / window;
    Tensor out({Ho, Wo, C});
    std::vector<int> argmax(out.size());
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int c = 0; c < C; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = -1;
                // row-major scan, first maximum wins
                for (int dy = 0; dy < window; ++dy)
                    for (int dx = 0; dx < window; ++dx) {
                        const int idx = static_cast<int>(
                            (static_cast<std::size_t>(ho * window + dy) * W + (wo * window + dx)) * C + c);
                        if (in.data[static_cast<std::size_t>(idx)] > best) {
                            best = in.data[static_cast<std::size_t>(idx)];
                            best_idx = idx;
                        }
                    }
                const std::size_t o = (static_cast<std::size_t>(ho) * Wo + wo) * C + c;
                out.data[o] = best;
                argmax[o] = best_idx;
            }
    Id idout = unary(Op::maxpool2d, x, std::move(out));
    nodes_.back().iparam[0] = window;
    nodes_.back().saved = std::move(argmax);
    return idout;
}

Tape::Id Tape::add(Id a, Id b) {
    check_id(a, "add");
    check_id(b, "add");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape != tb.shape)
        fail("add: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
    bool ng = needs_grad_[static_cast<std::size_t>(a)] || needs_grad_[static_cast<std::size_t>(b)];
    Id idout = push_value(std::move(out), ng);
    Node n;
    n.op = Op::add;
    n.in[0] = a;
    n.in[1] = b;
    n.out = idout;
    nodes_.push_back(std::move(n));
    return idout;
}

Tape::Id Tape::mul(Id a, Id b) {
    check_id(a, "mul");
    check_id(b, "mul");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape != tb.shape)
        fail("mul: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
    bool ng = needs_grad_[static_cast<std::size_t>(a)] || needs_grad_[static_cast<std::size_t>(b)];
    Id idout = push_value(std::move(out), ng);
    Node n;
    n.op = Op::mul;
    n.in[0] = a;
    n.in[1] = b;
    n.out = idout;
    nodes_.push_back(std::move(n));
    return idout;
}

Tape::Id Tape::scale_shift(Id x, double scale, double shift) {
    Tensor out = value(x);
    for (double& v : out.data) v = scale * v + shift;
    Id idout = unary(Op::scale_shift, x, std::move(out));
    nodes_.back().dparam = {scale, shift};
    return idout;
}

Tape::Id Tape::sumsq(Id x) {
    const Tensor& in = value(x);
    double s = 0.0;
    for (double v : in.data) s += v * v;
    return unary(Op::sumsq, x, Tensor::scalar(s));
}

Tape::Id Tape::slice(Id x, int begin, int len) {
    const Tensor& in = value(x);
    if (begin < 0 || len <= 0 || static_cast<std::size_t>(begin) + static_cast<std::size_t>(len) > in.size())
        fail("slice: range [" + std::to_string(begin) + "," + std::to_string(begin + len) +
             ") out of bounds for " + shape_str(in.shape));
    Tensor out({len});
    std::copy(in.data.begin() + begin, in.data.begin() + begin + len, out.data.begin());
    Id idout = unary(Op::slice, x, std::move(out));
    nodes_.back().iparam = {begin, len, 0, 0};
    return idout;
}

Tape::Id Tape::concat(Id a, Id b) {
    check_id(a, "concat");
    check_id(b, "concat");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    Tensor out({static_cast<int>(ta.size() + tb.size())});
    std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
    std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + static_cast<long>(ta.size()));
    bool ng = needs_grad_[static_cast<std::size_t>(a)] || needs_grad_[static_cast<std::size_t>(b)];
    Id idout = push_value(std::move(out), ng);
    Node n;
    n.op = Op::concat;
    n.in[0] = a;
    n.in[1] = b;
    n.out = idout;
    n.iparam = {static_cast<int>(ta.size()), 0, 0, 0};
    nodes_.push_back(std::move(n));
    return idout;
}

Tape::Id Tape::slice_channels(Id x, int c_begin, int c_end) {
    const Tensor& in = value(x);
    require_image(in, "slice_channels");
    const int H = in.shape[0], W = in.shape[1], C = in.shape[2];
    if (c_begin < 0 || c_end <= c_begin || c_end > C)
        fail("slice_channels: range [" + std::to_string(c_begin) + "," + std::to_string(c_end) +
             ") invalid for " + shape_str(in.shape));
    const int Cs = c_end - c_begin;
    Tensor out({H, W, Cs});
    for (int p = 0; p < H * W; ++p)
        for (int c = 0; c < Cs; ++c)
            out.data[static_cast<std::size_t>(p) * Cs + c] =
                in.data[static_cast<std::size_t>(p) * C + c_begin + c];
    Id idout = unary(Op::slice_channels, x, std::move(out));
    nodes_.back().iparam = {c_begin, c_end, 0, 0};
    return idout;
}

Tape::Id Tape::concat_channels(Id a, Id b) {
    check_id(a, "concat_channels");
    check_id(b, "concat_channels");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_image(ta, "concat_channels");
    require_image(tb, "concat_channels");
    if (ta.shape[0] != tb.shape[0] || ta.shape[1] != tb.shape[1])
        fail("concat_channels: spatial mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    const int H = ta.shape[0], W = ta.shape[1], Ca = ta.shape[2], Cb = tb.shape[2];
    Tensor out({H, W, Ca + Cb});
    for (int p = 0; p < H * W; ++p) {
        for (int c = 0; c < Ca; ++c)
            out.data[static_cast<std::size_t>(p) * (Ca + Cb) + c] = ta.data[static_cast<std::size_t>(p) * Ca + c];
        for (int c = 0; c < Cb; ++c)
            out.data[static_cast<std::size_t>(p) * (Ca + Cb) + Ca + c] = tb.data[static_cast<std::size_t>(p) * Cb + c];
    }
    bool ng = needs_grad_[static_cast<std::size_t>(a)] || needs_grad_[static_cast<std::size_t>(b)];
    Id idout = push_value(std::move(out), ng);
    Node n;
    n.op = Op::concat_channels;
    n.in[0] = a;
    n.in[1] = b;
    n.out = idout;
    n.iparam = {Ca, Cb, 0, 0};
    nodes_.push_back(std::move(n));
    return idout;
}

Tape::Id Tape::space_to_channel(Id x) {
    const Tensor& in = value(x);
    require_image(in, "space_to_channel");
    const int H = in.shape[0], W = in.shape[1], C = in.shape[2];
    if (H % 2 != 0 || W % 2 != 0)
        fail("space_to_channel: odd spatial size " + shape_str(in.shape));
    const int Ho = H / 2, Wo = W / 2, Co = 4 * C;
    Tensor out({Ho, Wo, Co});
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    for (int c = 0; c < C; ++c)
                        out.data[(static_cast<std::size_t>(ho) * Wo + wo) * Co + (dy * 2 + dx) * C + c] =
                            in.data[(static_cast<std::size_t>(2 * ho + dy) * W + (2 * wo + dx)) * C + c];
    return unary(Op::space_to_channel, x, std::move(out));
}

std::vector<double>& Tape::grad_buf(Id id) {
    auto& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) g.assign(values_[static_cast<std::size_t>(id)].size(), 0.0);
    return g;
}

const std::vector<double>& Tape::grad(Id id) const {
    check_id(id, "grad");
    if (!consumed_) throw std::logic_error("grad: backward has not run");
    const auto& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) throw std::logic_error("grad: id " + std::to_string(id) + " does not track gradient");
    return g;
}

void Tape::backward(Id output, std::span<const double> seed) {
    check_id(output, "backward");
    if (consumed_) throw std::logic_error("backward: tape already consumed");
    const Tensor& out = value(output);
    if (seed.size() != out.size())
        fail("backward: seed length " + std::to_string(seed.size()) + " vs output size " +
             std::to_string(out.size()));
    consumed_ = true;
    grads_.assign(values_.size(), {});
    grad_buf(output).assign(seed.begin(), seed.end());

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        const Node& n = *it;
        if (!needs_grad_[static_cast<std::size_t>(n.out)]) continue;
        const auto& gout = grads_[static_cast<std::size_t>(n.out)];
        if (gout.empty()) continue;
        auto wants = [&](Id id) { return id >= 0 && needs_grad_[static_cast<std::size_t>(id)]; };

        switch (n.op) {
        case Op::leaf:
            break;
        case Op::conv2d: {
            const Tensor& in = value(n.in[0]);
            const Tensor& ker = value(n.in[1]);
            const Tensor& outv = value(n.out);
            const int H = in.shape[0], W = in.shape[1], Cin = in.shape[2];
            const int K = ker.shape[0], Cout = ker.shape[3];
            const int Ho = outv.shape[0], Wo = outv.shape[1];
            const int stride = n.iparam[0], pad = n.iparam[1];
            const bool gi = wants(n.in[0]), gk = wants(n.in[1]);
            double* gin = gi ? grad_buf(n.in[0]).data() : nullptr;
            double* gker = gk ? grad_buf(n.in[1]).data() : nullptr;
            const double* id_ = in.data.data();
            const double* kd = ker.data.data();
            for (int ho = 0; ho < Ho; ++ho) {
                for (int kh = 0; kh < K; ++kh) {
                    const int h = ho * stride + kh - pad;
                    if (h < 0 || h >= H) continue;
                    for (int wo = 0; wo < Wo; ++wo) {
                        const double* gpx = gout.data() + (static_cast<std::size_t>(ho) * Wo + wo) * Cout;
                        for (int kw = 0; kw < K; ++kw) {
                            const int w = wo * stride + kw - pad;
                            if (w < 0 || w >= W) continue;
                            const std::size_t ipos = (static_cast<std::size_t>(h) * W + w) * Cin;
                            const std::size_t kpos = (static_cast<std::size_t>(kh) * K + kw) * Cin * Cout;
                            for (int ci = 0; ci < Cin; ++ci) {
                                const double* kr = kd + kpos + static_cast<std::size_t>(ci) * Cout;
                                if (gi) {
                                    double s = 0.0;
                                    for (int co = 0; co < Cout; ++co) s += kr[co] * gpx[co];
                                    gin[ipos + static_cast<std::size_t>(ci)] += s;
                                }
                                if (gk) {
                                    const double a = id_[ipos + static_cast<std::size_t>(ci)];
                                    double* gkr = gker + kpos + static_cast<std::size_t>(ci) * Cout;
                                    for (int co = 0; co < Cout; ++co) gkr[co] += a * gpx[co];
                                }
                            }
                        }
                    }
                }
            }
            if (n.in[2] >= 0 && wants(n.in[2])) {
                auto& gb = grad_buf(n.in[2]);
                for (std::size_t p = 0; p < static_cast<std::size_t>(Ho) * Wo; ++p)
                    for (int co = 0; co < Cout; ++co)
                        gb[static_cast<std::size_t>(co)] += gout[p * Cout + co];
            }
            break;
        }
        case Op::dense: {
            const Tensor& in = value(n.in[0]);
            const Tensor& w = value(n.in[1]);
            const std::size_t nin = in.size();
            const std::size_t m = static_cast<std::size_t>(n.iparam[0]);
            if (wants(n.in[0])) {
                auto& gin = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < nin; ++i) {
                    const double* wr = w.data.data() + i * m;
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += wr[j] * gout[j];
                    gin[i] += s;
                }
            }
            if (wants(n.in[1])) {
                auto& gw = grad_buf(n.in[1]);
                for (std::size_t i = 0; i < nin; ++i) {
                    const double a = in.data[i];
                    double* gr = gw.data() + i * m;
                    for (std::size_t j = 0; j < m; ++j) gr[j] += a * gout[j];
                }
            }
            if (n.in[2] >= 0 && wants(n.in[2])) {
                auto& gb = grad_buf(n.in[2]);
                for (std::size_t j = 0; j < m; ++j) gb[j] += gout[j];
            }
            break;
        }
        case Op::relu: {
            const Tensor& in = value(n.in[0]);
            if (wants(n.in[0])) {
                auto& gin = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < in.size(); ++i)
                    if (in.data[i] > 0.0) gin[i] += gout[i];
            }
            break;
        }
        case Op::tanh_: {
            const Tensor& outv = value(n.out);
            if (wants(n.in[0])) {
                auto& gin = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < outv.size(); ++i)
                    gin[i] += (1.0 - outv.data[i] * outv.data[i]) * gout[i];
            }
            break;
        }
        case Op::avgpool2d: {
            if (!wants(n.in[0])) break;
            const Tensor& in = value(n.in[0]);
            const Tensor& outv = value(n.out);
            const int W = in.shape[1], C = in.shape[2];
            const int Ho = outv.shape[0], Wo = outv.shape[1];
            const int k = n.iparam[0];
            const double inv = 1.0 / (k * k);
            auto& gin = grad_buf(n.in[0]);
            for (int ho = 0; ho < Ho; ++ho)
                for (int wo = 0; wo < Wo; ++wo)
                    for (int c = 0; c < C; ++c) {
                        const double g = gout[(static_cast<std::size_t>(ho) * Wo + wo) * C + c] * inv;
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx)
                                gin[(static_cast<std::size_t>(ho * k + dy) * W + (wo * k + dx)) * C + c] += g;
                    }
            break;
        }
        case Op::maxpool2d: {
            if (!wants(n.in[0])) break;
            auto& gin = grad_buf(n.in[0]);
            for (std::size_t o = 0; o < gout.size(); ++o)
                gin[static_cast<std::size_t>(n.saved[o])] += gout[o];
            break;
        }
        case Op::add: {
            for (int s = 0; s < 2; ++s)
                if (wants(n.in[s])) {
                    auto& g = grad_buf(n.in[s]);
                    for (std::size_t i = 0; i < gout.size(); ++i) g[i] += gout[i];
                }
            break;
        }
        case Op::mul: {
            const Tensor& ta = value(n.in[0]);
            const Tensor& tb = value(n.in[1]);
            if (wants(n.in[0])) {
                auto& g = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += tb.data[i] * gout[i];
            }
            if (wants(n.in[1])) {
                auto& g = grad_buf(n.in[1]);
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += ta.data[i] * gout[i];
            }
            break;
        }
        case Op::scale_shift: {
            if (wants(n.in[0])) {
                auto& g = grad_buf(n.in[0]);
                const double a = n.dparam[0];
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += a * gout[i];
            }
            break;
        }
        case Op::sumsq: {
            if (wants(n.in[0])) {
                const Tensor& in = value(n.in[0]);
                auto& g = grad_buf(n.in[0]);
                const double s = gout[0];
                for (std::size_t i = 0; i < in.size(); ++i) g[i] += 2.0 * in.data[i] * s;
            }
            break;
        }
        case Op::slice: {
            if (wants(n.in[0])) {
                auto& g = grad_buf(n.in[0]);
                const int begin = n.iparam[0];
                for (std::size_t i = 0; i < gout.size(); ++i) g[static_cast<std::size_t>(begin) + i] += gout[i];
            }
            break;
        }
        case Op::concat: {
            const std::size_t na = static_cast<std::size_t>(n.iparam[0]);
            if (wants(n.in[0])) {
                auto& g = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < na; ++i) g[i] += gout[i];
            }
            if (wants(n.in[1])) {
                auto& g = grad_buf(n.in[1]);
                for (std::size_t i = na; i < gout.size(); ++i) g[i - na] += gout[i];
            }
            break;
        }
        case Op::slice_channels: {
            if (!wants(n.in[0])) break;
            const Tensor& in = value(n.in[0]);
            const int C = in.shape[2];
            const int c0 = n.iparam[0], Cs = n.iparam[1] - n.iparam[0];
            const int HW = in.shape[0] * in.shape[1];
            auto& g = grad_buf(n.in[0]);
            for (int p = 0; p < HW; ++p)
                for (int c = 0; c < Cs; ++c)
                    g[static_cast<std::size_t>(p) * C + c0 + c] += gout[static_cast<std::size_t>(p) * Cs + c];
            break;
        }
        case Op::concat_channels: {
            const int Ca = n.iparam[0], Cb = n.iparam[1];
            const int HW = value(n.out).shape[0] * value(n.out).shape[1];
            if (wants(n.in[0])) {
                auto& g = grad_buf(n.in[0]);
                for (int p = 0; p < HW; ++p)
                    for (int c = 0; c < Ca; ++c)
                        g[static_cast<std::size_t>(p) * Ca + c] += gout[static_cast<std::size_t>(p) * (Ca + Cb) + c];
            }
            if (wants(n.in[1])) {
                auto& g = grad_buf(n.in[1]);
                for (int p = 0; p < HW; ++p)
                    for (int c = 0; c < Cb; ++c)
                        g[static_cast<std::size_t>(p) * Cb + c] += gout[static_cast<std::size_t>(p) * (Ca + Cb) + Ca + c];
            }
            break;
        }
        case Op::space_to_channel: {
            if (!wants(n.in[0])) break;
            const Tensor& in = value(n.in[0]);
            const int W = in.shape[1], C = in.shape[2];
            const Tensor& outv = value(n.out);
            const int Ho = outv.shape[0], Wo = outv.shape[1], Co = outv.shape[2];
            auto& g = grad_buf(n.in[0]);
            for (int ho = 0; ho < Ho; ++ho)
                for (int wo = 0; wo < Wo; ++wo)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            for (int c = 0; c < C; ++c)
                                g[(static_cast<std::size_t>(2 * ho + dy) * W + (2 * wo + dx)) * C + c] +=
                                    gout[(static_cast<std::size_t>(ho) * Wo + wo) * Co + (dy * 2 + dx) * C + c];
            break;
        }
        }
    }
}

} // namespace mimic
