#include "mimic/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mimic/adam.hpp"
#include "mimic/rng.hpp"

namespace mimic {

namespace {

void require_data(const std::vector<SyntheticSample>& data) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    for (const auto& s : data)
        if (s.label < 0 || s.label >= kNumClasses)
            throw std::invalid_argument("train: label " + std::to_string(s.label) + " out of range");
}

double cross_entropy(std::span<const double> logits, int target) {
    const std::vector<double> p = softmax(logits);
    return -std::log(std::max(p[static_cast<std::size_t>(target)], 1e-300));
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

} // namespace

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (double& v : p) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

Tensor net_input(const FeatureNet& net, const ImageU8& img) {
    return net.input_range() == InputRange::unit ? scale_to_unit(img) : to_byte_tensor(img);
}

// ---------------------------------------------------------------------------

TrainResult train_extractor_with_head(FeatureNet& net, ClassifierHead& head,
                                      const std::vector<SyntheticSample>& data, int epochs,
                                      std::uint64_t seed, double lr) {
    require_data(data);
    if (epochs < 0) throw std::invalid_argument("train: negative epoch count");
    Rng rng(seed);

    std::vector<Tensor*> params;
    for (Tensor& w : net.weights()) params.push_back(&w);
    params.push_back(&head.weight());
    params.push_back(&head.bias());
    std::vector<AdamState> opt;
    for (Tensor* p : params) opt.emplace_back(p->size(), lr);

    const int C = head.num_classes();

    auto eval_loss = [&]() {
        double total = 0.0;
        for (const auto& s : data) {
            const Tensor feat = net.extract_eval(net_input(net, s.image));
            total += cross_entropy(head.classify(feat.data).logits, s.label);
        }
        return total / static_cast<double>(data.size());
    };

    TrainResult result;
    result.epoch_losses.push_back(eval_loss());

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i : shuffled_indices(data.size(), rng)) {
            const SyntheticSample& s = data[static_cast<std::size_t>(i)];
            Tape tape;
            Tape::Id img = tape.leaf(net_input(net, s.image));
            std::vector<Tape::Id> wid;
            Tape::Id feat = net.extract(tape, img, &wid);
            Tape::Id w = tape.leaf(head.weight(), true);
            Tape::Id b = tape.leaf(head.bias(), true);
            Tape::Id logits = tape.dense(feat, w, b, C);

            std::vector<double> seed_grad = softmax(tape.value(logits).data);
            seed_grad[static_cast<std::size_t>(s.label)] -= 1.0;
            tape.backward(logits, seed_grad);

            for (std::size_t p = 0; p < net.weights().size(); ++p)
                opt[p].step(params[p]->data, tape.grad(wid[p]));
            opt[params.size() - 2].step(head.weight().data, tape.grad(w));
            opt[params.size() - 1].step(head.bias().data, tape.grad(b));
        }
        result.epoch_losses.push_back(eval_loss());
    }

    int correct = 0;
    for (const auto& s : data) {
        const Tensor feat = net.extract_eval(net_input(net, s.image));
        if (head.classify(feat.data).label == s.label) ++correct;
    }
    result.final_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return result;
}

// ---------------------------------------------------------------------------

TrainResult train_classifier_head(const FeatureNet& net, ClassifierHead& head,
                                  const std::vector<SyntheticSample>& data, int epochs,
                                  std::uint64_t seed, double lr) {
    require_data(data);
    if (epochs < 0) throw std::invalid_argument("train: negative epoch count");
    if (head.feature_dim() != net.feature_dim())
        throw std::invalid_argument("train: classifier feature dim mismatch");
    Rng rng(seed);

    const int C = head.num_classes();
    const int d = head.feature_dim();
    std::vector<Tensor> features;
    features.reserve(data.size());
    for (const auto& s : data) features.push_back(net.extract_eval(net_input(net, s.image)));

    AdamState opt_w(head.weight().size(), lr), opt_b(head.bias().size(), lr);

    auto eval_loss = [&]() {
        double total = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            total += cross_entropy(head.classify(features[i].data).logits, data[i].label);
        return total / static_cast<double>(data.size());
    };

    TrainResult result;
    result.epoch_losses.push_back(eval_loss());

    std::vector<double> gw(head.weight().size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i : shuffled_indices(data.size(), rng)) {
            const std::vector<double>& f = features[i].data;
            std::vector<double> g = softmax(head.classify(f).logits);
            g[static_cast<std::size_t>(data[i].label)] -= 1.0;
            for (int fi = 0; fi < d; ++fi)
                for (int c = 0; c < C; ++c)
                    gw[static_cast<std::size_t>(fi) * C + c] = f[static_cast<std::size_t>(fi)] * g[static_cast<std::size_t>(c)];
            opt_w.step(head.weight().data, gw);
            opt_b.step(head.bias().data, g);
        }
        result.epoch_losses.push_back(eval_loss());
    }

    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (head.classify(features[i].data).label == data[i].label) ++correct;
    result.final_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return result;
}

// ---------------------------------------------------------------------------

TrainResult train_decoder_head(const FeatureNet& net, SeqDecoderHead& head,
                               const std::vector<SyntheticSample>& data, int epochs,
                               std::uint64_t seed, double lr) {
    require_data(data);
    if (epochs < 0) throw std::invalid_argument("train: negative epoch count");
    if (head.feature_dim() != net.feature_dim())
        throw std::invalid_argument("train: decoder feature dim mismatch");
    Rng rng(seed);

    const int H = head.hidden_dim();
    const int V = head.vocab_size();

    std::vector<Tensor> features;
    features.reserve(data.size());
    for (const auto& s : data) features.push_back(net.extract_eval(net_input(net, s.image)));

    std::vector<AdamState> opt;
    for (Tensor& w : head.weights()) opt.emplace_back(w.size(), lr);

    // Teacher-forced forward; returns per-step logit ids and the token targets.
    auto build = [&](Tape& tape, const Tensor& feature, const std::vector<int>& tokens,
                     std::vector<Tape::Id>& wid, std::vector<Tape::Id>& step_logits,
                     std::vector<int>& targets) {
        wid.clear();
        for (const Tensor& w : head.weights()) wid.push_back(tape.leaf(w, true));
        const Tape::Id embed = wid[0];
        auto sigmoid_node = [&](Tape::Id x) {
            return tape.scale_shift(tape.tanh(tape.scale_shift(x, 0.5, 0.0)), 0.5, 0.5);
        };

        Tape::Id feat = tape.leaf(feature);
        Tape::Id h = tape.tanh(tape.dense(feat, wid[1], wid[2], H));

        targets = tokens;
        targets.push_back(SeqDecoderHead::kEos);
        int prev = SeqDecoderHead::kBos;
        for (std::size_t t = 0; t < targets.size(); ++t) {
            Tape::Id x = tape.slice(embed, prev * H, H);
            Tape::Id z = sigmoid_node(tape.add(tape.dense(x, wid[3], wid[5], H),
                                               tape.dense(h, wid[4], -1, H)));
            Tape::Id ht = tape.tanh(tape.add(tape.dense(x, wid[6], wid[8], H),
                                             tape.dense(h, wid[7], -1, H)));
            h = tape.add(h, tape.mul(z, tape.add(ht, tape.scale_shift(h, -1.0, 0.0))));
            step_logits.push_back(tape.dense(h, wid[9], wid[10], V));
            prev = targets[t];
        }
    };

    auto eval_loss = [&]() {
        double total = 0.0;
        std::size_t steps = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            Tape tape;
            std::vector<Tape::Id> wid, step_logits;
            std::vector<int> targets;
            build(tape, features[i], caption_token_ids(data[i]), wid, step_logits, targets);
            for (std::size_t t = 0; t < targets.size(); ++t) {
                total += cross_entropy(tape.value(step_logits[t]).data, targets[t]);
                ++steps;
            }
        }
        return total / static_cast<double>(steps);
    };

    TrainResult result;
    result.epoch_losses.push_back(eval_loss());

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i : shuffled_indices(data.size(), rng)) {
            Tape tape;
            std::vector<Tape::Id> wid, step_logits;
            std::vector<int> targets;
            build(tape, features[i], caption_token_ids(data[i]), wid, step_logits, targets);

            Tape::Id all = step_logits[0];
            for (std::size_t t = 1; t < step_logits.size(); ++t) all = tape.concat(all, step_logits[t]);
            std::vector<double> seed_grad;
            seed_grad.reserve(targets.size() * static_cast<std::size_t>(V));
            for (std::size_t t = 0; t < targets.size(); ++t) {
                std::vector<double> g = softmax(tape.value(step_logits[t]).data);
                g[static_cast<std::size_t>(targets[t])] -= 1.0;
                seed_grad.insert(seed_grad.end(), g.begin(), g.end());
            }
            tape.backward(all, seed_grad);
            for (std::size_t p = 0; p < head.weights().size(); ++p)
                opt[p].step(head.weights()[p].data, tape.grad(wid[p]));
        }
        result.epoch_losses.push_back(eval_loss());
    }

    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (head.decode_ids(features[i].data) == caption_token_ids(data[i])) ++correct;
    result.final_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return result;
}

// ---------------------------------------------------------------------------

TrainResult train_qa_head(const FeatureNet& net, QaHead& head,
                          const std::vector<SyntheticSample>& data, int epochs,
                          std::uint64_t seed, double lr) {
    require_data(data);
    if (epochs < 0) throw std::invalid_argument("train: negative epoch count");
    Rng rng(seed);

    const int dA = head.feature_dim() * head.num_answers();
    const int A = head.num_answers();
    const int k = head.q_dim();

    std::vector<Tensor> features;
    features.reserve(data.size());
    for (const auto& s : data) features.push_back(net.extract_eval(net_input(net, s.image)));

    Tensor& qe = head.weights()[0];
    Tensor& bl = head.weights()[1];
    Tensor& bias = head.weights()[2];
    AdamState opt_qe(qe.size(), lr), opt_bl(bl.size(), lr), opt_bias(bias.size(), lr);

    auto eval_loss = [&]() {
        double total = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            for (int q = 0; q < head.num_questions(); ++q)
                total += cross_entropy(head.answer_logits(features[i].data, q),
                                       ground_truth_answer(data[i], q));
        return total / static_cast<double>(data.size() * static_cast<std::size_t>(head.num_questions()));
    };

    TrainResult result;
    result.epoch_losses.push_back(eval_loss());

    std::vector<double> g_qe(qe.size()), g_bl(bl.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i : shuffled_indices(data.size(), rng)) {
            for (int q = 0; q < head.num_questions(); ++q) {
                const std::vector<double>& f = features[i].data;
                std::vector<double> g = softmax(head.answer_logits(f, q));
                g[static_cast<std::size_t>(ground_truth_answer(data[i], q))] -= 1.0;

                std::fill(g_qe.begin(), g_qe.end(), 0.0);
                std::fill(g_bl.begin(), g_bl.end(), 0.0);
                const double* qrow = qe.data.data() + static_cast<std::size_t>(q) * k;
                double* gq = g_qe.data() + static_cast<std::size_t>(q) * k;
                for (int j = 0; j < k; ++j) {
                    const double* br = bl.data.data() + static_cast<std::size_t>(j) * dA;
                    double* gbr = g_bl.data() + static_cast<std::size_t>(j) * dA;
                    double acc_q = 0.0;
                    for (int fi = 0; fi < head.feature_dim(); ++fi) {
                        const double fv = f[static_cast<std::size_t>(fi)];
                        const double* ba = br + static_cast<std::size_t>(fi) * A;
                        double* gba = gbr + static_cast<std::size_t>(fi) * A;
                        for (int a = 0; a < A; ++a) {
                            acc_q += fv * ba[a] * g[static_cast<std::size_t>(a)];
                            gba[a] = qrow[j] * fv * g[static_cast<std::size_t>(a)];
                        }
                    }
                    gq[j] = acc_q;
                }
                opt_qe.step(qe.data, g_qe);
                opt_bl.step(bl.data, g_bl);
                opt_bias.step(bias.data, g);
            }
        }
        result.epoch_losses.push_back(eval_loss());
    }

    int correct = 0, total = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        for (int q = 0; q < head.num_questions(); ++q) {
            if (head.answer(features[i].data, q).label == ground_truth_answer(data[i], q)) ++correct;
            ++total;
        }
    result.final_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return result;
}

} // namespace mimic
