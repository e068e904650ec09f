#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mimic/tensor.hpp"

namespace mimic {

/// Downstream model output; comparable for exact equality.
struct TaskOutput {
    enum class Kind { label, sequence, answer };
    Kind kind = Kind::label;
    int label = -1;                 // label or answer id
    std::vector<int> tokens;        // sequence payload, no BOS/EOS
    std::vector<double> logits;     // classifier only, for margin analysis
};

/// Exact-match success predicate. Rejects mismatched variants.
bool outputs_match(const TaskOutput& a, const TaskOutput& b);

/// Linear classifier over features; argmax ties break to the lowest index.
class ClassifierHead {
public:
    ClassifierHead(int feature_dim, int num_classes, std::uint64_t seed);

    TaskOutput classify(std::span<const double> feature) const;
    int feature_dim() const { return d_; }
    int num_classes() const { return classes_; }

    Tensor& weight() { return w_; }
    Tensor& bias() { return b_; }
    const Tensor& weight() const { return w_; }
    const Tensor& bias() const { return b_; }

private:
    int d_;
    int classes_;
    Tensor w_; // {d, C}
    Tensor b_; // {C}
};

/// Greedy sequence decoder: features seed the hidden state of a single gated
/// recurrent cell; emission stops at EOS or max_len.
class SeqDecoderHead {
public:
    static constexpr int kBos = 0;
    static constexpr int kEos = 1;

    SeqDecoderHead(int feature_dim, std::vector<std::string> vocab, int hidden, int max_len,
                   std::uint64_t seed);

    TaskOutput decode(std::span<const double> feature) const;
    std::vector<int> decode_ids(std::span<const double> feature) const;

    const std::vector<std::string>& vocab() const { return vocab_; }
    int vocab_size() const { return static_cast<int>(vocab_.size()); }
    int hidden_dim() const { return hidden_; }
    int feature_dim() const { return d_; }
    int max_len() const { return max_len_; }

    std::vector<Tensor>& weights() { return weights_; }
    const std::vector<Tensor>& weights() const { return weights_; }

    std::vector<std::string> to_tokens(const std::vector<int>& ids) const;

private:
    friend struct DecoderCell;
    int d_;
    int hidden_;
    int max_len_;
    std::vector<std::string> vocab_;
    // embed {V,E}, w_init {d,H}, b_init {H},
    // wz {E,H}, uz {H,H}, bz {H}, wh {E,H}, uh {H,H}, bh {H},
    // proj {H,V}, b_proj {V}
    std::vector<Tensor> weights_;
};

/// Question-conditioned answerer: bilinear interaction between the feature
/// and a learned question embedding.
class QaHead {
public:
    QaHead(int feature_dim, int num_questions, int q_dim, int num_answers, std::uint64_t seed);

    TaskOutput answer(std::span<const double> feature, int question_id) const;
    std::vector<double> answer_logits(std::span<const double> feature, int question_id) const;

    int feature_dim() const { return d_; }
    int num_questions() const { return questions_; }
    int num_answers() const { return answers_; }
    int q_dim() const { return qdim_; }

    std::vector<Tensor>& weights() { return weights_; }
    const std::vector<Tensor>& weights() const { return weights_; }

private:
    int d_;
    int questions_;
    int qdim_;
    int answers_;
    // qembed {Q,k}, bilinear {k, d*A} (laid out [j][i*A+a]), bias {A}
    std::vector<Tensor> weights_;
};

/// Token-per-line UTF-8 vocabulary files.
void save_vocab(const std::vector<std::string>& vocab, const std::filesystem::path& path);
std::vector<std::string> load_vocab(const std::filesystem::path& path);

int argmax_lowest(std::span<const double> v);

} // namespace mimic
