#include "mimic/heads.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mimic/init.hpp"
#include "mimic/rng.hpp"

namespace mimic {

namespace {

void matvec_add(std::span<const double> x, const Tensor& w, std::span<double> out) {
    // w laid out {in, out}
    const std::size_t m = out.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i];
        const double* wr = w.data.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) out[j] += a * wr[j];
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

bool outputs_match(const TaskOutput& a, const TaskOutput& b) {
    if (a.kind != b.kind)
        throw std::invalid_argument("outputs_match: variant mismatch");
    switch (a.kind) {
    case TaskOutput::Kind::label:
    case TaskOutput::Kind::answer:
        return a.label == b.label;
    case TaskOutput::Kind::sequence:
        return a.tokens == b.tokens;
    }
    return false;
}

// ---------------------------------------------------------------------------

ClassifierHead::ClassifierHead(int feature_dim, int num_classes, std::uint64_t seed)
    : d_(feature_dim), classes_(num_classes), w_({feature_dim, num_classes}), b_({num_classes}) {
    Rng rng(seed);
    init_uniform_fanin(w_, feature_dim, rng);
}

TaskOutput ClassifierHead::classify(std::span<const double> feature) const {
    if (static_cast<int>(feature.size()) != d_)
        throw std::invalid_argument("classify: feature length " + std::to_string(feature.size()) +
                                    " != " + std::to_string(d_));
    TaskOutput out;
    out.kind = TaskOutput::Kind::label;
    out.logits = b_.data;
    matvec_add(feature, w_, out.logits);
    out.label = argmax_lowest(out.logits);
    return out;
}

// ---------------------------------------------------------------------------

SeqDecoderHead::SeqDecoderHead(int feature_dim, std::vector<std::string> vocab, int hidden,
                               int max_len, std::uint64_t seed)
    : d_(feature_dim), hidden_(hidden), max_len_(max_len), vocab_(std::move(vocab)) {
    if (vocab_.size() < 3) throw std::invalid_argument("decoder: vocabulary too small");
    if (max_len_ <= 0) throw std::invalid_argument("decoder: max_len must be positive");
    const int V = static_cast<int>(vocab_.size());
    const int H = hidden_;
    Rng rng(seed);
    auto mk = [&](std::vector<int> shape, int fan_in) {
        Tensor t(std::move(shape));
        init_uniform_fanin(t, fan_in, rng);
        return t;
    };
    weights_.push_back(mk({V, H}, H));        // embed
    weights_.push_back(mk({d_, H}, d_));      // w_init
    weights_.push_back(Tensor({H}));          // b_init
    weights_.push_back(mk({H, H}, H));        // wz
    weights_.push_back(mk({H, H}, H));        // uz
    weights_.push_back(Tensor({H}));          // bz
    weights_.push_back(mk({H, H}, H));        // wh
    weights_.push_back(mk({H, H}, H));        // uh
    weights_.push_back(Tensor({H}));          // bh
    weights_.push_back(mk({H, V}, H));        // proj
    weights_.push_back(Tensor({V}));          // b_proj
}

std::vector<int> SeqDecoderHead::decode_ids(std::span<const double> feature) const {
    if (static_cast<int>(feature.size()) != d_)
        throw std::invalid_argument("decode: feature length " + std::to_string(feature.size()) +
                                    " != " + std::to_string(d_));
    const int H = hidden_;
    const Tensor& embed = weights_[0];
    const Tensor& w_init = weights_[1];
    const Tensor& b_init = weights_[2];
    const Tensor& wz = weights_[3];
    const Tensor& uz = weights_[4];
    const Tensor& bz = weights_[5];
    const Tensor& wh = weights_[6];
    const Tensor& uh = weights_[7];
    const Tensor& bh = weights_[8];
    const Tensor& proj = weights_[9];
    const Tensor& b_proj = weights_[10];

    std::vector<double> h(b_init.data);
    matvec_add(feature, w_init, h);
    for (double& v : h) v = std::tanh(v);

    std::vector<int> tokens;
    int prev = kBos;
    for (int step = 0; step < max_len_; ++step) {
        std::span<const double> x(embed.data.data() + static_cast<std::size_t>(prev) * H,
                                  static_cast<std::size_t>(H));
        std::vector<double> z(bz.data);
        matvec_add(x, wz, z);
        matvec_add(h, uz, z);
        for (double& v : z) v = sigmoid(v);
        std::vector<double> ht(bh.data);
        matvec_add(x, wh, ht);
        matvec_add(h, uh, ht);
        for (double& v : ht) v = std::tanh(v);
        for (int j = 0; j < H; ++j)
            h[static_cast<std::size_t>(j)] =
                (1.0 - z[static_cast<std::size_t>(j)]) * h[static_cast<std::size_t>(j)] +
                z[static_cast<std::size_t>(j)] * ht[static_cast<std::size_t>(j)];
        std::vector<double> logits(b_proj.data);
        matvec_add(h, proj, logits);
        const int next = argmax_lowest(logits);
        if (next == kEos) break;
        tokens.push_back(next);
        prev = next;
    }
    return tokens;
}

TaskOutput SeqDecoderHead::decode(std::span<const double> feature) const {
    TaskOutput out;
    out.kind = TaskOutput::Kind::sequence;
    out.tokens = decode_ids(feature);
    return out;
}

std::vector<std::string> SeqDecoderHead::to_tokens(const std::vector<int>& ids) const {
    std::vector<std::string> words;
    words.reserve(ids.size());
    for (int id : ids) words.push_back(vocab_.at(static_cast<std::size_t>(id)));
    return words;
}

// ---------------------------------------------------------------------------

QaHead::QaHead(int feature_dim, int num_questions, int q_dim, int num_answers, std::uint64_t seed)
    : d_(feature_dim), questions_(num_questions), qdim_(q_dim), answers_(num_answers) {
    Rng rng(seed);
    auto mk = [&](std::vector<int> shape, int fan_in) {
        Tensor t(std::move(shape));
        init_uniform_fanin(t, fan_in, rng);
        return t;
    };
    weights_.push_back(mk({num_questions, q_dim}, q_dim));
    weights_.push_back(mk({q_dim, d_ * num_answers}, q_dim * d_));
    weights_.push_back(Tensor({num_answers}));
}

std::vector<double> QaHead::answer_logits(std::span<const double> feature, int question_id) const {
    if (static_cast<int>(feature.size()) != d_)
        throw std::invalid_argument("answer: feature length mismatch");
    if (question_id < 0 || question_id >= questions_)
        throw std::invalid_argument("answer: unknown question id " + std::to_string(question_id));
    const Tensor& qe = weights_[0];
    const Tensor& bl = weights_[1];
    const Tensor& bias = weights_[2];
    const std::size_t dA = static_cast<std::size_t>(d_) * static_cast<std::size_t>(answers_);
    std::vector<double> m(dA, 0.0);
    std::span<const double> q(qe.data.data() + static_cast<std::size_t>(question_id) * qdim_,
                              static_cast<std::size_t>(qdim_));
    for (int j = 0; j < qdim_; ++j) {
        const double a = q[static_cast<std::size_t>(j)];
        const double* br = bl.data.data() + static_cast<std::size_t>(j) * dA;
        for (std::size_t i = 0; i < dA; ++i) m[i] += a * br[i];
    }
    std::vector<double> logits(bias.data);
    for (int i = 0; i < d_; ++i) {
        const double a = feature[static_cast<std::size_t>(i)];
        const double* mr = m.data() + static_cast<std::size_t>(i) * answers_;
        for (int k = 0; k < answers_; ++k) logits[static_cast<std::size_t>(k)] += a * mr[k];
    }
    return logits;
}

TaskOutput QaHead::answer(std::span<const double> feature, int question_id) const {
    TaskOutput out;
    out.kind = TaskOutput::Kind::answer;
    out.label = argmax_lowest(answer_logits(feature, question_id));
    return out;
}

// ---------------------------------------------------------------------------

void save_vocab(const std::vector<std::string>& vocab, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("vocab: cannot write " + path.string());
    for (const auto& t : vocab) f << t << '\n';
}

std::vector<std::string> load_vocab(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("vocab: cannot open " + path.string());
    std::vector<std::string> vocab;
    std::string line;
    while (std::getline(f, line)) vocab.push_back(line);
    return vocab;
}

} // namespace mimic
