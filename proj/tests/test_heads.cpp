#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mimic/dataset.hpp"
#include "mimic/heads.hpp"
#include "mimic/rng.hpp"

using namespace mimic;

TEST_CASE("classifier tie-break and identity cases") {
    ClassifierHead zero(4, 3, 0);
    for (double& v : zero.weight().data) v = 0.0;
    for (double& v : zero.bias().data) v = 0.0;
    CHECK(zero.classify(std::vector<double>{1.0, 2.0, 3.0, 4.0}).label == 0);

    ClassifierHead ident(5, 5, 0);
    for (double& v : ident.weight().data) v = 0.0;
    for (double& v : ident.bias().data) v = 0.0;
    for (int i = 0; i < 5; ++i) ident.weight().data[static_cast<std::size_t>(i * 5 + i)] = 1.0;
    std::vector<double> onehot(5, 0.0);
    onehot[3] = 1.0;
    CHECK(ident.classify(onehot).label == 3);
}

TEST_CASE("classifier equals the nested-loop matvec oracle") {
    ClassifierHead head(6, 4, 99);
    Rng rng(10);
    std::vector<double> f(6);
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    const TaskOutput out = head.classify(f);

    std::vector<double> logits(4);
    for (int c = 0; c < 4; ++c) {
        double acc = head.bias().data[static_cast<std::size_t>(c)];
        for (int i = 0; i < 6; ++i)
            acc += head.weight().data[static_cast<std::size_t>(i * 4 + c)] * f[static_cast<std::size_t>(i)];
        logits[static_cast<std::size_t>(c)] = acc;
    }
    REQUIRE(out.logits.size() == 4);
    int best = 0;
    for (int c = 1; c < 4; ++c)
        if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
    CHECK(out.label == best);
    for (int c = 0; c < 4; ++c)
        CHECK(out.logits[static_cast<std::size_t>(c)] ==
              doctest::Approx(logits[static_cast<std::size_t>(c)]).epsilon(1e-12));

    CHECK_THROWS(head.classify(std::vector<double>{1.0}));
}

TEST_CASE("feature perturbations inside the margin radius keep the label") {
    // Identity 2x2 head: logit margin 1 at (1,0); row-difference norm sqrt(2)
    // bounds the logit-gap change, so any ||delta|| < 1/sqrt(2) is safe.
    ClassifierHead head(2, 2, 0);
    head.weight().data = {1.0, 0.0, 0.0, 1.0};
    head.bias().data = {0.0, 0.0};
    REQUIRE(head.classify(std::vector<double>{1.0, 0.0}).label == 0);
    Rng rng(20);
    for (int i = 0; i < 20; ++i) {
        double dx = rng.uniform(-1.0, 1.0), dy = rng.uniform(-1.0, 1.0);
        const double n = std::sqrt(dx * dx + dy * dy);
        dx *= 0.7 / n;
        dy *= 0.7 / n;
        CHECK(head.classify(std::vector<double>{1.0 + dx, 0.0 + dy}).label == 0);
    }
}

TEST_CASE("decoder stops at EOS or max_len and is deterministic") {
    SeqDecoderHead head(4, caption_vocab(), 3, 5, 31);
    Rng rng(11);
    std::vector<double> f(4);
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    const TaskOutput a = head.decode(f);
    const TaskOutput b = head.decode(f);
    CHECK(a.kind == TaskOutput::Kind::sequence);
    CHECK(static_cast<int>(a.tokens.size()) <= 5);
    CHECK(a.tokens == b.tokens);
    CHECK_THROWS(head.decode(std::vector<double>{1.0}));
}

TEST_CASE("a projection that always maxes EOS yields the empty sequence") {
    SeqDecoderHead head(4, caption_vocab(), 3, 5, 31);
    for (Tensor& w : head.weights())
        for (double& v : w.data) v = 0.0;
    Tensor& b_proj = head.weights().back(); // {V} output bias
    REQUIRE(b_proj.shape == std::vector<int>{head.vocab_size()});
    b_proj.data[SeqDecoderHead::kEos] = 5.0;
    CHECK(head.decode(std::vector<double>(4, 0.5)).tokens.empty());
}

TEST_CASE("qa zero interaction weights answer 0 everywhere") {
    QaHead head(3, 4, 2, 5, 7);
    for (Tensor& w : head.weights())
        for (double& v : w.data) v = 0.0;
    for (int q = 0; q < 4; ++q)
        CHECK(head.answer(std::vector<double>{0.3, -0.2, 0.9}, q).label == 0);
    CHECK_THROWS(head.answer(std::vector<double>{0.3, -0.2, 0.9}, 4));
    CHECK_THROWS(head.answer(std::vector<double>{0.3}, 0));
}

TEST_CASE("a constructed head answers different questions differently") {
    QaHead head(2, 2, 2, 2, 0);
    auto& w = head.weights();
    for (Tensor& t : w)
        for (double& v : t.data) v = 0.0;
    // One-hot question embeddings; question 0 rewards answer 1, question 1 answer 0.
    w[0].data = {1.0, 0.0, 0.0, 1.0};          // qembed {2,2}
    w[1].data[0 * 4 + 0 * 2 + 1] = 1.0;        // bilinear[j=0][i=0 -> a=1]
    w[1].data[1 * 4 + 0 * 2 + 0] = 1.0;        // bilinear[j=1][i=0 -> a=0]
    const std::vector<double> f{1.0, 0.0};
    CHECK(head.answer(f, 0).label == 1);
    CHECK(head.answer(f, 1).label == 0);
}

TEST_CASE("qa equals the triple-loop bilinear oracle") {
    QaHead head(5, 3, 4, 6, 55);
    Rng rng(12);
    std::vector<double> f(5);
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    const auto& w = head.weights();
    for (int q = 0; q < 3; ++q) {
        const std::vector<double> got = head.answer_logits(f, q);
        for (int a = 0; a < 6; ++a) {
            double acc = w[2].data[static_cast<std::size_t>(a)];
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 5; ++i)
                    acc += w[0].data[static_cast<std::size_t>(q * 4 + j)] *
                           w[1].data[static_cast<std::size_t>(j * (5 * 6) + i * 6 + a)] *
                           f[static_cast<std::size_t>(i)];
            CHECK(got[static_cast<std::size_t>(a)] == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("outputs_match is exact equality per variant") {
    TaskOutput s1{TaskOutput::Kind::sequence, -1, {2, 3, 4}, {}};
    TaskOutput s2{TaskOutput::Kind::sequence, -1, {2, 3, 4}, {}};
    TaskOutput s3{TaskOutput::Kind::sequence, -1, {2, 3}, {}};
    CHECK(outputs_match(s1, s2));
    CHECK_FALSE(outputs_match(s1, s3)); // prefix is not a match

    TaskOutput l1{TaskOutput::Kind::label, 4, {}, {}};
    TaskOutput l2{TaskOutput::Kind::label, 4, {}, {}};
    CHECK(outputs_match(l1, l2));
    CHECK_THROWS(outputs_match(l1, s1)); // variant mismatch
}

TEST_CASE("vocabulary files round trip") {
    const std::vector<std::string> vocab = caption_vocab();
    const auto path = std::filesystem::temp_directory_path() / "mimic_test_vocab.txt";
    save_vocab(vocab, path);
    CHECK(load_vocab(path) == vocab);
    std::filesystem::remove(path);
}
