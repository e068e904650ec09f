#include "mimic/zoo.hpp"

#include <stdexcept>

#include "mimic/checkpoint.hpp"
#include "mimic/dataset.hpp"
#include "mimic/train.hpp"

namespace mimic {

namespace {

ModelZoo make_blank() {
    ModelZoo z;
    z.plain = std::make_unique<PlainCnnExtractor>(InputRange::unit, zoo::kImageSize,
                                                  zoo::kFeatureDim, 101);
    z.classifier = std::make_unique<ClassifierHead>(zoo::kFeatureDim, kNumClasses, 102);
    z.decoder = std::make_unique<SeqDecoderHead>(zoo::kFeatureDim, caption_vocab(),
                                                 zoo::kDecoderHidden, zoo::kDecoderMaxLen, 103);
    z.qa = std::make_unique<QaHead>(zoo::kFeatureDim, kNumQuestions, zoo::kQaDim, kNumAnswers, 104);
    z.invertible = std::make_unique<InvertibleExtractor>(105);
    z.inv_classifier = std::make_unique<ClassifierHead>(z.invertible->feature_dim(), kNumClasses, 106);
    return z;
}

void assign_tensors(std::vector<Tensor>& dst, std::vector<Tensor> src, const char* what) {
    if (dst.size() != src.size())
        throw std::runtime_error(std::string("load: ") + what + " has " +
                                 std::to_string(src.size()) + " tensors, expected " +
                                 std::to_string(dst.size()));
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].shape != src[i].shape)
            throw std::runtime_error(std::string("load: ") + what + " tensor " +
                                     std::to_string(i) + " has shape " + shape_str(src[i].shape) +
                                     ", expected " + shape_str(dst[i].shape));
        dst[i] = std::move(src[i]);
    }
}

std::vector<Tensor> head_tensors(const ClassifierHead& h) { return {h.weight(), h.bias()}; }

void assign_head(ClassifierHead& h, std::vector<Tensor> src, const char* what) {
    std::vector<Tensor> dst = head_tensors(h);
    assign_tensors(dst, std::move(src), what);
    h.weight() = std::move(dst[0]);
    h.bias() = std::move(dst[1]);
}

} // namespace

ModelZoo train_zoo() {
    ModelZoo z = make_blank();
    const auto data = synth_dataset(zoo::kTrainCount, zoo::kDataSeed, zoo::kImageSize);
    train_extractor_with_head(*z.plain, *z.classifier, data, 24, 7, 3e-3);
    train_decoder_head(*z.plain, *z.decoder, data, 20, 8, 5e-3);
    train_qa_head(*z.plain, *z.qa, data, 20, 9, 5e-3);
    const auto data16 = synth_dataset(zoo::kTrainCount, zoo::kDataSeed, 16);
    train_classifier_head(*z.invertible, *z.inv_classifier, data16, 10, 11, 1e-3);
    return z;
}

void save_zoo(const ModelZoo& z, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_tensors(dir / "plain_unit.mimw", z.plain->weights());
    save_tensors(dir / "classifier.mimw", head_tensors(*z.classifier));
    save_tensors(dir / "decoder.mimw", z.decoder->weights());
    save_vocab(z.decoder->vocab(), dir / "vocab.txt");
    save_tensors(dir / "qa.mimw", z.qa->weights());
    save_tensors(dir / "invertible.mimw", z.invertible->weights());
    save_tensors(dir / "inv_classifier.mimw", head_tensors(*z.inv_classifier));
}

ModelZoo load_zoo(const std::filesystem::path& dir) {
    ModelZoo z = make_blank();
    assign_tensors(z.plain->weights(), load_tensors(dir / "plain_unit.mimw"), "plain_unit");
    assign_head(*z.classifier, load_tensors(dir / "classifier.mimw"), "classifier");
    assign_tensors(z.decoder->weights(), load_tensors(dir / "decoder.mimw"), "decoder");
    const auto vocab = load_vocab(dir / "vocab.txt");
    if (vocab != z.decoder->vocab())
        throw std::runtime_error("load: vocab.txt does not match the caption vocabulary");
    assign_tensors(z.qa->weights(), load_tensors(dir / "qa.mimw"), "qa");
    assign_tensors(z.invertible->weights(), load_tensors(dir / "invertible.mimw"), "invertible");
    assign_head(*z.inv_classifier, load_tensors(dir / "inv_classifier.mimw"), "inv_classifier");
    return z;
}

} // namespace mimic
