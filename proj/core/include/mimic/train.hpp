#pragma once

#include <cstdint>
#include <vector>

#include "mimic/dataset.hpp"
#include "mimic/extractor.hpp"
#include "mimic/heads.hpp"

namespace mimic {

struct TrainResult {
    double final_accuracy = 0.0;
    /// epoch_losses[0] is the pre-training loss; entry e is the mean
    /// cross-entropy over the dataset after epoch e.
    std::vector<double> epoch_losses;
};

/// Joint cross-entropy training of the extractor and classifier; the attack
/// later sees exactly the weights the head consumes.
TrainResult train_extractor_with_head(FeatureNet& net, ClassifierHead& head,
                                      const std::vector<SyntheticSample>& data, int epochs,
                                      std::uint64_t seed, double lr = 1e-3);

/// Trains only the classifier head on frozen features; the extractor is
/// left untouched (used for the invertible net, which stays random).
TrainResult train_classifier_head(const FeatureNet& net, ClassifierHead& head,
                                  const std::vector<SyntheticSample>& data, int epochs,
                                  std::uint64_t seed, double lr = 1e-3);

/// Teacher-forced training of the sequence decoder on frozen features.
TrainResult train_decoder_head(const FeatureNet& net, SeqDecoderHead& head,
                               const std::vector<SyntheticSample>& data, int epochs,
                               std::uint64_t seed, double lr = 5e-3);

/// Trains the bilinear answerer on frozen features over all questions.
TrainResult train_qa_head(const FeatureNet& net, QaHead& head,
                          const std::vector<SyntheticSample>& data, int epochs,
                          std::uint64_t seed, double lr = 5e-3);

/// Extractor input for a byte image, honoring the declared range.
Tensor net_input(const FeatureNet& net, const ImageU8& img);

std::vector<double> softmax(std::span<const double> logits);

} // namespace mimic
