#pragma once

#include <filesystem>
#include <memory>

#include "mimic/extractor.hpp"
#include "mimic/heads.hpp"

namespace mimic {

/// The fixed desk-scale model suite every campaign runs against: one trained
/// 32x32 unit-range CNN shared by the classify/caption/vqa heads, plus the
/// 16x16 invertible extractor (random weights) with its own linear head.
struct ModelZoo {
    std::unique_ptr<PlainCnnExtractor> plain;
    std::unique_ptr<ClassifierHead> classifier;
    std::unique_ptr<SeqDecoderHead> decoder;
    std::unique_ptr<QaHead> qa;
    std::unique_ptr<InvertibleExtractor> invertible;
    std::unique_ptr<ClassifierHead> inv_classifier;
};

/// Architecture and training constants for the standard suite. Values are
/// frozen; campaigns and regression baselines depend on them.
namespace zoo {
inline constexpr int kImageSize = 32;
inline constexpr int kFeatureDim = 64;
inline constexpr int kTrainCount = 360;
inline constexpr std::uint64_t kDataSeed = 500;
inline constexpr int kDecoderHidden = 32;
inline constexpr int kDecoderMaxLen = 8;
inline constexpr int kQaDim = 8;
} // namespace zoo

/// Deterministic end-to-end training of the standard suite (a few seconds).
ModelZoo train_zoo();

/// Checkpoint round trip; load_zoo() rejects files whose shapes do not match
/// the standard architecture.
void save_zoo(const ModelZoo& zoo, const std::filesystem::path& dir);
ModelZoo load_zoo(const std::filesystem::path& dir);

} // namespace mimic
