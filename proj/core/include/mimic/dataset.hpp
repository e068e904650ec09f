#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mimic/image.hpp"

namespace mimic {

/// Rendered colored shape on a noisy background. Attributes drive the class
/// label, the caption tokens, and the QA ground truth.
struct SyntheticSample {
    ImageU8 image;
    int label = 0; // shape * 3 + color, 9 classes
    int color = 0; // red / green / blue
    int shape = 0; // square / circle / triangle
    int size = 0;  // small / large
    std::vector<std::string> description; // {color, shape, size} words
};

inline constexpr int kNumClasses = 9;
inline constexpr int kNumQuestions = 5; // color? shape? size? is-red? is-square?
inline constexpr int kNumAnswers = 10;  // 3 colors, 3 shapes, 2 sizes, yes, no

/// Deterministic dataset; sample i is a pure function of (seed, i).
std::vector<SyntheticSample> synth_dataset(int n, std::uint64_t seed, int image_size = 32);

/// Answer id for a question about a sample (answer vocabulary:
/// 0-2 colors, 3-5 shapes, 6-7 sizes, 8 yes, 9 no).
int ground_truth_answer(const SyntheticSample& sample, int question_id);

/// BOS, EOS, then the attribute words.
std::vector<std::string> caption_vocab();

/// Token ids of the sample's description, without BOS/EOS.
std::vector<int> caption_token_ids(const SyntheticSample& sample);

const std::vector<std::string>& color_names();
const std::vector<std::string>& shape_names();
const std::vector<std::string>& size_names();

} // namespace mimic
