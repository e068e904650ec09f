#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mimic/extractor.hpp"
#include "mimic/image.hpp"
#include "mimic/tape.hpp"

namespace mimic {

enum class AttackVariant { maf, oimo };
enum class Parameterization { trunc, tanh };

struct AttackConfig {
    AttackVariant variant = AttackVariant::maf;
    Parameterization param = Parameterization::tanh;
    int max_iter = 1000;
    double lr = 0.025;
    double lambda = 0.9999;                  // arctanh shrink for the start image
    std::optional<double> epsilon_linf;      // byte units, oimo only
    std::uint64_t seed = 0;
};

struct AttackResult {
    ImageU8 adversarial_image;
    std::vector<double> loss_trace; // normalized feature MSE per iteration
    double final_loss = 0.0;
    int iterations_run = 0;
    std::int64_t wall_time_ms = 0;
};

/// Normalized squared feature distance ||a - b||^2 / d, recorded on the tape.
Tape::Id mimic_loss(Tape& tape, Tape::Id feature_adv, Tape::Id feature_target);

/// [0,255] truncation with pass-through gradient inside the clamp region,
/// built from relu and affine nodes.
Tape::Id clamp_byte_range(Tape& tape, Tape::Id x);

/// Feature-mimicry optimization. maf starts from the zero image (start_image
/// must be absent); oimo perturbs the given start_image. The trunc
/// parameterization requires a byte-range extractor, tanh a unit-range one.
AttackResult run_attack(const FeatureNet& net, const ImageU8& target_image,
                        const std::optional<ImageU8>& start_image, const AttackConfig& config);

/// Process-wide run_attack invocation counter; the vqa protocol asserts one
/// attack per image against it.
std::uint64_t attack_invocation_count();

/// Order-preserving parallel map of run_attack over targets.
std::vector<AttackResult> run_attacks(const FeatureNet& net, const std::vector<ImageU8>& targets,
                                      const std::optional<ImageU8>& start_image,
                                      const AttackConfig& config, int workers);

} // namespace mimic
