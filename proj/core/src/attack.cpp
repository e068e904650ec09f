#include "mimic/attack.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mimic/adam.hpp"

namespace mimic {

Tape::Id mimic_loss(Tape& tape, Tape::Id feature_adv, Tape::Id feature_target) {
    const std::size_t d = tape.value(feature_adv).size();
    if (d != tape.value(feature_target).size())
        throw std::invalid_argument("mimic_loss: feature length mismatch " + std::to_string(d) +
                                    " vs " + std::to_string(tape.value(feature_target).size()));
    Tape::Id diff = tape.add(feature_adv, tape.scale_shift(feature_target, -1.0, 0.0));
    return tape.scale_shift(tape.sumsq(diff), 1.0 / static_cast<double>(d), 0.0);
}

Tape::Id clamp_byte_range(Tape& tape, Tape::Id x) {
    Tape::Id lo = tape.relu(x);
    Tape::Id flipped = tape.scale_shift(lo, -1.0, 255.0);
    return tape.scale_shift(tape.relu(flipped), -1.0, 255.0);
}

namespace {

void validate(const FeatureNet& net, const ImageU8& target, const std::optional<ImageU8>& start,
              const AttackConfig& cfg) {
    if (cfg.max_iter < 0) throw std::invalid_argument("attack: negative max_iter");
    if (cfg.lr <= 0.0) throw std::invalid_argument("attack: learning rate must be positive");
    if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0))
        throw std::invalid_argument("attack: lambda must lie strictly in (0,1)");
    if (cfg.variant == AttackVariant::maf && start)
        throw std::invalid_argument("attack: maf starts from the zero image, start_image must be absent");
    if (cfg.variant == AttackVariant::oimo && !start)
        throw std::invalid_argument("attack: oimo requires a start_image");
    if (cfg.epsilon_linf) {
        if (cfg.variant != AttackVariant::oimo)
            throw std::invalid_argument("attack: epsilon_linf is only meaningful for oimo");
        if (*cfg.epsilon_linf < 0.0) throw std::invalid_argument("attack: negative epsilon_linf");
    }
    if (cfg.param == Parameterization::trunc && net.input_range() != InputRange::byte)
        throw std::invalid_argument("attack: trunc parameterization requires a byte-range extractor");
    if (cfg.param == Parameterization::tanh && net.input_range() != InputRange::unit)
        throw std::invalid_argument("attack: tanh parameterization requires a unit-range extractor");

    const auto shape = net.input_shape();
    auto check_img = [&](const ImageU8& img, const char* name) {
        if (img.height != shape[0] || img.width != shape[1])
            throw std::invalid_argument(std::string("attack: ") + name + " is " +
                                        std::to_string(img.height) + "x" + std::to_string(img.width) +
                                        ", extractor expects " + std::to_string(shape[0]) + "x" +
                                        std::to_string(shape[1]));
    };
    check_img(target, "target_image");
    if (start) check_img(*start, "start_image");
}

std::atomic<std::uint64_t> g_invocations{0};

} // namespace

std::uint64_t attack_invocation_count() { return g_invocations.load(); }

AttackResult run_attack(const FeatureNet& net, const ImageU8& target_image,
                        const std::optional<ImageU8>& start_image, const AttackConfig& cfg) {
    validate(net, target_image, start_image, cfg);
    g_invocations.fetch_add(1);
    const auto t0 = std::chrono::steady_clock::now();

    const bool tanh_mode = cfg.param == Parameterization::tanh;
    const bool oimo = cfg.variant == AttackVariant::oimo;
    const auto shape = net.input_shape();
    const std::vector<int> img_shape{shape[0], shape[1], shape[2]};

    const Tensor target_input =
        tanh_mode ? scale_to_unit(target_image) : to_byte_tensor(target_image);
    const Tensor feature_target = net.extract_eval(target_input);
    const double d = static_cast<double>(feature_target.size());

    // base: oimo offset the variable is added to; maf optimizes the variable alone.
    Tensor base(img_shape);
    std::vector<double> start_bytes;
    if (oimo) {
        start_bytes = to_byte_tensor(*start_image).data;
        if (tanh_mode) {
            const Tensor unit = scale_to_unit(*start_image);
            for (std::size_t i = 0; i < base.size(); ++i)
                base.data[i] = atanh_safe(cfg.lambda * unit.data[i]);
        } else {
            base.data = start_bytes;
        }
    }

    Tensor var(img_shape); // zero init: the zero image for maf, zero delta for oimo
    AdamState adam(var.size(), cfg.lr);

    // Builds the working image node from the current variable.
    auto forward_image = [&](Tape& tape, Tape::Id v) {
        if (oimo) {
            Tape::Id b = tape.leaf(base);
            Tape::Id sum = tape.add(b, v);
            return tanh_mode ? tape.tanh(sum) : clamp_byte_range(tape, sum);
        }
        return tanh_mode ? tape.tanh(v) : clamp_byte_range(tape, v);
    };

    auto project = [&]() {
        if (!cfg.epsilon_linf) return;
        const double eps = *cfg.epsilon_linf;
        if (tanh_mode) {
            std::vector<double> bytes(var.size());
            for (std::size_t i = 0; i < var.size(); ++i)
                bytes[i] = 255.0 * (std::tanh(base.data[i] + var.data[i]) + 1.0) / 2.0;
            const std::vector<double> clipped = clip_linf(bytes, start_bytes, eps);
            for (std::size_t i = 0; i < var.size(); ++i)
                var.data[i] = atanh_safe(cfg.lambda * (2.0 * clipped[i] / 255.0 - 1.0)) - base.data[i];
        } else {
            std::vector<double> img(var.size());
            for (std::size_t i = 0; i < var.size(); ++i) img[i] = base.data[i] + var.data[i];
            const std::vector<double> clipped = clip_linf(img, start_bytes, eps);
            for (std::size_t i = 0; i < var.size(); ++i) var.data[i] = clipped[i] - base.data[i];
        }
    };

    AttackResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.max_iter));
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        Tape tape;
        Tape::Id v = tape.leaf(var, true);
        Tape::Id img = forward_image(tape, v);
        Tape::Id feat = net.extract(tape, img);
        Tape::Id loss = mimic_loss(tape, feat, tape.leaf(feature_target));
        const double loss_val = tape.value(loss).data[0];
        if (!std::isfinite(loss_val))
            throw std::runtime_error("attack: loss became non-finite at iteration " +
                                     std::to_string(iter));
        result.loss_trace.push_back(loss_val);
        const double seed_one = 1.0;
        tape.backward(loss, std::span<const double>(&seed_one, 1));
        adam.step(var.data, tape.grad(v));
        project();
    }
    result.iterations_run = cfg.max_iter;

    // Final image and its loss, evaluated at the final parameters.
    Tensor final_input(img_shape);
    if (tanh_mode) {
        for (std::size_t i = 0; i < var.size(); ++i)
            final_input.data[i] = std::tanh((oimo ? base.data[i] : 0.0) + var.data[i]);
        result.adversarial_image = unscale_from_tanh(final_input);
    } else {
        for (std::size_t i = 0; i < var.size(); ++i) {
            const double v = (oimo ? base.data[i] : 0.0) + var.data[i];
            final_input.data[i] = std::min(255.0, std::max(0.0, v));
        }
        result.adversarial_image = quantize_bytes(final_input);
    }
    const Tensor final_feature = net.extract_eval(final_input);
    double acc = 0.0;
    for (std::size_t i = 0; i < final_feature.size(); ++i) {
        const double diff = final_feature.data[i] - feature_target.data[i];
        acc += diff * diff;
    }
    result.final_loss = acc / d;

    result.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
    return result;
}

std::vector<AttackResult> run_attacks(const FeatureNet& net, const std::vector<ImageU8>& targets,
                                      const std::optional<ImageU8>& start_image,
                                      const AttackConfig& config, int workers) {
    if (workers <= 0) throw std::invalid_argument("run_attacks: workers must be positive");
    std::vector<AttackResult> results(targets.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= targets.size()) return;
            try {
                results[i] = run_attack(net, targets[i], start_image, config);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    const int n = std::min<int>(workers, static_cast<int>(targets.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    if (n > 0) worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

} // namespace mimic
