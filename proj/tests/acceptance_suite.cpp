// End-to-end acceptance suite for the feature-mimicry attack toolkit.
// Each criterion prints one PASS/FAIL line with its measured evidence;
// the process exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "mimic/attack.hpp"
#include "mimic/campaign.hpp"
#include "mimic/metrics.hpp"
#include "mimic/train.hpp"
#include "mimic/zoo.hpp"

using namespace mimic;
using namespace mimic::testing;

namespace {

// Pinned tolerances and limits. Changing any of these is a deliberate,
// reviewable act, not a tuning knob.
constexpr double kGradTol = 1e-5;          // criterion 1
constexpr int kGradInstances = 20;
constexpr double kGradTimeLimit = 30.0;
constexpr double kInvertTol = 1e-6;        // criterion 2
constexpr double kInvertTimeLimit = 10.0;
constexpr double kMafMinRate = 0.70;       // criterion 3
constexpr double kMafMaxMedianMse = 1e-2;
constexpr double kMafTimeLimit = 900.0;
constexpr double kOimoMinRate = 0.40;      // criterion 4
constexpr double kOimoMinPsnr = 20.0;
constexpr double kOimoMaxAbsSsim = 0.1;
constexpr double kOimoTimeLimit = 600.0;
constexpr double kSweepMinGain = 0.10;     // criterion 5
constexpr double kSweepTimeLimit = 900.0;
constexpr double kVqaTimeLimit = 300.0;    // criterion 6
constexpr double kMetricTimeLimit = 5.0;   // criterion 7
constexpr double kPsnrAtUnitMse = 48.1308;
constexpr double kPsnrTol = 1e-3;
constexpr double kBleuTol = 1e-9;

// Frozen campaign settings (seeds and hyperparameters calibrated once).
constexpr std::uint64_t kCampaignSeed = 900;
constexpr int kCampaignImages = 100;
constexpr int kSweepImages = 50;

struct Clock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int g_failures = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d (%s): %s (%s)\n", criterion, name, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// --------------------------------------------------------------- criterion 1

double gradcheck_all_ops() {
    double worst = 0.0;
    auto track = [&](double v) { worst = std::max(worst, v); };

    for (int i = 0; i < kGradInstances; ++i) {
        const auto u = static_cast<std::uint64_t>(i);
        {
            Rng rng(100 + u);
            const int stride = 1 + static_cast<int>(rng.below(2));
            const int pad = static_cast<int>(rng.below(2));
            auto b = [&](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.conv2d(in[0], in[1], in[2], stride, pad));
            };
            track(max_grad_rel_err(b, {random_tensor({5, 5, 2}, rng),
                                       random_tensor({3, 3, 2, 2}, rng),
                                       random_tensor({2}, rng)}));
        }
        {
            Rng rng(300 + u);
            auto b = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.dense(in[0], in[1], in[2], 4));
            };
            track(max_grad_rel_err(b, {random_tensor({6}, rng), random_tensor({6, 4}, rng),
                                       random_tensor({4}, rng)}));
        }
        {
            Rng rng(400 + u);
            auto b = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.relu(in[0]));
            };
            track(max_grad_rel_err(b, {random_tensor_away_from_zero({3, 3, 2}, rng)}));
        }
        {
            Rng rng(500 + u);
            auto b = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.tanh(in[0]));
            };
            track(max_grad_rel_err(b, {random_tensor({3, 3, 2}, rng, -2.0, 2.0)}));
        }
        {
            Rng rng(600 + u);
            auto ba = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.avgpool2d(in[0], 2));
            };
            track(max_grad_rel_err(ba, {random_tensor({4, 4, 2}, rng)}));
            Tensor x({4, 4, 2});
            for (std::size_t j = 0; j < x.size(); ++j)
                x.data[j] = rng.uniform(-1.0, 1.0) + 0.01 * static_cast<double>(j);
            auto bm = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.maxpool2d(in[0], 2));
            };
            track(max_grad_rel_err(bm, {x}));
        }
        {
            Rng rng(800 + u);
            auto badd = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.add(in[0], in[1]));
            };
            auto bmul = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.mul(in[0], in[1]));
            };
            track(max_grad_rel_err(badd, {random_tensor({7}, rng), random_tensor({7}, rng)}));
            // mul inputs bounded away from zero: the finite-difference
            // reference loses relative precision where grad 2ab^2 vanishes.
            track(max_grad_rel_err(bmul, {random_tensor_away_from_zero({7}, rng, 0.1),
                                          random_tensor_away_from_zero({7}, rng, 0.1)}));
        }
        {
            Rng rng(900 + u);
            const double s = rng.uniform(-2.0, 2.0), c = rng.uniform(-1.0, 1.0);
            auto b = [&](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.scale_shift(in[0], s, c));
            };
            track(max_grad_rel_err(b, {random_tensor({3, 2}, rng)}));
        }
        {
            Rng rng(1000 + u);
            auto b = [](Tape& t, const std::vector<Tape::Id>& in) {
                return t.sumsq(t.concat(t.slice(in[0], 2, 5), in[1]));
            };
            track(max_grad_rel_err(b, {random_tensor({10}, rng), random_tensor({4}, rng)}));
        }
        {
            Rng rng(1100 + u);
            auto b = [](Tape& t, const std::vector<Tape::Id>& in) {
                Tape::Id lo = t.slice_channels(in[0], 0, 2);
                Tape::Id hi = t.slice_channels(in[0], 2, 4);
                return t.sumsq(t.space_to_channel(t.concat_channels(hi, lo)));
            };
            track(max_grad_rel_err(b, {random_tensor({4, 4, 4}, rng)}));
        }
        {
            // Full attack loss through an 8x8x3 extractor probe.
            Rng rng(1200 + u);
            PlainCnnExtractor net(InputRange::unit, 8, 8, 17 + u);
            const Tensor target = random_tensor({8}, rng);
            auto b = [&](Tape& t, const std::vector<Tape::Id>& in) {
                Tape::Id feat = net.extract(t, t.tanh(in[0]));
                Tape::Id diff = t.add(feat, t.scale_shift(t.leaf(target), -1.0, 0.0));
                return t.scale_shift(t.sumsq(diff), 1.0 / 8.0, 0.0);
            };
            track(max_grad_rel_err(b, {random_tensor({8, 8, 3}, rng)}));
        }
    }
    return worst;
}

CampaignSpec classify_maf_spec() {
    CampaignSpec spec;
    spec.task = TaskKind::classify;
    spec.image_count = kCampaignImages;
    spec.seed = kCampaignSeed;
    spec.attack.variant = AttackVariant::maf;
    spec.attack.param = Parameterization::tanh;
    spec.attack.max_iter = 1000;
    spec.attack.lr = 0.025;
    return spec;
}

CampaignSpec classify_oimo_spec() {
    CampaignSpec spec;
    spec.task = TaskKind::classify;
    spec.image_count = kCampaignImages;
    spec.seed = kCampaignSeed;
    spec.attack.variant = AttackVariant::oimo;
    spec.attack.param = Parameterization::tanh;
    spec.attack.max_iter = 300;
    spec.attack.lr = 0.0125;
    return spec;
}

CampaignSpec sweep_spec() {
    CampaignSpec spec;
    spec.task = TaskKind::classify;
    spec.image_count = kSweepImages;
    spec.seed = kCampaignSeed;
    spec.attack.variant = AttackVariant::oimo;
    spec.attack.param = Parameterization::trunc;
    spec.attack.max_iter = 300;
    spec.attack.lr = 2.0;
    spec.epsilon_sweep = {2.0, 5.0, 10.0};
    return spec;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

int main() {
    const auto work = std::filesystem::temp_directory_path() / "mimic_acceptance";
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    // ---- criterion 1: gradient correctness -------------------------------
    {
        Clock c;
        const double worst = gradcheck_all_ops();
        const double secs = c.seconds();
        report(1, "gradient correctness", worst < kGradTol && secs < kGradTimeLimit,
               fmt("max rel err %.3g vs %.0e, %.1fs vs %.0fs", worst, kGradTol, secs,
                   kGradTimeLimit));
    }

    // ---- criterion 2: invertibility ---------------------------------------
    {
        Clock c;
        InvertibleExtractor net(105);
        double worst = 0.0;
        for (const auto& s : synth_dataset(50, 1234, 16)) {
            const Tensor x = to_byte_tensor(s.image);
            const Tensor back = net.invert(net.extract_eval(x));
            for (std::size_t i = 0; i < x.size(); ++i)
                worst = std::max(worst, std::fabs(back.data[i] - x.data[i]));
        }
        const double secs = c.seconds();
        report(2, "invertibility", worst < kInvertTol && secs < kInvertTimeLimit,
               fmt("max reconstruction err %.3g vs %.0e over 50 images, %.1fs vs %.0fs", worst,
                   kInvertTol, secs, kInvertTimeLimit));
    }

    // Trained model suite for the campaign criteria.
    std::printf("training the model suite...\n");
    std::fflush(stdout);
    const ModelZoo zoo = train_zoo();
    TaskModels plain_models;
    plain_models.net = zoo.plain.get();
    plain_models.classifier = zoo.classifier.get();
    plain_models.decoder = zoo.decoder.get();
    plain_models.qa = zoo.qa.get();
    TaskModels inv_models;
    inv_models.net = zoo.invertible.get();
    inv_models.classifier = zoo.inv_classifier.get();

    // ---- criterion 3: zero-start attack efficacy --------------------------
    nlohmann::ordered_json c3_json;
    {
        Clock c;
        CampaignSpec spec = classify_maf_spec();
        spec.output_dir = work / "c3a";
        const CampaignReport rep = run_campaign(spec, plain_models);
        const double secs = c.seconds();
        const RunAggregate& r = rep.runs[0];
        c3_json = rep.json;
        report(3, "zero-start attack efficacy",
               r.success_rate >= kMafMinRate && r.feature_mse_median < kMafMaxMedianMse &&
                   secs < kMafTimeLimit,
               fmt("rate %.2f vs >=%.2f, median feature MSE %.3g vs <%.0e, %.0fs vs %.0fs",
                   r.success_rate, kMafMinRate, r.feature_mse_median, kMafMaxMedianMse, secs,
                   kMafTimeLimit));
    }

    // ---- criterion 4: perturbation attack efficacy and visual noise -------
    {
        Clock c;
        CampaignSpec spec = classify_oimo_spec();
        spec.output_dir = work / "c4a";
        const CampaignReport rep = run_campaign(spec, plain_models);
        const double secs = c.seconds();
        const RunAggregate& r = rep.runs[0];
        report(4, "perturbation attack efficacy",
               r.success_rate >= kOimoMinRate && r.psnr_mean >= kOimoMinPsnr &&
                   std::fabs(r.ssim_mean) < kOimoMaxAbsSsim && secs < kOimoTimeLimit,
               fmt("rate %.2f vs >=%.2f, mean PSNR %.1fdB vs >=%.0f, |mean SSIM| %.3f vs <%.1f, "
                   "%.0fs vs %.0fs",
                   r.success_rate, kOimoMinRate, r.psnr_mean, kOimoMinPsnr,
                   std::fabs(r.ssim_mean), kOimoMaxAbsSsim, secs, kOimoTimeLimit));
    }

    // ---- criterion 5: epsilon-sweep monotonicity ---------------------------
    {
        Clock c;
        CampaignSpec spec = sweep_spec();
        spec.output_dir = work / "c5a";
        const CampaignReport rep = run_campaign(spec, inv_models);
        const double secs = c.seconds();
        const double r2 = rep.runs[0].success_rate;
        const double r5 = rep.runs[1].success_rate;
        const double r10 = rep.runs[2].success_rate;
        report(5, "epsilon-sweep monotonicity",
               r2 <= r5 && r5 <= r10 && r10 >= r2 + kSweepMinGain && secs < kSweepTimeLimit,
               fmt("rates %.2f/%.2f/%.2f at eps 2/5/10, gain %.2f vs >=%.2f, %.0fs vs %.0fs", r2,
                   r5, r10, r10 - r2, kSweepMinGain, secs, kSweepTimeLimit));
    }

    // ---- criterion 6: one attack per image under the vqa protocol ----------
    {
        Clock c;
        CampaignSpec spec;
        spec.task = TaskKind::vqa;
        spec.image_count = 50;
        spec.questions_per_image = 5;
        spec.seed = kCampaignSeed;
        spec.attack.max_iter = 300;
        spec.attack.lr = 0.025;
        const std::uint64_t before = attack_invocation_count();
        const CampaignReport rep = run_campaign(spec, plain_models);
        const std::uint64_t after = attack_invocation_count();
        const double secs = c.seconds();
        const RunAggregate& r = rep.runs[0];
        const bool one_per_image = (after - before) == 50;
        const bool accounting = r.filtered_pairs + r.evaluated_pairs == r.total_pairs &&
                                r.total_pairs == 250;
        report(6, "one attack per image, filtered pairs excluded",
               one_per_image && accounting && secs < kVqaTimeLimit,
               fmt("%llu attacks for 50 images, %d filtered + %d evaluated = %d pairs, %.0fs vs "
                   "%.0fs",
                   static_cast<unsigned long long>(after - before), r.filtered_pairs,
                   r.evaluated_pairs, r.total_pairs, secs, kVqaTimeLimit));
    }

    // ---- criterion 7: metric unit oracles ----------------------------------
    {
        Clock c;
        ImageU8 black(8, 8), white(8, 8), off_by_one(8, 8);
        for (auto& p : white.pixels) p = 255;
        for (auto& p : off_by_one.pixels) p = 1;
        const double p0 = psnr(black, white);
        const double p1 = psnr(black, off_by_one); // MSE exactly 1
        Rng rng(3);
        ImageU8 x(16, 16);
        for (auto& p : x.pixels) p = static_cast<std::uint8_t>(rng.below(256));
        const double s_self = ssim(x, x);
        const std::vector<std::string> abc{"a", "b", "c"};
        const double b_id = bleu_n(abc, abc, 4);
        const double b_23 = bleu_n(abc, {"a", "b", "d"}, 1);
        const double secs = c.seconds();
        const bool ok = p0 == 0.0 && std::fabs(p1 - kPsnrAtUnitMse) < kPsnrTol && s_self == 1.0 &&
                        b_id == 1.0 && std::fabs(b_23 - 2.0 / 3.0) < kBleuTol &&
                        secs < kMetricTimeLimit;
        report(7, "metric unit oracles", ok,
               fmt("psnr(0,255)=%g, psnr(mse=1)=%.4f, ssim(x,x)=%g, bleu(id)=%g, bleu-1(2/3)=%.10f,"
                   " %.2fs",
                   p0, p1, s_self, b_id, b_23, secs));
    }

    // ---- criterion 8: campaign determinism ----------------------------------
    {
        CampaignSpec c3 = classify_maf_spec();
        c3.output_dir = work / "c3b";
        run_campaign(c3, plain_models);
        CampaignSpec c4 = classify_oimo_spec();
        c4.output_dir = work / "c4b";
        run_campaign(c4, plain_models);
        CampaignSpec c5 = sweep_spec();
        c5.output_dir = work / "c5b";
        run_campaign(c5, inv_models);

        bool ok = true;
        std::string detail;
        for (const char* pair : {"c3", "c4", "c5"}) {
            const std::string a = slurp(work / (std::string(pair) + "a") / "report.json");
            const std::string b = slurp(work / (std::string(pair) + "b") / "report.json");
            const bool same = !a.empty() && a == b;
            ok = ok && same;
            detail += fmt("%s %s (%zu bytes) ", pair, same ? "identical" : "DIFFER", a.size());
        }
        report(8, "rerun reports byte-identical", ok, detail);
    }

    // ---- criterion 9: failure analysis for the sequence task ----------------
    {
        CampaignSpec spec = classify_maf_spec();
        spec.task = TaskKind::caption;
        spec.output_dir.clear();
        const CampaignReport rep = run_campaign(spec, plain_models);
        const RunAggregate& r = rep.runs[0];
        bool in_range = true;
        for (const auto& bleu : r.failure_bleu)
            for (double b : bleu)
                if (!(b >= 0.0 && b <= 1.0)) in_range = false;
        report(9, "failure BLEU computed and bounded", in_range,
               fmt("%zu caption failures scored, all BLEU-1..4 in [0,1]: %s (rate %.2f)",
                   r.failure_bleu.size(), in_range ? "yes" : "no", r.success_rate));
    }

    std::printf("%d of 9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
