#include "mimic/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "mimic/metrics.hpp"
#include "mimic/train.hpp"

namespace mimic {

namespace {

using nlohmann::ordered_json;

ordered_json finite_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RecordOutcome {
    ordered_json json;
    bool errored = false;
    int pair_total = 0;
    int pair_filtered = 0;
    int pair_success = 0;
    bool has_metrics = false;
    double psnr_v = 0.0, ssim_v = 0.0, fmse_v = 0.0;
    std::optional<std::array<double, 4>> failure_bleu;
    std::int64_t attack_ms = 0;
    ImageU8 adv_image;
};

void check_models(const CampaignSpec& spec, const TaskModels& models) {
    if (!models.net) throw std::invalid_argument("campaign: missing feature extractor");
    switch (spec.task) {
    case TaskKind::classify:
        if (!models.classifier) throw std::invalid_argument("campaign: missing classifier head");
        break;
    case TaskKind::caption:
        if (!models.decoder) throw std::invalid_argument("campaign: missing decoder head");
        break;
    case TaskKind::vqa:
        if (!models.qa) throw std::invalid_argument("campaign: missing qa head");
        break;
    }
    if (spec.image_count < 1) throw std::invalid_argument("campaign: image count must be >= 1");
    if (spec.questions_per_image < 1)
        throw std::invalid_argument("campaign: questions_per_image must be >= 1");
}

} // namespace

std::string task_name(TaskKind t) {
    switch (t) {
    case TaskKind::classify: return "classify";
    case TaskKind::caption: return "caption";
    case TaskKind::vqa: return "vqa";
    }
    return "?";
}

TaskKind parse_task(const std::string& name) {
    if (name == "classify") return TaskKind::classify;
    if (name == "caption") return TaskKind::caption;
    if (name == "vqa") return TaskKind::vqa;
    throw std::invalid_argument("unknown task '" + name + "'");
}

CampaignReport run_campaign(const CampaignSpec& spec, const TaskModels& models) {
    check_models(spec, models);
    const FeatureNet& net = *models.net;
    const int side = net.input_shape()[0];
    const bool oimo = spec.attack.variant == AttackVariant::oimo;

    const std::vector<SyntheticSample> targets = synth_dataset(spec.image_count, spec.seed, side);
    const ImageU8 start_image =
        oimo ? synth_dataset(1, spec.seed ^ 0xa5a5a5a5ull, side)[0].image : ImageU8(side, side);
    // PSNR and the vqa bias filter reference the attack's starting point:
    // the fixed start image for oimo, the zero image for maf.
    const Tensor start_feature = net.extract_eval(net_input(net, start_image));

    std::vector<AttackConfig> run_configs;
    if (spec.epsilon_sweep.empty()) {
        run_configs.push_back(spec.attack);
    } else {
        for (double eps : spec.epsilon_sweep) {
            AttackConfig c = spec.attack;
            c.epsilon_linf = eps;
            run_configs.push_back(c);
        }
    }

    auto evaluate_record = [&](int index, const AttackConfig& cfg) {
        RecordOutcome out;
        const SyntheticSample& sample = targets[static_cast<std::size_t>(index)];
        out.json["index"] = index;
        try {
            AttackResult attack = run_attack(net, sample.image,
                                             oimo ? std::optional<ImageU8>(start_image) : std::nullopt,
                                             cfg);
            out.attack_ms = attack.wall_time_ms;
            out.adv_image = attack.adversarial_image;

            const Tensor f_org = net.extract_eval(net_input(net, sample.image));
            const Tensor f_adv = net.extract_eval(net_input(net, attack.adversarial_image));

            out.psnr_v = psnr(attack.adversarial_image, start_image);
            out.ssim_v = ssim(attack.adversarial_image, sample.image);
            out.fmse_v = feature_mse(f_adv.data, f_org.data);
            out.has_metrics = true;

            switch (spec.task) {
            case TaskKind::classify: {
                const TaskOutput orig = models.classifier->classify(f_org.data);
                const TaskOutput adv = models.classifier->classify(f_adv.data);
                const bool ok = outputs_match(orig, adv);
                out.pair_total = 1;
                out.pair_success = ok ? 1 : 0;
                out.json["original"] = {{"label", orig.label}};
                out.json["adversarial"] = {{"label", adv.label}};
                out.json["success"] = ok;
                break;
            }
            case TaskKind::caption: {
                const TaskOutput orig = models.decoder->decode(f_org.data);
                const TaskOutput adv = models.decoder->decode(f_adv.data);
                const bool ok = outputs_match(orig, adv); // empty-vs-empty counts as a match
                out.pair_total = 1;
                out.pair_success = ok ? 1 : 0;
                out.json["original"] = {{"tokens", models.decoder->to_tokens(orig.tokens)}};
                out.json["adversarial"] = {{"tokens", models.decoder->to_tokens(adv.tokens)}};
                out.json["success"] = ok;
                if (!ok) {
                    std::array<double, 4> b{};
                    for (int n = 1; n <= 4; ++n)
                        b[static_cast<std::size_t>(n - 1)] =
                            bleu_n(models.decoder->to_tokens(adv.tokens),
                                   models.decoder->to_tokens(orig.tokens), n);
                    out.failure_bleu = b;
                    out.json["bleu"] = b;
                }
                break;
            }
            case TaskKind::vqa: {
                ordered_json pairs = ordered_json::array();
                for (int j = 0; j < spec.questions_per_image; ++j) {
                    const int q = j % kNumQuestions;
                    const TaskOutput orig = models.qa->answer(f_org.data, q);
                    const TaskOutput start = models.qa->answer(start_feature.data, q);
                    ordered_json pj;
                    pj["question"] = q;
                    pj["original"] = orig.label;
                    ++out.pair_total;
                    if (outputs_match(start, orig)) {
                        ++out.pair_filtered;
                        pj["filtered"] = true;
                    } else {
                        const TaskOutput adv = models.qa->answer(f_adv.data, q);
                        const bool ok = outputs_match(orig, adv);
                        if (ok) ++out.pair_success;
                        pj["filtered"] = false;
                        pj["adversarial"] = adv.label;
                        pj["success"] = ok;
                    }
                    pairs.push_back(std::move(pj));
                }
                out.json["pairs"] = std::move(pairs);
                break;
            }
            }

            out.json["psnr"] = finite_or_null(out.psnr_v);
            out.json["ssim"] = out.ssim_v;
            out.json["feature_mse"] = out.fmse_v;
            out.json["loss_first"] =
                attack.loss_trace.empty() ? ordered_json(nullptr) : ordered_json(attack.loss_trace.front());
            out.json["loss_final"] = attack.final_loss;
            out.json["iterations"] = attack.iterations_run;
        } catch (const std::exception& e) {
            out.errored = true;
            out.json["error"] = e.what();
        }
        return out;
    };

    CampaignReport report;
    ordered_json runs_json = ordered_json::array();
    ordered_json timing_runs = ordered_json::array();
    const auto campaign_t0 = std::chrono::steady_clock::now();

    for (std::size_t r = 0; r < run_configs.size(); ++r) {
        const AttackConfig& cfg = run_configs[r];
        std::vector<RecordOutcome> outcomes(targets.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= targets.size()) return;
                outcomes[i] = evaluate_record(static_cast<int>(i), cfg);
            }
        };
        const int n = std::max(1, std::min(spec.workers, static_cast<int>(targets.size())));
        std::vector<std::thread> pool;
        for (int t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        RunAggregate agg;
        agg.epsilon = cfg.epsilon_linf;
        agg.attacks_run = static_cast<int>(targets.size());
        std::vector<double> psnrs, ssims, fmses;
        ordered_json records = ordered_json::array();
        ordered_json attack_ms = ordered_json::array();
        for (auto& o : outcomes) {
            agg.total_pairs += o.pair_total;
            agg.filtered_pairs += o.pair_filtered;
            agg.successes += o.pair_success;
            if (o.has_metrics) {
                psnrs.push_back(o.psnr_v);
                ssims.push_back(o.ssim_v);
                fmses.push_back(o.fmse_v);
            }
            if (o.failure_bleu) agg.failure_bleu.push_back(*o.failure_bleu);
            records.push_back(std::move(o.json));
            attack_ms.push_back(o.attack_ms);
        }
        agg.evaluated_pairs = agg.total_pairs - agg.filtered_pairs;
        agg.success_rate = agg.evaluated_pairs > 0
                               ? static_cast<double>(agg.successes) / agg.evaluated_pairs
                               : std::numeric_limits<double>::quiet_NaN();
        agg.psnr_mean = mean_of(psnrs);
        agg.psnr_std = std_of(psnrs, agg.psnr_mean);
        agg.ssim_mean = mean_of(ssims);
        agg.ssim_std = std_of(ssims, agg.ssim_mean);
        agg.feature_mse_median = median_of(fmses);

        ordered_json rj;
        rj["epsilon_linf"] = cfg.epsilon_linf ? ordered_json(*cfg.epsilon_linf) : ordered_json(nullptr);
        rj["attacks_run"] = agg.attacks_run;
        rj["total_pairs"] = agg.total_pairs;
        rj["filtered_pairs"] = agg.filtered_pairs;
        rj["evaluated_pairs"] = agg.evaluated_pairs;
        rj["successes"] = agg.successes;
        rj["success_rate"] = finite_or_null(agg.success_rate);
        rj["no_evaluable_pairs"] = agg.evaluated_pairs == 0;
        rj["psnr_mean"] = finite_or_null(agg.psnr_mean);
        rj["psnr_std"] = finite_or_null(agg.psnr_std);
        rj["ssim_mean"] = finite_or_null(agg.ssim_mean);
        rj["ssim_std"] = finite_or_null(agg.ssim_std);
        rj["feature_mse_median"] = finite_or_null(agg.feature_mse_median);
        if (!agg.failure_bleu.empty()) {
            std::array<double, 4> bm{};
            for (const auto& b : agg.failure_bleu)
                for (int k = 0; k < 4; ++k) bm[static_cast<std::size_t>(k)] += b[static_cast<std::size_t>(k)];
            for (double& v : bm) v /= static_cast<double>(agg.failure_bleu.size());
            rj["bleu_failure_means"] = bm;
        } else {
            rj["bleu_failure_means"] = nullptr;
        }
        rj["records"] = std::move(records);
        runs_json.push_back(std::move(rj));
        timing_runs.push_back({{"attack_ms", std::move(attack_ms)}});
        report.runs.push_back(std::move(agg));

        if (!spec.output_dir.empty()) {
            std::filesystem::create_directories(spec.output_dir);
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                if (outcomes[i].errored) continue;
                write_ppm(outcomes[i].adv_image,
                          spec.output_dir / ("adv_run" + std::to_string(r) + "_img" +
                                             std::to_string(i) + ".ppm"));
            }
        }
    }

    ordered_json j;
    j["schema_version"] = 1;
    j["task"] = task_name(spec.task);
    j["image_count"] = spec.image_count;
    j["seed"] = spec.seed;
    j["questions_per_image"] = spec.questions_per_image;
    ordered_json aj;
    aj["variant"] = spec.attack.variant == AttackVariant::maf ? "maf" : "oimo";
    aj["parameterization"] = spec.attack.param == Parameterization::trunc ? "trunc" : "tanh";
    aj["max_iter"] = spec.attack.max_iter;
    aj["lr"] = spec.attack.lr;
    aj["lambda"] = spec.attack.lambda;
    aj["epsilon_linf"] =
        spec.attack.epsilon_linf ? ordered_json(*spec.attack.epsilon_linf) : ordered_json(nullptr);
    aj["seed"] = spec.attack.seed;
    j["attack"] = std::move(aj);
    j["runs"] = std::move(runs_json);
    report.json = std::move(j);

    report.timing["total_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - campaign_t0)
                                    .count();
    report.timing["runs"] = std::move(timing_runs);

    if (!spec.output_dir.empty()) {
        std::filesystem::create_directories(spec.output_dir);
        std::ofstream f(spec.output_dir / "report.json", std::ios::binary);
        f << report.json.dump(2) << '\n';
        std::ofstream t(spec.output_dir / "timing.json", std::ios::binary);
        t << report.timing.dump(2) << '\n';
    }
    return report;
}

} // namespace mimic
