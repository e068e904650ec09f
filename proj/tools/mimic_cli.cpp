#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mimic/attack.hpp"
#include "mimic/campaign.hpp"
#include "mimic/config.hpp"
#include "mimic/metrics.hpp"
#include "mimic/train.hpp"
#include "mimic/zoo.hpp"

namespace {

using namespace mimic;

int cmd_gen_data(int count, std::uint64_t seed, int size, const std::string& out_dir) {
    const auto data = synth_dataset(count, seed, size);
    std::filesystem::create_directories(out_dir);
    std::ofstream labels(std::filesystem::path(out_dir) / "labels.tsv");
    labels << "index\tlabel\tcolor\tshape\tsize\tcaption\n";
    for (int i = 0; i < count; ++i) {
        const auto& s = data[static_cast<std::size_t>(i)];
        char name[32];
        std::snprintf(name, sizeof name, "img%04d.ppm", i);
        write_ppm(s.image, std::filesystem::path(out_dir) / name);
        labels << i << '\t' << s.label << '\t' << s.color << '\t' << s.shape << '\t' << s.size
               << '\t';
        for (std::size_t w = 0; w < s.description.size(); ++w)
            labels << (w ? " " : "") << s.description[w];
        labels << '\n';
    }
    std::cout << "wrote " << count << " images + labels.tsv to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& out_dir) {
    ModelZoo z = train_zoo();
    save_zoo(z, out_dir);
    std::cout << "saved model checkpoints to " << out_dir << "\n";
    return 0;
}

AttackConfig make_attack_config(const std::string& variant, const std::string& param,
                                int iters, double lr, double lambda, double eps,
                                std::uint64_t seed) {
    AttackConfig cfg;
    cfg.variant = variant == "maf" ? AttackVariant::maf : AttackVariant::oimo;
    cfg.param = param == "trunc" ? Parameterization::trunc : Parameterization::tanh;
    cfg.max_iter = iters;
    cfg.lr = lr;
    cfg.lambda = lambda;
    if (eps >= 0.0) cfg.epsilon_linf = eps;
    cfg.seed = seed;
    return cfg;
}

int cmd_attack(const std::string& models_dir, const std::string& extractor,
               const std::string& image_path, const std::string& start_path,
               const AttackConfig& cfg, const std::string& out_path) {
    const ModelZoo z = load_zoo(models_dir);
    const FeatureNet& net = extractor == "invertible"
                                ? static_cast<const FeatureNet&>(*z.invertible)
                                : static_cast<const FeatureNet&>(*z.plain);
    const ImageU8 target = read_ppm(image_path);
    std::optional<ImageU8> start;
    if (!start_path.empty()) start = read_ppm(start_path);

    const AttackResult r = run_attack(net, target, start, cfg);
    write_ppm(r.adversarial_image, out_path);
    std::cout << "iterations: " << r.iterations_run << "\n"
              << "loss: " << (r.loss_trace.empty() ? 0.0 : r.loss_trace.front()) << " -> "
              << r.final_loss << "\n"
              << "wall time: " << r.wall_time_ms << " ms\n"
              << "wrote " << out_path << "\n";
    return 0;
}

int cmd_campaign(const std::string& models_dir, const CampaignSpec& spec) {
    const ModelZoo z = load_zoo(models_dir);
    TaskModels models;
    const bool invertible = spec.attack.param == Parameterization::trunc;
    models.net = invertible ? static_cast<const FeatureNet*>(z.invertible.get())
                            : static_cast<const FeatureNet*>(z.plain.get());
    models.classifier = invertible ? z.inv_classifier.get() : z.classifier.get();
    models.decoder = z.decoder.get();
    models.qa = z.qa.get();

    const CampaignReport rep = run_campaign(spec, models);
    for (const auto& r : rep.runs) {
        std::cout << "run";
        if (r.epsilon) std::cout << " eps=" << *r.epsilon;
        std::cout << ": attacks=" << r.attacks_run << " evaluated=" << r.evaluated_pairs
                  << " successes=" << r.successes;
        if (r.evaluated_pairs > 0) std::cout << " rate=" << r.success_rate;
        else std::cout << " rate=n/a (no evaluable pairs)";
        std::cout << "\n";
    }
    if (!spec.output_dir.empty())
        std::cout << "report written to " << (spec.output_dir / "report.json").string() << "\n";
    return 0;
}

int cmd_invert_check(std::uint64_t seed, int count) {
    const InvertibleExtractor net(105);
    const auto data = synth_dataset(count, seed, 16);
    double worst = 0.0;
    for (const auto& s : data) {
        const Tensor f = net.extract_eval(to_byte_tensor(s.image));
        const Tensor back = net.invert(f);
        const Tensor orig = to_byte_tensor(s.image);
        for (std::size_t i = 0; i < back.size(); ++i)
            worst = std::max(worst, std::fabs(back.data[i] - orig.data[i]));
    }
    std::cout << "max reconstruction error over " << count << " images: " << worst << "\n";
    return worst < 1e-6 ? 0 : 1;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
    const ImageU8 a = read_ppm(a_path);
    const ImageU8 b = read_ppm(b_path);
    const double p = psnr(a, b);
    std::cout << "psnr_db: ";
    if (std::isinf(p)) std::cout << "inf";
    else std::cout << p;
    std::cout << "\nssim: " << ssim(a, b) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature-mimicry adversarial attack toolkit"};
    app.require_subcommand(1);

    // gen-data
    int gd_count = 100, gd_size = 32;
    std::uint64_t gd_seed = 0;
    std::string gd_out = "data";
    auto* gen = app.add_subcommand("gen-data", "render the synthetic shape dataset as PPMs");
    gen->add_option("--count", gd_count, "number of images")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gd_seed, "dataset seed");
    gen->add_option("--size", gd_size, "image side length")->check(CLI::Range(8, 512));
    gen->add_option("--out", gd_out, "output directory")->required();

    // train
    std::string tr_out = "models";
    auto* train = app.add_subcommand("train", "train the standard model suite and save checkpoints");
    train->add_option("--out", tr_out, "checkpoint directory")->required();

    // attack
    std::string at_models = "models", at_extractor = "plain", at_image, at_start, at_out = "adv.ppm";
    std::string at_variant = "maf", at_param = "tanh";
    int at_iters = 1000;
    double at_lr = 0.025, at_lambda = 0.9999, at_eps = -1.0;
    std::uint64_t at_seed = 0;
    auto* atk = app.add_subcommand("attack", "run one feature-mimicry attack");
    atk->add_option("--models", at_models, "checkpoint directory");
    atk->add_option("--extractor", at_extractor, "feature extractor")
        ->check(CLI::IsMember({"plain", "invertible"}));
    atk->add_option("--image", at_image, "target image (PPM)")->required();
    atk->add_option("--start", at_start, "start image (PPM), required for oimo");
    atk->add_option("--variant", at_variant)->check(CLI::IsMember({"maf", "oimo"}));
    atk->add_option("--param", at_param)->check(CLI::IsMember({"trunc", "tanh"}));
    atk->add_option("--max-iter", at_iters, "optimization iterations")->check(CLI::NonNegativeNumber);
    atk->add_option("--lr", at_lr, "Adam learning rate");
    atk->add_option("--lambda", at_lambda, "arctanh shrink factor");
    atk->add_option("--eps", at_eps, "L-inf clipping radius in bytes (oimo only)");
    atk->add_option("--seed", at_seed);
    atk->add_option("--out", at_out, "adversarial image output path");

    // campaign
    std::string cp_models = "models", cp_task = "classify", cp_out, cp_config, cp_sweep;
    std::string cp_variant = "maf", cp_param = "tanh";
    int cp_images = 100, cp_iters = 1000, cp_questions = 5, cp_workers = 1;
    double cp_lr = 0.025, cp_eps = -1.0;
    std::uint64_t cp_seed = 0;
    auto* cp = app.add_subcommand("campaign", "attack a dataset and write a JSON report");
    cp->add_option("--models", cp_models, "checkpoint directory");
    cp->add_option("--task", cp_task)->check(CLI::IsMember({"classify", "caption", "vqa"}));
    cp->add_option("--variant", cp_variant)->check(CLI::IsMember({"maf", "oimo"}));
    cp->add_option("--param", cp_param)->check(CLI::IsMember({"trunc", "tanh"}));
    cp->add_option("--images", cp_images)->check(CLI::PositiveNumber);
    cp->add_option("--max-iter", cp_iters)->check(CLI::PositiveNumber);
    cp->add_option("--lr", cp_lr);
    cp->add_option("--eps", cp_eps, "single L-inf radius");
    cp->add_option("--eps-sweep", cp_sweep, "comma-separated L-inf radii");
    cp->add_option("--questions", cp_questions, "questions per image (vqa)");
    cp->add_option("--workers", cp_workers)->check(CLI::PositiveNumber);
    cp->add_option("--seed", cp_seed);
    cp->add_option("--out", cp_out, "report directory");
    cp->add_option("--config", cp_config, "key = value config file (overrides flags)");

    // invert-check
    std::uint64_t ic_seed = 0;
    int ic_count = 50;
    auto* ic = app.add_subcommand("invert-check", "verify exact feature inversion");
    ic->add_option("--seed", ic_seed);
    ic->add_option("--count", ic_count)->check(CLI::PositiveNumber);

    // metrics
    std::string mt_a, mt_b;
    auto* mt = app.add_subcommand("metrics", "PSNR/SSIM between two PPM images");
    mt->add_option("--a", mt_a)->required();
    mt->add_option("--b", mt_b)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // unknown flags / bad values are validation errors
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gd_count, gd_seed, gd_size, gd_out);
        if (train->parsed()) return cmd_train(tr_out);
        if (atk->parsed()) {
            if (at_variant == "maf" && at_iters < 1)
                throw std::invalid_argument("attack: maf requires --max-iter >= 1");
            return cmd_attack(at_models, at_extractor, at_image, at_start,
                              make_attack_config(at_variant, at_param, at_iters, at_lr, at_lambda,
                                                 at_eps, at_seed),
                              at_out);
        }
        if (cp->parsed()) {
            CampaignSpec spec;
            spec.task = parse_task(cp_task);
            spec.attack = make_attack_config(cp_variant, cp_param, cp_iters, cp_lr, 0.9999,
                                             cp_eps, cp_seed);
            spec.image_count = cp_images;
            spec.seed = cp_seed;
            spec.questions_per_image = cp_questions;
            spec.workers = cp_workers;
            if (!cp_out.empty()) spec.output_dir = cp_out;
            if (!cp_sweep.empty()) {
                spec.epsilon_sweep.clear();
                std::size_t pos = 0;
                std::string rest = cp_sweep;
                while (!rest.empty()) {
                    const std::size_t comma = rest.find(',');
                    spec.epsilon_sweep.push_back(std::stod(rest.substr(0, comma), &pos));
                    if (comma == std::string::npos) break;
                    rest = rest.substr(comma + 1);
                }
            }
            if (!cp_config.empty()) apply_config(Config::from_file(cp_config), spec);
            return cmd_campaign(cp_models, spec);
        }
        if (ic->parsed()) return cmd_invert_check(ic_seed, ic_count);
        if (mt->parsed()) return cmd_metrics(mt_a, mt_b);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1; // validation error
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2; // runtime failure
    }
    return 1;
}
