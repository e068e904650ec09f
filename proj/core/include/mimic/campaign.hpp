#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimic/attack.hpp"
#include "mimic/dataset.hpp"
#include "mimic/extractor.hpp"
#include "mimic/heads.hpp"

namespace mimic {

enum class TaskKind { classify, caption, vqa };

struct CampaignSpec {
    TaskKind task = TaskKind::classify;
    AttackConfig attack;
    int image_count = 100;
    std::uint64_t seed = 0;
    std::vector<double> epsilon_sweep; // optional; overrides attack.epsilon_linf per run
    std::filesystem::path output_dir;  // empty: no files written
    int questions_per_image = kNumQuestions;
    int workers = 1;
};

/// The trained models a campaign consumes; only the head matching the task
/// must be present.
struct TaskModels {
    const FeatureNet* net = nullptr;
    const ClassifierHead* classifier = nullptr;
    const SeqDecoderHead* decoder = nullptr;
    const QaHead* qa = nullptr;
};

struct RunAggregate {
    std::optional<double> epsilon;
    int attacks_run = 0;
    int total_pairs = 0;
    int filtered_pairs = 0;
    int evaluated_pairs = 0;
    int successes = 0;
    double success_rate = 0.0; // NaN when no evaluable pairs
    double psnr_mean = 0.0;
    double psnr_std = 0.0;
    double ssim_mean = 0.0;
    double ssim_std = 0.0;
    double feature_mse_median = 0.0;
    std::vector<std::array<double, 4>> failure_bleu; // caption failures only
};

struct CampaignReport {
    std::vector<RunAggregate> runs;
    nlohmann::ordered_json json;   // deterministic; byte-identical across reruns
    nlohmann::ordered_json timing; // wall times, kept out of the main report
};

/// Runs the full protocol: per-image attacks (one per image regardless of
/// question count), QA language-bias filtering, metric evaluation, and
/// report emission into output_dir when set.
CampaignReport run_campaign(const CampaignSpec& spec, const TaskModels& models);

std::string task_name(TaskKind t);
TaskKind parse_task(const std::string& name);

} // namespace mimic
