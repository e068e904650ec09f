#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mimic/campaign.hpp"

namespace mimic {

/// Flat `key = value` files: one pair per line, `#` comments, blank lines
/// ignored, whitespace around keys and values trimmed.
class Config {
public:
    static Config from_file(const std::filesystem::path& path);
    static Config from_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const; // comma separated

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

/// Applies attack keys (variant, param, max_iter, lr, lambda, epsilon_linf,
/// attack_seed) onto cfg; unknown keys are only rejected by apply_config on
/// a full CampaignSpec.
void apply_attack_config(const Config& c, AttackConfig& cfg);

/// Applies all recognized keys; rejects unknown ones. Campaign keys: task,
/// image_count, seed, epsilon_sweep, output_dir, questions_per_image, workers.
void apply_config(const Config& c, CampaignSpec& spec);

} // namespace mimic
