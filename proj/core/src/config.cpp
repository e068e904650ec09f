#include "mimic/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mimic {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
    throw std::invalid_argument("config: key '" + key + "' has value '" + value + "', expected " + want);
}

} // namespace

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("config: cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str(), path.string());
}

Config Config::from_string(const std::string& text, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: " + origin + ":" + std::to_string(lineno) +
                                     ": missing '=' in '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config: " + origin + ":" + std::to_string(lineno) +
                                     ": empty key");
        if (c.values_.count(key))
            throw std::invalid_argument("config: " + origin + ":" + std::to_string(lineno) +
                                     ": duplicate key '" + key + "'");
        c.values_[key] = trim(stripped.substr(eq + 1));
    }
    return c;
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        throw std::invalid_argument("config: missing key '" + key + "' in " + origin_);
    return it->second;
}

int Config::get_int(const std::string& key) const {
    const std::string& v = get(key);
    int out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
    return out;
}

double Config::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) bad_value(key, v, "a number");
        return out;
    } catch (const std::logic_error&) {
        bad_value(key, v, "a number");
    }
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) bad_value(key, v, "comma-separated numbers");
        } catch (const std::logic_error&) {
            bad_value(key, v, "comma-separated numbers");
        }
    }
    if (out.empty()) bad_value(key, v, "comma-separated numbers");
    return out;
}

void apply_attack_config(const Config& c, AttackConfig& cfg) {
    if (c.has("variant")) {
        const std::string& v = c.get("variant");
        if (v == "maf") cfg.variant = AttackVariant::maf;
        else if (v == "oimo") cfg.variant = AttackVariant::oimo;
        else bad_value("variant", v, "maf or oimo");
    }
    if (c.has("param")) {
        const std::string& v = c.get("param");
        if (v == "trunc") cfg.param = Parameterization::trunc;
        else if (v == "tanh") cfg.param = Parameterization::tanh;
        else bad_value("param", v, "trunc or tanh");
    }
    if (c.has("max_iter")) cfg.max_iter = c.get_int("max_iter");
    if (c.has("lr")) cfg.lr = c.get_double("lr");
    if (c.has("lambda")) cfg.lambda = c.get_double("lambda");
    if (c.has("epsilon_linf")) cfg.epsilon_linf = c.get_double("epsilon_linf");
    if (c.has("attack_seed")) cfg.seed = c.get_u64("attack_seed");
}

void apply_config(const Config& c, CampaignSpec& spec) {
    static const std::set<std::string> known{
        "variant", "param",        "max_iter",   "lr",
        "lambda",  "epsilon_linf", "attack_seed", "task",
        "image_count", "seed",     "epsilon_sweep", "output_dir",
        "questions_per_image", "workers"};
    for (const auto& [k, v] : c.values())
        if (!known.count(k)) throw std::invalid_argument("config: unknown key '" + k + "'");

    apply_attack_config(c, spec.attack);
    if (c.has("task")) spec.task = parse_task(c.get("task"));
    if (c.has("image_count")) spec.image_count = c.get_int("image_count");
    if (c.has("seed")) spec.seed = c.get_u64("seed");
    if (c.has("epsilon_sweep")) spec.epsilon_sweep = c.get_doubles("epsilon_sweep");
    if (c.has("output_dir")) spec.output_dir = c.get("output_dir");
    if (c.has("questions_per_image")) spec.questions_per_image = c.get_int("questions_per_image");
    if (c.has("workers")) spec.workers = c.get_int("workers");
}

} // namespace mimic
