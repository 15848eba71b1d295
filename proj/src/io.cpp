#include "advshift/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "advshift/errors.hpp"

namespace advshift {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
    return v;
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        const double v = parse_double(value);
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        return v;
    } catch (const std::invalid_argument&) {
        throw ConfigError(key, "expected a finite number, got '" + value + "'");
    }
}

std::string lower(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

const char* to_string(ThetaStarRule r) { return r == ThetaStarRule::Harmonic ? "harmonic" : "custom"; }
const char* to_string(Theta0Rule r) { return r == Theta0Rule::BestResponse ? "best_response" : "sample_fit"; }
const char* to_string(ResponseMode m) { return m == ResponseMode::Sampled ? "sampled" : "noise_free"; }

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    const std::string t = trim(text);
    if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (t == "inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = t.data();
    if (!t.empty() && t[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw std::invalid_argument("not a number: '" + t + "'");
    }
    return v;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "# schema: " << table.schema << '\n';
    for (const auto& [k, v] : table.meta) out << "# " << k << ": " << v << '\n';
    for (std::size_t j = 0; j < table.columns.size(); ++j) out << (j ? "," : "") << table.columns[j];
    out << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw std::runtime_error("write_csv: row width differs from header");
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    const std::string prefix = "# schema: ";
    if (!std::getline(in, line) || line.rfind(prefix, 0) != 0) {
        throw std::runtime_error(path.string() + ": missing schema header");
    }
    t.schema = line.substr(prefix.size());
    bool header = false;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) != 0) {
            header = true;
            break;
        }
        const auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        t.meta.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
    }
    if (!header) throw std::runtime_error(path.string() + ": missing column header");
    t.columns = split(line, ',');
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split(line, ','));
        if (t.rows.back().size() != t.columns.size()) {
            throw std::runtime_error(path.string() + ": row width differs from header");
        }
    }
    return t;
}

void write_json(const std::filesystem::path& path, const std::string& schema, const nlohmann::ordered_json& doc) {
    nlohmann::ordered_json out;
    out["schema"] = schema;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() != "schema") out[it.key()] = it.value();
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << out.dump(2) << '\n';
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "setting",      "d",        "subspace_rank", "theta_star_rule", "theta_star",    "theta0_rule",
        "fit_samples",  "gamma",    "n_particles",   "T",               "record_every",  "snapshots",
        "seed",         "c",        "learner_eta",   "learner_steps",   "learner_mode",  "threads"};
    return keys;
}

void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "setting") {
        cfg.setting = parse_setting(lower(value));
    } else if (key == "d") {
        cfg.d = parse_int<std::size_t>(key, value);
    } else if (key == "subspace_rank") {
        cfg.subspace_rank = parse_int<std::size_t>(key, value);
    } else if (key == "theta_star_rule") {
        const std::string v = lower(value);
        if (v == "harmonic") cfg.theta_star_rule = ThetaStarRule::Harmonic;
        else if (v == "custom") cfg.theta_star_rule = ThetaStarRule::Custom;
        else throw ConfigError(key, "expected harmonic or custom, got '" + value + "'");
    } else if (key == "theta_star") {
        cfg.custom_theta_star.clear();
        for (const std::string& item : split(value, ',')) cfg.custom_theta_star.push_back(parse_real(key, item));
        cfg.theta_star_rule = ThetaStarRule::Custom;
    } else if (key == "theta0_rule") {
        const std::string v = lower(value);
        if (v == "best_response") cfg.theta0_rule = Theta0Rule::BestResponse;
        else if (v == "sample_fit") cfg.theta0_rule = Theta0Rule::SampleFit;
        else throw ConfigError(key, "expected best_response or sample_fit, got '" + value + "'");
    } else if (key == "fit_samples") {
        cfg.fit_samples = parse_int<std::size_t>(key, value);
    } else if (key == "gamma") {
        cfg.gamma = parse_real(key, value);
        if (cfg.gamma < 0.0) throw ConfigError(key, "step size must be positive");
    } else if (key == "n_particles") {
        cfg.n_particles = parse_int<std::size_t>(key, value);
    } else if (key == "T") {
        cfg.T = parse_int<long>(key, value);
    } else if (key == "record_every") {
        cfg.record_every = parse_int<long>(key, value);
    } else if (key == "snapshots") {
        cfg.snapshots.clear();
        if (!trim(value).empty()) {
            for (const std::string& item : split(value, ',')) cfg.snapshots.push_back(parse_int<long>(key, item));
        }
    } else if (key == "seed") {
        cfg.seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "c") {
        cfg.c = parse_real(key, value);
    } else if (key == "learner_eta") {
        cfg.learner_eta = parse_real(key, value);
    } else if (key == "learner_steps") {
        cfg.learner_steps = parse_int<int>(key, value);
    } else if (key == "learner_mode") {
        const std::string v = lower(value);
        if (v == "sampled") cfg.learner_mode = ResponseMode::Sampled;
        else if (v == "noise_free") cfg.learner_mode = ResponseMode::NoiseFree;
        else throw ConfigError(key, "expected sampled or noise_free, got '" + value + "'");
    } else if (key == "threads") {
        cfg.threads = parse_int<unsigned>(key, value);
    } else {
        throw ConfigError(key, "unknown config key");
    }
}

ParsedConfig parse_config(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config", "line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("config", "line " + std::to_string(lineno) + ": empty key");
        for (const auto& [k, v] : entries) {
            if (k == key) throw ConfigError(key, "repeated key");
        }
        entries.emplace_back(key, value);
    }

    // The setting picks the defaults every other key overrides.
    ParsedConfig out;
    Setting setting = Setting::Regression;
    for (const auto& [k, v] : entries) {
        if (k == "setting") setting = parse_setting(lower(v));
    }
    out.base = default_config(setting);
    const std::string sweep_prefix = "sweep.";
    for (const auto& [k, v] : entries) {
        if (k.rfind(sweep_prefix, 0) == 0) {
            const std::string axis = k.substr(sweep_prefix.size());
            if (axis == "setting" || axis == "snapshots" || axis == "theta_star") {
                throw ConfigError(k, "this key cannot be swept");
            }
            std::vector<std::string> values = split(v, ',');
            if (values.empty() || values.front().empty()) throw ConfigError(k, "sweep axis needs at least one value");
            ExperimentConfig probe = out.base;
            for (const std::string& item : values) apply_config_key(probe, axis, item);
            out.axes.emplace_back(axis, std::move(values));
        } else {
            apply_config_key(out.base, k, v);
        }
    }
    return out;
}

ParsedConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<ExperimentConfig> expand_grid(const ParsedConfig& parsed) {
    std::vector<ExperimentConfig> grid{parsed.base};
    for (const auto& [axis, values] : parsed.axes) {
        std::vector<ExperimentConfig> next;
        next.reserve(grid.size() * values.size());
        for (const ExperimentConfig& cfg : grid) {
            for (const std::string& v : values) {
                ExperimentConfig c = cfg;
                apply_config_key(c, axis, v);
                next.push_back(std::move(c));
            }
        }
        grid = std::move(next);
    }
    return grid;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["setting"] = std::string(to_string(cfg.setting));
    j["d"] = cfg.d;
    j["subspace_rank"] = cfg.subspace_rank;
    j["theta_star_rule"] = to_string(cfg.theta_star_rule);
    if (cfg.theta_star_rule == ThetaStarRule::Custom) j["theta_star"] = cfg.custom_theta_star;
    j["theta0_rule"] = to_string(cfg.effective_theta0_rule());
    j["fit_samples"] = cfg.fit_samples;
    j["gamma"] = cfg.gamma;
    j["n_particles"] = cfg.n_particles;
    j["T"] = cfg.T;
    j["record_every"] = cfg.record_every;
    j["snapshots"] = cfg.snapshot_times();
    j["seed"] = cfg.seed;
    j["c"] = cfg.c;
    j["learner_eta"] = cfg.learner_eta;
    j["learner_steps"] = cfg.learner_steps;
    j["learner_mode"] = to_string(cfg.learner_mode);
    j["threads"] = cfg.threads;
    return j;
}

}  // namespace advshift
