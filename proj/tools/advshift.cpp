// advshift: simulate adversarial covariate shift, check the analytic
// properties, reproduce the two-dimensional figures, and play one round of
// the shift/learn game.
//
// Exit codes: 0 success, 1 property failure, 2 configuration error,
// 3 runtime, numeric or I/O error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "advshift/errors.hpp"
#include "advshift/experiments.hpp"
#include "advshift/io.hpp"
#include "advshift/scalar.hpp"
#include "advshift/verify.hpp"

namespace fs = std::filesystem;
using namespace advshift;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kPropertyFailure = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string figure;
    std::string suite;
    bool inject_sign_error = false;
    bool sweep_learner = false;
};

unsigned resolve_threads(unsigned flag) {
    if (const char* env = std::getenv("ADVSHIFT_THREADS"); env && *env) {
        try {
            const long v = std::stol(env);
            if (v < 1) throw std::invalid_argument("non-positive");
            return static_cast<unsigned>(v);
        } catch (const std::exception&) {
            throw ConfigError("ADVSHIFT_THREADS", std::string("expected a positive integer, got '") + env + "'");
        }
    }
    if (flag < 1) throw ConfigError("threads", "must be at least 1");
    return flag;
}

ExperimentConfig load_single(const Options& opt) {
    if (opt.config.empty()) throw ConfigError("config", "--config is required");
    ParsedConfig parsed = load_config(opt.config);
    if (!parsed.axes.empty()) throw ConfigError("config", "sweep.* keys are only valid for the sweep subcommand");
    ExperimentConfig cfg = parsed.base;
    if (opt.seed) cfg.seed = *opt.seed;
    cfg.threads = resolve_threads(opt.threads);
    cfg.validate();
    return cfg;
}

fs::path prepare_out(const Options& opt) {
    fs::path out(opt.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

// Thread count is left out so data files do not depend on it; the manifest keeps it.
std::vector<std::pair<std::string, std::string>> csv_meta(const ExperimentConfig& cfg) {
    ordered_json echo = config_to_json(cfg);
    echo.erase("threads");
    return {{"version", ADVSHIFT_VERSION}, {"seed", std::to_string(cfg.seed)}, {"config", echo.dump()}};
}

ordered_json manifest(const std::string& command, const ExperimentConfig& cfg, const ExperimentSetup& setup) {
    ordered_json j;
    j["command"] = command;
    j["version"] = ADVSHIFT_VERSION;
    j["seed"] = cfg.seed;
    j["config"] = config_to_json(cfg);
    const ModelPair& m = setup.model;
    ordered_json derived;
    derived["theta_star_norm"] = m.theta_star_norm();
    derived["theta0_norm"] = m.theta0_norm();
    derived["residual_norm"] = m.residual_norm();
    derived["q"] = m.theta0_norm() > 0.0 && m.residual_norm() > 0.0 ? m.q() : 0.0;
    if (m.theta0_norm() > 0.0) derived["r"] = m.r();
    derived["gamma_tilde"] = m.gamma_tilde(cfg.gamma);
    derived["eta"] = m.scalar_eta(cfg.gamma);
    derived["initial_law"] = "standard normal in subspace coordinates, mapped through the basis, normalized";
    j["derived"] = derived;
    j["warnings"] = setup.warnings;
    return j;
}

std::string fmt(double v) { return format_double(v); }

int cmd_simulate(const Options& opt) {
    const ExperimentConfig cfg = load_single(opt);
    const fs::path out = prepare_out(opt);
    ExperimentSetup setup = build_setup(cfg);
    for (const std::string& w : setup.warnings) std::cerr << "warning: " << w << '\n';
    const ModelPair& m = setup.model;
    const RunResult run = run_snapshots(setup.ensemble, m, cfg.setting, cfg.snapshot_times(), cfg.threads);

    CsvTable traj{"advshift.trajectory/1", csv_meta(cfg), {"t", "particle_id", "align_b", "align_c", "a", "b", "norm_log10"}, {}};
    for (const AlignmentRecord& rec : run.records) {
        for (std::size_t i = 0; i < rec.particles.size(); ++i) {
            const ParticleDiagnostics& p = rec.particles[i];
            traj.rows.push_back({std::to_string(rec.t), std::to_string(i), fmt(p.align_b), fmt(p.align_c), fmt(p.a),
                                 fmt(p.b), fmt(p.log_norm / std::log(10.0))});
        }
    }
    write_csv(out / "trajectory.csv", traj);

    ordered_json man = manifest("simulate", cfg, setup);
    man["stationary_particles"] = run.final_ensemble.stationary_count();
    ordered_json files = ordered_json::array({"trajectory.csv"});

    if (cfg.setting == Setting::Classification && m.theta0_norm() > 0.0) {
        // Particles with a < 0 mirror those with a > 0; diagnostics use (sign a) * (a, b).
        CsvTable diag{"advshift.diagnostics/1",
                      csv_meta(cfg),
                      {"t", "particle_id", "sign", "a", "b", "s", "L", "env_u", "env_l", "assumption_ok"},
                      {}};
        const double r = m.r();
        for (const AlignmentRecord& rec : run.records) {
            for (std::size_t i = 0; i < rec.particles.size(); ++i) {
                const ParticleDiagnostics& p = rec.particles[i];
                const double sign = p.a < 0.0 ? -1.0 : 1.0;
                const double a = sign * p.a, b = sign * p.b;
                const auto L = lyapunov(a, b);
                const Envelopes env = envelopes(a, b);
                diag.rows.push_back({std::to_string(rec.t), std::to_string(i), sign < 0 ? "-1" : "1", fmt(a), fmt(b),
                                     fmt(a + b), L ? fmt(*L) : "nan", env.upper ? fmt(*env.upper) : "nan",
                                     fmt(env.lower), check_assumption(a, b, r, cfg.c).ok ? "1" : "0"});
            }
        }
        write_csv(out / "diagnostics.csv", diag);
        files.push_back("diagnostics.csv");
        if (auto t0 = basin_entry_time(run.records, r, cfg.c)) man["basin_entry_t"] = *t0;
    }
    man["files"] = files;
    write_json(out / "manifest.json", "advshift.manifest/1", man);
    std::cout << "simulate: " << run.records.size() << " snapshots x " << cfg.n_particles << " particles -> "
              << (out / "trajectory.csv").string() << '\n';
    return kOk;
}

int cmd_verify(const Options& opt) {
    SuiteOptions so;
    so.seed = opt.seed.value_or(0);
    if (opt.inject_sign_error) {
        // Negative control: a gradient with flipped sign must be caught.
        so.gradient = [](const ModelPair& m, Setting s, ConstVecView x) { return scaled(-1.0, pointwise_gradient(m, s, x)); };
    }
    const SuiteReport rep = run_suite(opt.suite, so);
    for (const PropertyResult& p : rep.properties) {
        std::cout << (p.passed() ? "[PASS] " : "[FAIL] ") << rep.suite << '/' << p.name << " checked=" << p.checked
                  << " failures=" << p.failures << '\n';
        if (!p.passed() && !p.counterexample.empty()) std::cout << "  counterexample: " << p.counterexample << '\n';
    }
    std::cout << (rep.passed() ? "suite passed" : "suite FAILED") << '\n';
    return rep.passed() ? kOk : kPropertyFailure;
}

int cmd_reproduce(const Options& opt) {
    ExperimentConfig cfg = figure_config(opt.figure == "fig1" ? Figure::Regression : Figure::Classification);
    if (opt.seed) cfg.seed = *opt.seed;
    cfg.threads = resolve_threads(opt.threads);
    const fs::path out = prepare_out(opt);
    const fs::path snap_dir = out / "snapshots";
    std::error_code ec;
    fs::create_directories(snap_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + snap_dir.string() + ": " + ec.message());

    const FigureData fig = reproduce_figure(cfg);
    for (const std::string& w : fig.setup.warnings) std::cerr << "warning: " << w << '\n';
    ordered_json man = manifest("reproduce " + opt.figure, cfg, fig.setup);
    man["plane"] = "u = <x/|x|, theta*/|theta*|>, v = <x/|x|, e2>, e2 = (theta* - theta0) orthogonalized against theta*";
    ordered_json files = ordered_json::array();
    ordered_json summary = ordered_json::array();
    std::size_t k = 0;
    for (const AlignmentRecord& rec : fig.run.records) {
        CsvTable t{"advshift.snapshot/1", csv_meta(cfg), {"particle_id", "u", "v", "align_b", "align_c", "stationary"}, {}};
        t.meta.emplace_back("t", std::to_string(rec.t));
        double sb = 0.0, sc = 0.0;
        std::size_t nb = 0, nc = 0;
        for (std::size_t i = 0; i < rec.particles.size(); ++i, ++k) {
            const SnapshotRow& row = fig.rows[k];
            t.rows.push_back({std::to_string(row.particle), fmt(row.u), fmt(row.v), fmt(row.align_b), fmt(row.align_c),
                              row.stationary ? "1" : "0"});
            if (std::isfinite(row.align_b)) sb += row.align_b, ++nb;
            if (std::isfinite(row.align_c)) sc += row.align_c, ++nc;
        }
        const std::string name = "t_" + std::to_string(rec.t) + ".csv";
        write_csv(snap_dir / name, t);
        files.push_back("snapshots/" + name);
        ordered_json s;
        s["t"] = rec.t;
        s["mean_align_b"] = nb ? sb / double(nb) : NAN;
        s["mean_align_c"] = nc ? sc / double(nc) : NAN;
        summary.push_back(s);
    }
    man["snapshot_summary"] = summary;
    man["files"] = files;
    write_json(out / "manifest.json", "advshift.manifest/1", man);
    std::cout << "reproduce " << opt.figure << ": " << files.size() << " snapshot files -> " << snap_dir.string() << '\n';
    return kOk;
}

ordered_json rate_json(const RateFit& f) {
    ordered_json j;
    j["model"] = f.model == RateModel::ExpDecay ? "ExpDecay" : "PolyLog";
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r2"] = f.r2;
    j["predicted_c_or_exponent"] = f.predicted;
    j["points"] = f.points;
    if (f.model == RateModel::ExpDecay) j["closed_form_points"] = f.closed_form_points;
    return j;
}

int cmd_rates(const Options& opt) {
    const ExperimentConfig cfg = load_single(opt);
    const fs::path out = prepare_out(opt);
    ExperimentSetup setup = build_setup(cfg);
    for (const std::string& w : setup.warnings) std::cerr << "warning: " << w << '\n';
    const ModelPair& m = setup.model;
    const RunResult run = run_snapshots(setup.ensemble, m, cfg.setting, cfg.snapshot_times(), cfg.threads);
    ordered_json j;
    j["version"] = ADVSHIFT_VERSION;
    j["seed"] = cfg.seed;
    j["config"] = config_to_json(cfg);
    RateFit fit;
    if (cfg.setting == Setting::Regression) {
        fit = fit_regression_rate(run.records, m, cfg.gamma);
        j["gamma_tilde"] = m.gamma_tilde(cfg.gamma);
    } else {
        const auto t0 = basin_entry_time(run.records, m.r(), cfg.c);
        if (!t0) throw DegenerateError("rates: particles never satisfy the initial-condition assumption within T");
        j["basin_entry_t"] = *t0;
        fit = fit_classification_rate(run.records, *t0);
    }
    j["fit"] = rate_json(fit);
    write_json(out / "ratefit.json", "advshift.ratefit/1", j);
    std::cout << "rates: slope " << fmt(fit.slope) << " (predicted " << fmt(fit.predicted) << "), r2 " << fmt(fit.r2)
              << '\n';
    return kOk;
}

int cmd_learner(const Options& opt) {
    const ExperimentConfig cfg = load_single(opt);
    const fs::path out = prepare_out(opt);
    ExperimentSetup setup = build_setup(cfg);
    for (const std::string& w : setup.warnings) std::cerr << "warning: " << w << '\n';
    const ModelPair& m = setup.model;
    const LearnerSettings ls{cfg.learner_eta, cfg.learner_steps, cfg.seed, cfg.learner_mode};
    const LearnerOutcome o = play_round(m, cfg.setting, setup.ensemble, cfg.T, ls, cfg.threads);
    const ErrDecomposition dec = err_decomposition(o.theta1, m);
    ordered_json j;
    j["version"] = ADVSHIFT_VERSION;
    j["seed"] = cfg.seed;
    j["config"] = config_to_json(cfg);
    j["err_norm"] = o.err_norm;
    j["err_norm_theta0"] = m.residual_norm();
    j["curse_ratio"] = o.curse_ratio ? ordered_json(*o.curse_ratio) : ordered_json(nullptr);
    j["residual_along_theta_star"] = std::abs(inner(m.residual(), m.theta_star())) / m.theta_star_norm();
    j["excluded_particles"] = o.excluded;
    j["err_decomposition"] = {{"along_b", dec.along_b}, {"along_star", dec.along_star}, {"residual", dec.residual}};
    j["theta1"] = o.theta1;
    write_json(out / "learner.json", "advshift.learner/1", j);
    std::cout << "learner: err_norm " << fmt(o.err_norm) << " (theta0: " << fmt(m.residual_norm()) << ")";
    if (o.curse_ratio) std::cout << ", curse_ratio " << fmt(*o.curse_ratio);
    std::cout << '\n';
    return kOk;
}

int cmd_sweep(const Options& opt) {
    if (opt.config.empty()) throw ConfigError("config", "--config is required");
    const ParsedConfig parsed = load_config(opt.config);
    std::vector<ExperimentConfig> grid = expand_grid(parsed);
    const unsigned threads = resolve_threads(opt.threads);
    for (ExperimentConfig& c : grid) {
        if (opt.seed) c.seed = *opt.seed;
        c.threads = 1;
        c.validate();
    }
    const fs::path out = prepare_out(opt);
    const std::vector<SweepRow> rows = sweep(grid, {true, opt.sweep_learner, threads});

    std::vector<std::string> cols{"index"};
    for (const auto& [axis, values] : parsed.axes) cols.push_back(axis);
    for (const char* c : {"ok", "r", "gamma_tilde", "mean_align_b", "mean_align_c", "rate_slope", "rate_predicted",
                          "rate_r2", "mean_lyapunov", "err_norm", "curse_ratio", "error"}) {
        cols.emplace_back(c);
    }
    CsvTable t{"advshift.sweep/1", {{"version", ADVSHIFT_VERSION}, {"base_config", config_to_json(parsed.base).dump()}}, cols, {}};
    ordered_json jrows = ordered_json::array();
    for (const SweepRow& row : rows) {
        const ordered_json cj = config_to_json(row.config);
        std::vector<std::string> r{std::to_string(row.index)};
        for (const auto& [axis, values] : parsed.axes) {
            const auto& v = cj.contains(axis) ? cj[axis] : ordered_json(nullptr);
            r.push_back(v.is_number_float() ? fmt(v.get<double>()) : (v.is_string() ? v.get<std::string>() : v.dump()));
        }
        std::string err = row.ok ? row.rate_error : row.error;
        for (char& ch : err) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        r.push_back(row.ok ? "1" : "0");
        r.push_back(fmt(row.r));
        r.push_back(fmt(row.gamma_tilde));
        r.push_back(fmt(row.mean_align_b));
        r.push_back(fmt(row.mean_align_c));
        r.push_back(row.rate ? fmt(row.rate->slope) : "nan");
        r.push_back(row.rate ? fmt(row.rate->predicted) : "nan");
        r.push_back(row.rate ? fmt(row.rate->r2) : "nan");
        r.push_back(row.mean_lyapunov ? fmt(*row.mean_lyapunov) : "nan");
        r.push_back(row.learner ? fmt(row.learner->err_norm) : "nan");
        r.push_back(row.learner && row.learner->curse_ratio ? fmt(*row.learner->curse_ratio) : "nan");
        r.push_back(err);
        t.rows.push_back(std::move(r));
        jrows.push_back({{"index", row.index}, {"ok", row.ok}, {"config", cj}});
    }
    write_csv(out / "sweep.csv", t);
    ordered_json man;
    man["command"] = "sweep";
    man["version"] = ADVSHIFT_VERSION;
    man["rows"] = jrows;
    man["files"] = ordered_json::array({"sweep.csv"});
    write_json(out / "manifest.json", "advshift.manifest/1", man);
    std::size_t failed = 0;
    for (const SweepRow& row : rows) failed += row.ok ? 0 : 1;
    std::cout << "sweep: " << rows.size() << " configs, " << failed << " failed -> " << (out / "sweep.csv").string()
              << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial covariate shift simulator"};
    app.set_version_flag("--version", ADVSHIFT_VERSION);
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool config) {
        if (config) sub->add_option("--config", opt.config, "flat key = value config file");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--threads", opt.threads, "worker threads (ADVSHIFT_THREADS overrides)");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "run the particle dynamic and write trajectory.csv");
    add_common(simulate, true);
    CLI::App* verify = app.add_subcommand("verify", "run a property suite");
    verify->add_option("--suite", opt.suite, "lemmas, gradients, closed-form or envelopes")
        ->required()
        ->check(CLI::IsMember(suite_names()));
    verify->add_option("--seed", opt.seed, "suite seed");
    verify->add_option("--threads", opt.threads, "accepted for uniformity");
    verify->add_flag("--inject-sign-error", opt.inject_sign_error)->group("");
    CLI::App* reproduce = app.add_subcommand("reproduce", "write snapshot tables for fig1 or fig2");
    reproduce->add_option("--figure", opt.figure, "fig1 or fig2")->required()->check(CLI::IsMember({"fig1", "fig2"}));
    add_common(reproduce, false);
    CLI::App* rates = app.add_subcommand("rates", "fit the directional convergence rate");
    add_common(rates, true);
    CLI::App* learner = app.add_subcommand("learner", "play one shift/learn round");
    add_common(learner, true);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a grid of configs (sweep.<key> = v1, v2, ...)");
    add_common(sweep_cmd, true);
    sweep_cmd->add_flag("--learner", opt.sweep_learner, "also play the learner round per config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*simulate) return cmd_simulate(opt);
        if (*verify) return cmd_verify(opt);
        if (*reproduce) return cmd_reproduce(opt);
        if (*rates) return cmd_rates(opt);
        if (*learner) return cmd_learner(opt);
        if (*sweep_cmd) return cmd_sweep(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error (particle " << e.particle() << ", step " << e.step() << "): " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kConfigError;
}
