#include "advshift/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "advshift/errors.hpp"
#include "advshift/parallel.hpp"
#include "advshift/rng.hpp"
#include "advshift/scalar.hpp"

namespace advshift {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<long> every(long T, long step) {
    std::vector<long> out;
    for (long t = 0; t < T; t += step) out.push_back(t);
    out.push_back(T);
    return out;
}

// Least squares with a separate intercept per group: y_gj ~ slope x_gj + c_g.
struct Pooled {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y;
    std::size_t points() const {
        std::size_t n = 0;
        for (const auto& g : x) n += g.size();
        return n;
    }
};

LineFit fit_pooled(const Pooled& data, double& mean_intercept) {
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    double icpt = 0.0;
    std::size_t groups = 0;
    for (std::size_t g = 0; g < data.x.size(); ++g) {
        const auto& xs = data.x[g];
        const auto& ys = data.y[g];
        if (xs.size() < 2) continue;
        double mx = 0.0, my = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            mx += xs[j];
            my += ys[j];
        }
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        for (std::size_t j = 0; j < xs.size(); ++j) {
            sxy += (xs[j] - mx) * (ys[j] - my);
            sxx += (xs[j] - mx) * (xs[j] - mx);
            syy += (ys[j] - my) * (ys[j] - my);
        }
        ++groups;
    }
    if (groups == 0 || !(sxx > 0.0)) throw DegenerateError("rate fit: no variation in t");
    if (!(syy > 0.0)) throw DegenerateError("rate fit: alignment is constant");
    const double slope = sxy / sxx;
    for (std::size_t g = 0; g < data.x.size(); ++g) {
        const auto& xs = data.x[g];
        const auto& ys = data.y[g];
        if (xs.size() < 2) continue;
        double c = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) c += ys[j] - slope * xs[j];
        icpt += c / static_cast<double>(xs.size());
    }
    mean_intercept = icpt / static_cast<double>(groups);
    const double ss_res = std::max(0.0, syy - slope * sxy);
    const double r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return {slope, mean_intercept, r2};
}

bool usable(const ParticleDiagnostics& p, double align) { return !p.stationary && std::isfinite(align); }

double log_one_minus_align_c(const ParticleDiagnostics& p) {
    // 1 - a = (1 - a^2) / (1 + a), keeps precision near a = 1.
    if (p.sin2_c > 0.0 && std::isfinite(p.sin2_c)) return std::log(p.sin2_c / (1.0 + p.align_c));
    return std::log1p(-p.align_c);
}

}  // namespace

Theta0Rule ExperimentConfig::effective_theta0_rule() const {
    if (theta0_rule) return *theta0_rule;
    return setting == Setting::Regression ? Theta0Rule::SampleFit : Theta0Rule::BestResponse;
}

std::vector<long> ExperimentConfig::snapshot_times() const {
    if (!snapshots.empty()) return snapshots;
    return every(T, record_every);
}

void ExperimentConfig::validate() const {
    if (d < 1) throw ConfigError("d", "must be at least 1");
    if (subspace_rank < 1 || subspace_rank > d) throw ConfigError("subspace_rank", "must be in [1, d]");
    if (!std::isfinite(gamma) || gamma < 0.0) throw ConfigError("gamma", "step size must be positive");
    if (n_particles < 1) throw ConfigError("n_particles", "must be at least 1");
    if (T < 0) throw ConfigError("T", "must be non-negative");
    if (record_every < 1) throw ConfigError("record_every", "must be at least 1");
    if (!std::is_sorted(snapshots.begin(), snapshots.end()) ||
        std::adjacent_find(snapshots.begin(), snapshots.end()) != snapshots.end()) {
        throw ConfigError("snapshots", "must be strictly increasing");
    }
    for (long t : snapshots) {
        if (t < 0 || t > T) throw ConfigError("snapshots", "must lie within [0, T]");
    }
    if (theta_star_rule == ThetaStarRule::Custom) {
        if (custom_theta_star.size() != d) throw ConfigError("theta_star", "custom theta* must have d entries");
        if (!all_finite(custom_theta_star)) throw ConfigError("theta_star", "entries must be finite");
    }
    if (effective_theta0_rule() == Theta0Rule::SampleFit && fit_samples <= subspace_rank) {
        throw ConfigError("fit_samples", "must exceed subspace_rank");
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("c", "must be positive");
    if (!(learner_eta > 0.0) || !std::isfinite(learner_eta)) throw ConfigError("learner_eta", "must be positive");
    if (learner_steps < 1) throw ConfigError("learner_steps", "must be at least 1");
    if (threads < 1) throw ConfigError("threads", "must be at least 1");
}

ExperimentConfig default_config(Setting setting) {
    ExperimentConfig cfg;
    cfg.setting = setting;
    if (setting == Setting::Regression) {
        cfg.gamma = 0.1;
        cfg.T = 40;
        cfg.record_every = 5;
        cfg.learner_eta = 0.5;
    } else {
        cfg.gamma = 0.25;
        cfg.T = 200;
        cfg.record_every = 25;
        cfg.learner_eta = 1.0;
    }
    return cfg;
}

ExperimentConfig figure_config(Figure figure) {
    if (figure == Figure::Regression) {
        ExperimentConfig cfg = default_config(Setting::Regression);
        cfg.gamma = 0.5;
        cfg.snapshots = every(40, 5);
        return cfg;
    }
    ExperimentConfig cfg = default_config(Setting::Classification);
    cfg.snapshots = every(200, 25);
    return cfg;
}

Vec harmonic_theta_star(std::size_t d) {
    Vec v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
    return v;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
    cfg.validate();
    Subspace s = haar_subspace(cfg.d, cfg.subspace_rank, cfg.seed);
    std::vector<Vec> particles(cfg.n_particles);
    for (std::size_t i = 0; i < cfg.n_particles; ++i) {
        Stream rng(cfg.seed, Domain::Particle, i);
        Vec z(cfg.subspace_rank);
        for (double& v : z) v = rng.normal();
        particles[i] = normalize(s.embed(z));
    }
    return build_setup(cfg, std::move(particles));
}

ExperimentSetup build_setup(const ExperimentConfig& cfg, std::vector<Vec> initial_particles) {
    cfg.validate();
    if (initial_particles.size() != cfg.n_particles) {
        throw ConfigError("n_particles", "does not match the number of initial particles");
    }
    Subspace s = haar_subspace(cfg.d, cfg.subspace_rank, cfg.seed);
    Vec theta_star = cfg.theta_star_rule == ThetaStarRule::Harmonic ? harmonic_theta_star(cfg.d) : cfg.custom_theta_star;
    Vec theta0 = cfg.effective_theta0_rule() == Theta0Rule::BestResponse
                     ? best_response(theta_star, s)
                     : sample_best_response(theta_star, s, cfg.fit_samples, cfg.seed);
    ModelPair m(std::move(theta_star), std::move(theta0));
    std::vector<std::string> warnings;
    if (cfg.setting == Setting::Classification) {
        if (!m.has_delta_c()) {
            warnings.push_back("theta0 is not orthogonal to theta* - theta0; align_c is undefined");
        } else {
            const double eta_eff = m.scalar_eta(cfg.gamma) * (1.0 + m.r() + 1.0 / cfg.c);
            if (eta_eff >= 0.5) {
                warnings.push_back("effective step eta (1 + r + 1/c) = " + std::to_string(eta_eff) +
                                   " is not below 1/2; the envelope preservation guarantee does not apply");
            }
        }
    }
    ParticleEnsemble ens(std::move(initial_particles), cfg.gamma);
    return {std::move(s), std::move(m), std::move(ens), std::move(warnings)};
}

FigureData reproduce_figure(const ExperimentConfig& cfg) {
    ExperimentSetup setup = build_setup(cfg);
    std::vector<Vec> x0;
    x0.reserve(setup.ensemble.size());
    for (std::size_t i = 0; i < setup.ensemble.size(); ++i) x0.push_back(setup.ensemble.particle(i));
    return reproduce_figure(cfg, std::move(x0));
}

FigureData reproduce_figure(const ExperimentConfig& cfg, std::vector<Vec> initial_particles) {
    ExperimentSetup setup = build_setup(cfg, std::move(initial_particles));
    const ModelPair& m = setup.model;
    const Vec e1 = normalize(m.theta_star());
    Vec e2 = m.delta_b();
    axpy(-inner(e2, e1), e1, e2);
    e2 = normalize(e2);

    std::vector<SnapshotRow> rows;
    auto observe = [&](const ParticleEnsemble& ens) {
        for (std::size_t i = 0; i < ens.size(); ++i) {
            const Vec& x = ens.particle(i);
            const double xn = norm(x);
            const double u = xn > 0.0 ? inner(x, e1) / xn : kNaN;
            const double v = xn > 0.0 ? inner(x, e2) / xn : kNaN;
            rows.push_back({ens.t(), i, u, v, kNaN, kNaN, ens.stationary(i)});
        }
    };
    RunResult run = run_snapshots(setup.ensemble, m, cfg.setting, cfg.snapshot_times(), cfg.threads, observe);
    std::size_t k = 0;
    for (const AlignmentRecord& rec : run.records) {
        for (const ParticleDiagnostics& p : rec.particles) {
            rows[k].align_b = p.align_b;
            rows[k].align_c = p.align_c;
            ++k;
        }
    }
    return {std::move(setup), std::move(run), std::move(rows)};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("fit_line: x and y differ in length");
    Pooled p{{x}, {y}};
    double icpt = 0.0;
    return fit_pooled(p, icpt);
}

RateFit fit_regression_rate(const std::vector<AlignmentRecord>& records, const ModelPair& m, double gamma) {
    // Simulated sin^2 carries absolute error ~1e-32 from the residual
    // subtraction; below this floor the closed form takes over.
    constexpr double kResolved = 1e-20;
    constexpr double kAsymptotic = 1e-2;
    if (records.empty()) throw DegenerateError("rate fit: no records");
    const double log_growth = std::log1p(m.gamma_tilde(gamma));
    const std::size_t n = records.front().particles.size();
    Pooled data;
    data.x.resize(n);
    data.y.resize(n);
    std::size_t substituted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const ParticleDiagnostics& first = records.front().particles[i];
        if (!usable(first, first.align_b) || !(first.align_b > 0.0)) continue;
        // ratio = |perp|^2 / <x, delta_b>^2 shrinks by (1 + gamma~)^2 per step.
        const double log_ratio0 = std::log(first.sin2_b) - 2.0 * std::log(first.align_b);
        for (const AlignmentRecord& rec : records) {
            if (rec.particles.size() != n) throw DimensionError("rate fit: records differ in particle count");
            const ParticleDiagnostics& p = rec.particles[i];
            if (!usable(p, p.align_b)) continue;
            double y;
            bool from_closed_form = false;
            if (p.sin2_b >= kResolved) {
                y = std::log(p.sin2_b);
            } else {
                if (!std::isfinite(log_ratio0)) continue;
                const double lr = log_ratio0 - 2.0 * static_cast<double>(rec.t - records.front().t) * log_growth;
                y = lr - std::log1p(std::exp(lr));
                from_closed_form = true;
            }
            if (y > std::log(kAsymptotic)) continue;
            substituted += from_closed_form ? 1 : 0;
            data.x[i].push_back(static_cast<double>(rec.t));
            data.y[i].push_back(y);
        }
    }
    if (data.points() < 5) throw DegenerateError("rate fit: fewer than 5 records in the asymptotic regime");
    double icpt = 0.0;
    const LineFit f = fit_pooled(data, icpt);
    return {RateModel::ExpDecay, f.slope, f.intercept, f.r2, -2.0 * log_growth, data.points(), substituted};
}

RateFit fit_classification_rate(const std::vector<AlignmentRecord>& records, long min_t) {
    long t_first = -1, t_last = -1;
    for (const AlignmentRecord& rec : records) {
        if (rec.t <= 0) continue;
        if (t_first < 0) t_first = rec.t;
        t_last = std::max(t_last, rec.t);
    }
    if (t_first < 0 || static_cast<double>(t_last) < 100.0 * static_cast<double>(t_first)) {
        throw DegenerateError("rate fit: records must span at least two decades of t");
    }
    const double lo = std::max(static_cast<double>(min_t), static_cast<double>(t_last) / 10.0);
    const std::size_t n = records.front().particles.size();
    Pooled data;
    data.x.resize(n);
    data.y.resize(n);
    for (const AlignmentRecord& rec : records) {
        if (rec.t <= 0 || static_cast<double>(rec.t) < lo) continue;
        if (rec.particles.size() != n) throw DimensionError("rate fit: records differ in particle count");
        for (std::size_t i = 0; i < n; ++i) {
            const ParticleDiagnostics& p = rec.particles[i];
            if (!usable(p, p.align_c)) continue;
            const double y = log_one_minus_align_c(p);
            if (!std::isfinite(y)) continue;
            data.x[i].push_back(std::log(static_cast<double>(rec.t)));
            data.y[i].push_back(y);
        }
    }
    if (data.points() < 3) throw DegenerateError("rate fit: fewer than 3 usable records in the final decade");
    double icpt = 0.0;
    const LineFit f = fit_pooled(data, icpt);
    return {RateModel::PolyLog, f.slope, f.intercept, f.r2, -2.0, data.points()};
}

std::optional<long> basin_entry_time(const std::vector<AlignmentRecord>& records, double r, double c) {
    for (const AlignmentRecord& rec : records) {
        bool all = true;
        for (const ParticleDiagnostics& p : rec.particles) {
            if (p.stationary) continue;
            const double sign = p.a < 0.0 ? -1.0 : 1.0;
            if (!check_assumption(sign * p.a, sign * p.b, r, c).ok) {
                all = false;
                break;
            }
        }
        if (all) return rec.t;
    }
    return std::nullopt;
}

std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& grid, const SweepOptions& options) {
    if (grid.empty()) throw ConfigError("sweep", "grid must contain at least one config");
    std::vector<SweepRow> rows(grid.size());
    const bool outer_parallel = options.threads > 1 && grid.size() > 1;
    parallel_for(grid.size(), outer_parallel ? options.threads : 1u, [&](std::size_t k) {
        SweepRow& row = rows[k];
        row.index = k;
        row.config = grid[k];
        try {
            const ExperimentConfig& cfg = grid[k];
            ExperimentSetup setup = build_setup(cfg);
            const ModelPair& m = setup.model;
            const unsigned inner_threads = outer_parallel ? 1u : std::max(options.threads, cfg.threads);
            RunResult run = run_snapshots(setup.ensemble, m, cfg.setting, cfg.snapshot_times(), inner_threads);
            row.r = m.theta0_norm() > 0.0 ? m.r() : kNaN;
            row.gamma_tilde = m.gamma_tilde(cfg.gamma);

            double sb = 0.0, sc = 0.0;
            std::size_t nb = 0, nc = 0;
            for (const ParticleDiagnostics& p : run.records.back().particles) {
                if (std::isfinite(p.align_b)) sb += p.align_b, ++nb;
                if (std::isfinite(p.align_c)) sc += p.align_c, ++nc;
            }
            row.mean_align_b = nb ? sb / static_cast<double>(nb) : kNaN;
            row.mean_align_c = nc ? sc / static_cast<double>(nc) : kNaN;

            if (options.fit_rate) {
                try {
                    if (cfg.setting == Setting::Regression) {
                        row.rate = fit_regression_rate(run.records, m, cfg.gamma);
                    } else {
                        const auto t0 = basin_entry_time(run.records, m.r(), cfg.c);
                        if (!t0) throw DegenerateError("rate fit: particles never reach the assumption basin");
                        row.rate = fit_classification_rate(run.records, *t0);
                    }
                } catch (const std::exception& e) {
                    row.rate_error = e.what();
                }
            }
            if (cfg.setting == Setting::Classification) {
                double sl = 0.0;
                std::size_t nl = 0;
                for (const ParticleDiagnostics& p : run.records.back().particles) {
                    if (p.stationary) continue;
                    const double sign = p.a < 0.0 ? -1.0 : 1.0;
                    if (auto L = lyapunov(sign * p.a, sign * p.b); L && std::isfinite(*L)) sl += *L, ++nl;
                }
                if (nl) row.mean_lyapunov = sl / static_cast<double>(nl);
            }
            if (options.learner) {
                row.learner = respond(m, cfg.setting, run.final_ensemble,
                                      {cfg.learner_eta, cfg.learner_steps, cfg.seed, cfg.learner_mode});
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    });
    return rows;
}

}  // namespace advshift
