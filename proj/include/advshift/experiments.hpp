#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advshift/dynamics.hpp"
#include "advshift/learner.hpp"
#include "advshift/linalg.hpp"
#include "advshift/objectives.hpp"

namespace advshift {

enum class ThetaStarRule { Harmonic, Custom };
/// BestResponse: theta0 = Pi_s theta*. SampleFit: least-squares fit from
/// `fit_samples` noisy draws supported on s (a finite-sample best response).
enum class Theta0Rule { BestResponse, SampleFit };

struct ExperimentConfig {
    Setting setting = Setting::Regression;
    std::size_t d = 200;
    std::size_t subspace_rank = 100;
    ThetaStarRule theta_star_rule = ThetaStarRule::Harmonic;
    Vec custom_theta_star;
    /// Unset: SampleFit for regression, BestResponse for classification.
    std::optional<Theta0Rule> theta0_rule;
    std::size_t fit_samples = 1000;
    double gamma = 0.1;
    std::size_t n_particles = 200;
    long T = 40;
    long record_every = 5;
    /// Explicit snapshot times; overrides record_every when non-empty.
    std::vector<long> snapshots;
    std::uint64_t seed = 2023;
    double c = 6.0;
    double learner_eta = 0.5;
    int learner_steps = 1;
    ResponseMode learner_mode = ResponseMode::Sampled;
    unsigned threads = 1;

    Theta0Rule effective_theta0_rule() const;
    std::vector<long> snapshot_times() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Defaults per setting: regression gamma = 0.1 / learner eta = 1/2;
/// classification gamma = 0.25 / learner eta = 1.
ExperimentConfig default_config(Setting setting);

enum class Figure { Regression, Classification };
/// Figure presets: fig1 is regression, t = 0, 5, ..., 40 with gamma = 0.5;
/// fig2 is classification, t = 0, 25, ..., 200 with gamma = 0.25.
ExperimentConfig figure_config(Figure figure);

Vec harmonic_theta_star(std::size_t d);

struct ExperimentSetup {
    Subspace subspace;
    ModelPair model;
    ParticleEnsemble ensemble;
    std::vector<std::string> warnings;
};

/// Haar subspace, theta*, theta0 and n particles drawn as standard normals in
/// subspace coordinates, mapped through the basis and normalized.
ExperimentSetup build_setup(const ExperimentConfig& cfg);
/// Same, with caller-supplied initial particles.
ExperimentSetup build_setup(const ExperimentConfig& cfg, std::vector<Vec> initial_particles);

struct SnapshotRow {
    long t;
    std::size_t particle;
    double u;  ///< <x/|x|, theta*/|theta*|>
    double v;  ///< <x/|x|, e2>, e2 = delta_b orthogonalized against theta*
    double align_b;
    double align_c;
    bool stationary;
};

struct FigureData {
    ExperimentSetup setup;
    RunResult run;
    std::vector<SnapshotRow> rows;  ///< ordered by (t, particle)
};

FigureData reproduce_figure(const ExperimentConfig& cfg);
FigureData reproduce_figure(const ExperimentConfig& cfg, std::vector<Vec> initial_particles);

enum class RateModel { ExpDecay, PolyLog };

struct RateFit {
    RateModel model;
    double slope;
    double intercept;
    double r2;
    /// ExpDecay: analytic slope -2 log(1 + gamma~); PolyLog: -2.
    double predicted;
    std::size_t points;
    std::size_t closed_form_points = 0;  ///< regression points taken from the closed form
};

struct LineFit {
    double slope;
    double intercept;
    double r2;
};
/// Ordinary least squares y ~ slope x + intercept. Throws DegenerateError if x is constant.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Fits log(1 - align_b^2) against t for the regression dynamic. Values too
/// small to resolve from the simulated vectors come from the closed form,
/// seeded by the first record. Only the asymptotic regime (1 - align_b^2 <= 1e-2)
/// enters the fit; per-particle intercepts are pooled out.
RateFit fit_regression_rate(const std::vector<AlignmentRecord>& records, const ModelPair& m, double gamma);

/// Fits log(1 - align_c) against log t over the final decade of t, using
/// records at t >= min_t only. Records must span two decades of t.
RateFit fit_classification_rate(const std::vector<AlignmentRecord>& records, long min_t = 0);

/// First record time from which every non-stationary particle satisfies the
/// initial-condition assumption (particles with a < 0 are mirrored). nullopt if never.
std::optional<long> basin_entry_time(const std::vector<AlignmentRecord>& records, double r, double c);

struct SweepOptions {
    bool fit_rate = true;
    bool learner = false;
    unsigned threads = 1;
};

struct SweepRow {
    std::size_t index;
    ExperimentConfig config;
    bool ok = false;
    std::string error;
    double r = 0.0;
    double gamma_tilde = 0.0;
    double mean_align_b = 0.0;
    double mean_align_c = 0.0;
    std::optional<RateFit> rate;
    std::string rate_error;
    std::optional<double> mean_lyapunov;  ///< classification only
    std::optional<LearnerOutcome> learner;
};

/// One row per config, in input order; a failing config is recorded and the sweep continues.
std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& grid, const SweepOptions& options);

}  // namespace advshift
