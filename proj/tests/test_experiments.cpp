#include <doctest.h>

#include <cmath>

#include "advshift/errors.hpp"
#include "advshift/experiments.hpp"

using namespace advshift;

namespace {

// Records whose 1 - align_c follows `shape(t)` exactly.
std::vector<AlignmentRecord> synthetic_classification(const std::vector<long>& times, double (*shape)(double)) {
    std::vector<AlignmentRecord> recs;
    for (long t : times) {
        const double gap = shape(static_cast<double>(t));
        ParticleDiagnostics p{NAN, 1.0 - gap, NAN, gap * (2.0 - gap), 10.0, -12.0, 0.0, false};
        recs.push_back({t, {p}});
    }
    return recs;
}

std::vector<long> log_times(double lo, double hi, int per_decade) {
    std::vector<long> out;
    const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
    for (int k = 0; k <= n; ++k) {
        const long t = std::lround(lo * std::pow(10.0, double(k) / per_decade));
        if (out.empty() || t > out.back()) out.push_back(t);
    }
    return out;
}

}  // namespace

TEST_CASE("harmonic theta*") {
    const Vec v = harmonic_theta_star(200);
    CHECK(v.size() == 200);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.5);
    CHECK(v[199] == doctest::Approx(1.0 / 200));
}

TEST_CASE("config validation names the field") {
    ExperimentConfig cfg = default_config(Setting::Regression);
    CHECK_NOTHROW(cfg.validate());
    auto field_of = [](const ExperimentConfig& c) {
        try {
            c.validate();
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string();
    };
    ExperimentConfig bad = cfg;
    bad.gamma = -1;
    CHECK(field_of(bad) == "gamma");
    bad = cfg;
    bad.subspace_rank = 300;
    CHECK(field_of(bad) == "subspace_rank");
    bad = cfg;
    bad.snapshots = {0, 10, 5};
    CHECK(field_of(bad) == "snapshots");
    bad = cfg;
    bad.snapshots = {0, 50};
    CHECK(field_of(bad) == "snapshots");
    bad = cfg;
    bad.theta_star_rule = ThetaStarRule::Custom;
    bad.custom_theta_star = {1, 2};
    CHECK(field_of(bad) == "theta_star");
    bad = cfg;
    bad.fit_samples = 50;
    CHECK(field_of(bad) == "fit_samples");
}

TEST_CASE("figure schedules and defaults") {
    const ExperimentConfig f1 = figure_config(Figure::Regression);
    CHECK(f1.snapshot_times() == std::vector<long>{0, 5, 10, 15, 20, 25, 30, 35, 40});
    CHECK(f1.effective_theta0_rule() == Theta0Rule::SampleFit);
    const ExperimentConfig f2 = figure_config(Figure::Classification);
    CHECK(f2.snapshot_times() == std::vector<long>{0, 25, 50, 75, 100, 125, 150, 175, 200});
    CHECK(f2.effective_theta0_rule() == Theta0Rule::BestResponse);
    CHECK(default_config(Setting::Classification).learner_eta == 1.0);
    CHECK(default_config(Setting::Regression).learner_eta == 0.5);
}

TEST_CASE("setup geometry") {
    const ExperimentSetup s = build_setup(figure_config(Figure::Classification));
    CHECK(s.ensemble.size() == 200);
    CHECK(s.subspace.gram_deviation() <= 1e-10);
    CHECK(std::abs(s.model.q()) <= 1e-10);
    for (std::size_t i = 0; i < s.ensemble.size(); ++i) {
        const Vec& x = s.ensemble.particle(i);
        CHECK(std::abs(norm(x) - 1.0) <= 1e-12);
        CHECK(norm(subtract(project(x, s.subspace), x)) <= 1e-10);
    }
    CHECK(s.warnings.empty());
    ExperimentConfig hot = figure_config(Figure::Classification);
    hot.gamma = 2.0;
    CHECK_FALSE(build_setup(hot).warnings.empty());
}

TEST_CASE("figure tables are deterministic") {
    const ExperimentConfig cfg = figure_config(Figure::Regression);
    const FigureData a = reproduce_figure(cfg);
    const FigureData b = reproduce_figure(cfg);
    REQUIRE(a.rows.size() == 9 * 200);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].t == b.rows[k].t);
        CHECK(a.rows[k].u == b.rows[k].u);
        CHECK(a.rows[k].v == b.rows[k].v);
        CHECK(a.rows[k].align_b == b.rows[k].align_b);
    }
    // Points lie in the unit disk of the plane.
    for (const SnapshotRow& r : a.rows) CHECK(r.u * r.u + r.v * r.v <= 1.0 + 1e-12);
}

TEST_CASE("single particle orthogonal to the residual stays put") {
    ExperimentConfig cfg = figure_config(Figure::Regression);
    cfg.n_particles = 1;
    const ExperimentSetup s = build_setup(cfg);
    Vec x = s.ensemble.particle(0);
    const Vec& db = s.model.delta_b();
    axpy(-inner(x, db), db, x);
    const FigureData f = reproduce_figure(cfg, {normalize(x)});
    REQUIRE(f.rows.size() == 9);
    for (const SnapshotRow& r : f.rows) {
        CHECK(r.stationary);
        CHECK(r.u == f.rows[0].u);
        CHECK(r.v == f.rows[0].v);
    }
}

TEST_CASE("classification component outside the model plane is constant") {
    const ExperimentConfig cfg = figure_config(Figure::Classification);
    const FigureData f = reproduce_figure(cfg);
    const ModelPair& m = f.setup.model;
    const Vec e1 = normalize(m.theta0());
    const Vec e2 = normalize(m.residual());
    auto outside = [&](const Vec& x) {
        Vec y = x;
        axpy(-inner(y, e1), e1, y);
        axpy(-inner(y, e2), e2, y);
        return norm(y);
    };
    for (std::size_t i = 0; i < 10; ++i) {
        const double before = outside(f.setup.ensemble.particle(i));
        const double after = outside(f.run.final_ensemble.particle(i));
        CHECK(std::abs(after - before) <= 1e-9);
    }
}

TEST_CASE("regression rate fit recovers the closed-form exponent") {
    ExperimentConfig cfg = default_config(Setting::Regression);
    cfg.n_particles = 20;
    const ExperimentSetup s = build_setup(cfg);
    for (double gt : {0.2, 1.0}) {
        const double gamma = gt / (2.0 * s.model.residual_norm() * s.model.residual_norm());
        // Records built from the closed form alone.
        std::vector<AlignmentRecord> recs;
        for (long t = 0; t <= 200; t += 2) {
            AlignmentRecord rec{t, {}};
            for (std::size_t i = 0; i < s.ensemble.size(); ++i) {
                const ClosedFormAlignment cf = regression_closed_form(s.ensemble.particle(i), s.model, gamma, t);
                rec.particles.push_back({cf.align_b, NAN, std::exp(cf.log_sin2), NAN, 0, 0, 0, false});
            }
            recs.push_back(std::move(rec));
        }
        const RateFit f = fit_regression_rate(recs, s.model, gamma);
        CHECK(f.model == RateModel::ExpDecay);
        CHECK(f.predicted == doctest::Approx(-2.0 * std::log(1.0 + gt)));
        CHECK(std::abs(f.slope / f.predicted - 1.0) <= 0.01);
        CHECK(f.r2 >= 0.999);
    }
}

TEST_CASE("regression rate fit rejects degenerate input") {
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    std::vector<AlignmentRecord> recs;
    for (long t = 0; t < 10; ++t) recs.push_back({t, {{0.999, NAN, 1e-3, NAN, 0, 0, 0, false}}});
    CHECK_THROWS_AS(fit_regression_rate(recs, m, 0.5), DegenerateError);
    CHECK_THROWS_AS(fit_regression_rate({}, m, 0.5), DegenerateError);
}

TEST_CASE("classification rate fit on synthetic shapes") {
    const auto times = log_times(10, 1e5, 20);
    const RateFit exact = fit_classification_rate(synthetic_classification(times, [](double t) { return 1.0 / (t * t); }));
    CHECK(exact.model == RateModel::PolyLog);
    CHECK(std::abs(exact.slope + 2.0) <= 1e-6);
    const auto later = log_times(1e3, 1e5, 20);
    const RateFit shaped = fit_classification_rate(
        synthetic_classification(later, [](double t) { return std::log(t) * std::log(t) / (t * t); }));
    CHECK(shaped.slope > -2.0);
    CHECK(shaped.slope < -1.7);
    CHECK_THROWS_AS(fit_classification_rate(synthetic_classification(log_times(10, 500, 10), [](double t) { return 1 / t; })),
                    DegenerateError);
}

TEST_CASE("basin entry uses mirrored particles") {
    ParticleDiagnostics in{NAN, NAN, NAN, NAN, 10.0, -12.6, 0, false};
    ParticleDiagnostics mirrored{NAN, NAN, NAN, NAN, -10.0, 12.6, 0, false};
    ParticleDiagnostics out{NAN, NAN, NAN, NAN, 1.0, -2.0, 0, false};
    CHECK(basin_entry_time({{0, {in, out}}, {5, {in, mirrored}}}, 1.0, 5.0) == 5L);
    CHECK_FALSE(basin_entry_time({{0, {out}}}, 1.0, 5.0).has_value());
}

TEST_CASE("sweep rows") {
    ExperimentConfig cfg = default_config(Setting::Regression);
    cfg.n_particles = 20;
    cfg.T = 60;
    const auto single = sweep({cfg}, {});
    REQUIRE(single.size() == 1);
    CHECK(single[0].ok);
    const ExperimentSetup s = build_setup(cfg);
    const RunResult direct = run_snapshots(s.ensemble, s.model, cfg.setting, cfg.snapshot_times());
    double mean = 0.0;
    for (const auto& p : direct.records.back().particles) mean += p.align_b / 20.0;
    CHECK(single[0].mean_align_b == doctest::Approx(mean).epsilon(1e-15));

    // Fitted rate grows with gamma, matching the analytic constant.
    std::vector<ExperimentConfig> grid;
    for (double g : {0.1, 0.2, 0.4}) {
        ExperimentConfig c = cfg;
        c.gamma = g;
        c.T = 150;
        c.record_every = 1;
        grid.push_back(c);
    }
    ExperimentConfig broken = cfg;
    broken.subspace_rank = 500;
    grid.push_back(broken);
    const auto rows = sweep(grid, {true, false, 2});
    REQUIRE(rows.size() == 4);
    double prev = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        REQUIRE(rows[k].ok);
        REQUIRE(rows[k].rate.has_value());
        const double c = -rows[k].rate->slope;
        CHECK(c > prev);
        CHECK(c == doctest::Approx(2.0 * std::log1p(rows[k].gamma_tilde)).epsilon(0.01));
        prev = c;
    }
    CHECK_FALSE(rows[3].ok);
    CHECK(rows[3].error.find("subspace_rank") != std::string::npos);
    CHECK_THROWS_AS(sweep({}, {}), ConfigError);
}

TEST_CASE("classification sweep reports the Lyapunov plateau") {
    ExperimentConfig cfg = figure_config(Figure::Classification);
    cfg.n_particles = 10;
    cfg.snapshots.clear();
    cfg.T = 3000;
    cfg.record_every = 100;
    std::vector<ExperimentConfig> grid;
    for (std::size_t rank : {60, 100, 140}) {
        ExperimentConfig c = cfg;
        c.subspace_rank = rank;
        grid.push_back(c);
    }
    const auto rows = sweep(grid, {false, true, 1});
    for (const SweepRow& row : rows) {
        REQUIRE(row.ok);
        REQUIRE(row.mean_lyapunov.has_value());
        // The plateau sits between 1/(1 + r) and 1.
        CHECK(*row.mean_lyapunov >= 1.0 / (1.0 + row.r) - 1e-3);
        CHECK(*row.mean_lyapunov < 1.0);
        REQUIRE(row.learner.has_value());
        REQUIRE(row.learner->curse_ratio.has_value());
    }
}
