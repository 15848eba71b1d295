#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advshift/dynamics.hpp"
#include "advshift/errors.hpp"
#include "advshift/experiments.hpp"
#include "advshift/verify.hpp"

using namespace advshift;

TEST_CASE("regression example: three steps from (1,1)") {
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    ParticleEnsemble ens({Vec{1, 1}}, 0.5);
    CHECK(m.gamma_tilde(0.5) == 1.0);
    for (int t = 0; t < 3; ++t) ens = step(std::move(ens), m, Setting::Regression);
    CHECK(ens.t() == 3);
    CHECK(ens.true_particle(0) == Vec{8, 1});
    const double expected = 8.0 / std::sqrt(65.0);
    CHECK(record_alignment(ens, m).particles[0].align_b == doctest::Approx(expected).epsilon(1e-15));
    const ClosedFormAlignment cf = regression_closed_form(Vec{1, 1}, m, 0.5, 3);
    CHECK(cf.align_b == doctest::Approx(0.992278).epsilon(1e-6));
    CHECK(regression_closed_form_state(Vec{1, 1}, m, 0.5, 3) == Vec{8, 1});
}

TEST_CASE("zero step and zero gradient leave particles unchanged") {
    const ModelPair m(Vec{1, 2}, Vec{0.5, 0});
    ParticleEnsemble ens({Vec{0.3, -0.7}, Vec{1, 1}}, 0.0);
    for (Setting s : {Setting::Regression, Setting::Classification}) {
        const ParticleEnsemble out = step(ens, m, s);
        CHECK(out.particle(0) == ens.particle(0));
        CHECK(out.particle(1) == ens.particle(1));
    }
    const ModelPair same(Vec{1, 2}, Vec{1, 2});
    const ParticleEnsemble out = step(ParticleEnsemble({Vec{0.3, -0.7}}, 0.7), same, Setting::Regression);
    CHECK(out.particle(0) == Vec{0.3, -0.7});
}

TEST_CASE("ensemble validation") {
    CHECK_THROWS_AS(ParticleEnsemble({Vec{1, 0}}, -0.1), ConfigError);
    CHECK_THROWS_AS(ParticleEnsemble({}, 0.1), DimensionError);
    CHECK_THROWS_AS(ParticleEnsemble({Vec{1, 0}, Vec{1}}, 0.1), DimensionError);
    CHECK_THROWS_AS(ParticleEnsemble({Vec{1, NAN}}, 0.1), NumericError);
}

TEST_CASE("non-finite update reports particle and step") {
    const ModelPair m(Vec{1e200, 0}, Vec{0, 0});
    ParticleEnsemble ens({Vec{0, 1}, Vec{1, 0}}, 1.0);
    try {
        ens = step(std::move(ens), m, Setting::Regression);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.particle() == 1);
        CHECK(e.step() == 1);
    }
}

TEST_CASE("run records schedule") {
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    const RunResult r0 = run(ParticleEnsemble({Vec{1, 1}}, 0.1), m, Setting::Regression, 0, 5);
    CHECK(r0.records.size() == 1);
    const RunResult r = run(ParticleEnsemble({Vec{1, 1}}, 0.1), m, Setting::Regression, 40, 5);
    REQUIRE(r.records.size() == 9);
    for (std::size_t k = 0; k < 9; ++k) CHECK(r.records[k].t == long(5 * k));
    const RunResult odd = run(ParticleEnsemble({Vec{1, 1}}, 0.1), m, Setting::Regression, 12, 5);
    CHECK(odd.records.back().t == 12);
    CHECK_THROWS_AS(run(ParticleEnsemble({Vec{1, 1}}, 0.1), m, Setting::Regression, 3, 0), ConfigError);
}

TEST_CASE("alignment helper") {
    CHECK(alignment(Vec{5, 0}, Vec{1, 0}) == 1.0);
    CHECK(alignment(Vec{0, 2}, Vec{1, 0}) == 0.0);
    CHECK(alignment(Vec{1, 1}, Vec{1, 0}) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(alignment(Vec{0, 0}, Vec{1, 0}), DegenerateError);
}

TEST_CASE("closed form edge cases") {
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    CHECK(regression_closed_form(Vec{1, 0}, m, 0.3, 0).align_b == 1.0);
    CHECK_THROWS_WITH_AS(regression_closed_form(Vec{0, 1}, m, 0.3, 5),
                         "degenerate initialization: alignment undefined", DegenerateError);
    // Monotone in T and finite far past double saturation.
    double prev = 0.0, prev_log = 0.0;
    for (long T : {0L, 1L, 10L, 100L, 1000L, 1000000L}) {
        const ClosedFormAlignment cf = regression_closed_form(Vec{0.01, 1}, m, 0.5, T);
        CHECK(cf.align_b >= prev);
        CHECK(std::isfinite(cf.log_sin2));
        if (T > 0) CHECK(cf.log_sin2 < prev_log);
        prev = cf.align_b;
        prev_log = cf.log_sin2;
    }
}

TEST_CASE("long regression runs rescale instead of overflowing") {
    const ModelPair m(Vec{1, 0, 0}, Vec{0, 0, 0});
    ParticleEnsemble ens({Vec{1e-3, 1, 2}}, 0.5);
    const RunResult r = run(ens, m, Setting::Regression, 2000, 500);
    const ParticleDiagnostics& p = r.records.back().particles[0];
    CHECK(std::isfinite(p.log_norm));
    CHECK(p.log_norm == doctest::Approx(2000 * std::log(2.0) + std::log(1e-3)).epsilon(1e-9));
    CHECK(p.align_b == 1.0);
    CHECK(p.sin2_b >= 0.0);
}

TEST_CASE("stationary particles are flagged and frozen") {
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    const RunResult r = run(ParticleEnsemble({Vec{0, 1}, Vec{1, 1}}, 0.5), m, Setting::Regression, 10, 5);
    CHECK(r.final_ensemble.stationary(0));
    CHECK_FALSE(r.final_ensemble.stationary(1));
    CHECK(r.final_ensemble.particle(0) == Vec{0, 1});
    for (const auto& rec : r.records) CHECK(rec.particles[0].stationary);
}

TEST_CASE("alignments stay in [0, 1]") {
    const ExperimentConfig cfg = figure_config(Figure::Classification);
    const FigureData f = reproduce_figure(cfg);
    for (const auto& rec : f.run.records) {
        for (const auto& p : rec.particles) {
            CHECK(p.align_b >= 0.0);
            CHECK(p.align_b <= 1.0);
            CHECK(p.align_c >= 0.0);
            CHECK(p.align_c <= 1.0);
        }
    }
}

TEST_CASE("results do not depend on thread count or particle order") {
    ExperimentConfig cfg = figure_config(Figure::Classification);
    cfg.n_particles = 37;
    const ExperimentSetup setup = build_setup(cfg);
    const RunResult one = run(setup.ensemble, setup.model, cfg.setting, 60, 20, 1);
    const RunResult four = run(setup.ensemble, setup.model, cfg.setting, 60, 20, 4);
    for (std::size_t i = 0; i < 37; ++i) CHECK(one.final_ensemble.particle(i) == four.final_ensemble.particle(i));

    std::vector<Vec> reversed;
    for (std::size_t i = 37; i-- > 0;) reversed.push_back(setup.ensemble.particle(i));
    const RunResult rev = run(ParticleEnsemble(reversed, cfg.gamma), setup.model, cfg.setting, 60, 20, 3);
    for (std::size_t i = 0; i < 37; ++i) CHECK(rev.final_ensemble.particle(36 - i) == one.final_ensemble.particle(i));
}

TEST_CASE("closed form, conservation and confinement properties") {
    CHECK(check_closed_form(30, 7).passed());
    CHECK(check_orthogonal_conservation(10, 7).passed());
    CHECK(check_confinement(10, 7).passed());
    CHECK(check_scalar_vector_consistency(2000, 7).passed());
}
