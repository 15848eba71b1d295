#include <doctest.h>

#include <cmath>

#include "advshift/errors.hpp"
#include "advshift/objectives.hpp"
#include "advshift/verify.hpp"

using namespace advshift;

TEST_CASE("sigmoid is stable and symmetric") {
    CHECK(sigmoid(0.0) == 0.5);
    for (double z : {-700.0, -40.0, -3.0, 0.1, 5.0, 40.0, 700.0}) {
        CHECK(std::isfinite(sigmoid(z)));
        CHECK(std::abs(sigmoid(z) + sigmoid(-z) - 1.0) <= 1e-15);
    }
    CHECK(sigmoid(-40.0) > 0.0);
    CHECK(sigmoid(-40.0) < 1e-17);
    CHECK(softplus(800.0) == doctest::Approx(800.0));
    CHECK(softplus(-800.0) >= 0.0);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(sigmoid_prime(0.0) == 0.25);
}

TEST_CASE("parse setting") {
    CHECK(parse_setting("regression") == Setting::Regression);
    CHECK(parse_setting("classification") == Setting::Classification);
    CHECK_THROWS_AS(parse_setting("ranking"), ConfigError);
}

TEST_CASE("model pair derived quantities") {
    const ModelPair m(Vec{1, 1}, Vec{1, 0});
    CHECK(m.residual() == Vec{0, 1});
    CHECK(m.delta_b() == Vec{0, 1});
    CHECK(m.r() == doctest::Approx(1.0));
    CHECK(m.gamma_tilde(0.25) == doctest::Approx(0.5));
    CHECK(m.scalar_eta(0.25) == doctest::Approx(0.25));
    REQUIRE(m.has_delta_c());
    const Vec& dc = m.delta_c();
    CHECK(std::abs(norm(dc) - 1.0) <= 1e-12);
    CHECK(std::abs(inner(dc, m.theta_star())) <= 1e-10);
}

TEST_CASE("degenerate pairs") {
    const ModelPair same(Vec{1, 2}, Vec{1, 2});
    CHECK_FALSE(same.has_delta_b());
    CHECK_THROWS_AS(same.delta_b(), DegenerateError);
    CHECK_THROWS_AS(same.delta_c(), DegenerateError);
    const ModelPair zero(Vec{1, 0}, Vec{0, 0});
    CHECK(zero.has_delta_b());
    CHECK_FALSE(zero.has_delta_c());
    // theta0 not orthogonal to the residual: no unit curse direction.
    const ModelPair skew(Vec{1, 0}, Vec{2, 1});
    CHECK_FALSE(skew.has_delta_c());
}

TEST_CASE("pointwise utility examples") {
    const ModelPair equal(Vec{1, 2}, Vec{1, 2});
    CHECK(pointwise_utility(equal, Setting::Regression, Vec{5, -3}) == 1.0);
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    CHECK(pointwise_utility(m, Setting::Regression, Vec{2, 7}) == doctest::Approx(5.0));
    const ModelPair c(Vec{1, 0}, Vec{2, 0});
    CHECK(pointwise_utility(c, Setting::Classification, Vec{0, 3}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gradient fixed points") {
    const ModelPair m(Vec{1, 0}, Vec{0, 0});
    CHECK(pointwise_gradient(m, Setting::Regression, Vec{0, 4}) == Vec{0, 0});
    const ModelPair c(Vec{1, 0, 0}, Vec{0, 1, 0});
    CHECK(pointwise_gradient(c, Setting::Classification, Vec{0, 0, 2}) == Vec{0, 0, 0});
}

TEST_CASE("classification gradient is odd in x") {
    const ModelPair m(Vec{0.3, -1.2, 0.5}, Vec{0.7, 0.1, -0.4});
    const Vec x{0.2, 0.9, -1.1};
    const Vec g = pointwise_gradient(m, Setting::Classification, x);
    const Vec h = pointwise_gradient(m, Setting::Classification, scaled(-1.0, x));
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(-h[i]).epsilon(1e-14));
}

TEST_CASE("accumulate_gradient in place equals the out-of-place gradient") {
    const ModelPair m(Vec{0.3, -1.2, 0.5}, Vec{0.7, 0.1, -0.4});
    for (Setting s : {Setting::Regression, Setting::Classification}) {
        Vec x{0.2, 0.9, -1.1};
        const Vec expected = add(x, scaled(0.3, pointwise_gradient(m, s, x)));
        accumulate_gradient(m, s, x, 0.3, x);
        for (std::size_t i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(expected[i]).epsilon(1e-15));
    }
}

TEST_CASE("finite-difference oracle accepts the analytic gradient and rejects a sign error") {
    CHECK(check_gradients(Setting::Regression, 200, 5).passed());
    CHECK(check_gradients(Setting::Classification, 200, 5).passed());
    auto flipped = [](const ModelPair& m, Setting s, ConstVecView x) { return scaled(-1.0, pointwise_gradient(m, s, x)); };
    const PropertyResult bad = check_gradients(Setting::Classification, 50, 5, flipped);
    CHECK(bad.failures == 50);
    CHECK_FALSE(bad.counterexample.empty());
}

TEST_CASE("sample response moments") {
    Stream rng(1, Domain::Response, 0);
    const Vec theta{1.0, 0.0};
    double sum = 0.0;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_response(Setting::Classification, theta, Vec{0.0, 5.0}, rng);
    CHECK(std::abs(sum / n - 0.5) <= 0.01);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = sample_response(Setting::Regression, theta, Vec{3.0, 1.0}, rng);
        s1 += y;
        s2 += y * y;
    }
    const double mean = s1 / n;
    CHECK(std::abs(mean - 3.0) <= 0.02);
    CHECK(std::abs(s2 / n - mean * mean - 1.0) <= 0.03);
    for (int i = 0; i < 1000; ++i) CHECK(sample_response(Setting::Classification, theta, Vec{40.0, 0.0}, rng) == 1.0);
}

TEST_CASE("best response") {
    const Subspace s({Vec{1, 0}}, 2);
    CHECK(best_response(Vec{1, 1}, s) == Vec{1, 0});
    const PropertyResult geo = check_best_response_geometry(100, 3);
    CHECK(geo.passed());
}

TEST_CASE("sample best response approaches the projection") {
    const Subspace s = haar_subspace(30, 10, 2);
    Vec theta(30);
    for (std::size_t i = 0; i < 30; ++i) theta[i] = 1.0 / double(i + 1);
    const Vec exact = best_response(theta, s);
    const Vec fit = sample_best_response(theta, s, 20000, 2);
    CHECK(norm(subtract(fit, exact)) < 0.05);
    // The fit lies in the subspace.
    CHECK(norm(subtract(project(fit, s), fit)) <= 1e-10);
    CHECK(sample_best_response(theta, s, 20000, 2) == fit);
}
