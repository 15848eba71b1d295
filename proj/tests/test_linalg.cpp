#include <doctest.h>

#include <cmath>

#include "advshift/errors.hpp"
#include "advshift/linalg.hpp"
#include "advshift/rng.hpp"

using namespace advshift;

namespace {

Vec randvec(Stream& rng, std::size_t d) {
    Vec v(d);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("inner product examples") {
    CHECK(inner(Vec{1, 0}, Vec{0, 1}) == 0.0);
    CHECK(inner(Vec{1, 2}, Vec{3, 4}) == 11.0);
    CHECK(inner(Vec{3, 4}, Vec{3, 4}) == 25.0);
    CHECK(norm(Vec{3, 4}) == 5.0);
    CHECK_THROWS_AS(inner(Vec{1, 2}, Vec{1, 2, 3}), DimensionError);
}

TEST_CASE("norm survives overflow and underflow") {
    CHECK(norm(Vec{3e200, 4e200}) == doctest::Approx(5e200));
    CHECK(norm(Vec{3e-200, 4e-200}) == doctest::Approx(5e-200));
    CHECK(norm(Vec{0, 0}) == 0.0);
}

TEST_CASE("Cauchy-Schwarz on random inputs") {
    Stream rng(3, 1);
    for (int k = 0; k < 200; ++k) {
        const Vec u = randvec(rng, 17), v = randvec(rng, 17);
        CHECK(std::abs(inner(u, v)) <= norm(u) * norm(v) * (1 + 1e-15));
    }
}

TEST_CASE("normalize") {
    const Vec v = normalize(Vec{3, 4});
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    const Vec u = normalize(v);
    CHECK(std::abs(norm(u) - 1.0) <= 1e-12);
    CHECK_THROWS_AS(normalize(Vec{0, 0}), DegenerateError);
}

TEST_CASE("axis projections") {
    const Subspace s({Vec{1, 0}}, 2);
    CHECK(project(Vec{1, 1}, s) == Vec{1, 0});
    CHECK(project(Vec{1, 0}, s) == Vec{1, 0});
    const Subspace z({Vec{0, 0, 1}}, 3);
    CHECK(project(Vec{2, 0, 3}, z) == Vec{0, 0, 3});
    CHECK_THROWS_AS(project(Vec{1, 2, 3}, s), DimensionError);
}

TEST_CASE("subspace rejects a non-orthonormal basis") {
    CHECK_THROWS_AS(Subspace({Vec{1, 0}, Vec{1, 1}}, 2), DimensionError);
    CHECK_THROWS_AS(Subspace({Vec{1, 0, 0}}, 2), DimensionError);
}

TEST_CASE("haar subspace is orthonormal and deterministic") {
    const Subspace s = haar_subspace(200, 100, 11);
    CHECK(s.rank() == 100);
    CHECK(s.gram_deviation() <= 1e-10);
    const Subspace t = haar_subspace(200, 100, 11);
    for (std::size_t k = 0; k < s.rank(); ++k) CHECK(s.basis()[k] == t.basis()[k]);
    const Subspace other = haar_subspace(200, 100, 12);
    CHECK(other.basis()[0] != s.basis()[0]);
    CHECK_THROWS_AS(haar_subspace(5, 6, 1), DimensionError);
}

TEST_CASE("full-rank subspace leaves vectors unchanged") {
    const Subspace s = haar_subspace(5, 5, 4);
    Stream rng(4, 2);
    const Vec v = randvec(rng, 5);
    const Vec p = project(v, s);
    for (std::size_t i = 0; i < 5; ++i) CHECK(p[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("projection is idempotent with an orthogonal residual") {
    const Subspace s = haar_subspace(40, 13, 9);
    Stream rng(9, 3);
    for (int k = 0; k < 50; ++k) {
        const Vec v = randvec(rng, 40);
        const Vec p = project(v, s);
        const Vec pp = project(p, s);
        for (std::size_t i = 0; i < 40; ++i) CHECK(std::abs(pp[i] - p[i]) <= 1e-10);
        const Vec res = subtract(v, p);
        for (const Vec& b : s.basis()) CHECK(std::abs(inner(res, b)) <= 1e-10);
    }
}

TEST_CASE("thin QR reproduces the columns") {
    Stream rng(5, 5);
    std::vector<Vec> cols{randvec(rng, 6), randvec(rng, 6), randvec(rng, 6)};
    const ThinQR qr = thin_qr(cols);
    for (std::size_t j = 0; j < 3; ++j) {
        Vec rebuilt(6, 0.0);
        for (std::size_t i = 0; i <= j; ++i) axpy(qr.r[i][j], qr.q[i], rebuilt);
        for (std::size_t k = 0; k < 6; ++k) CHECK(rebuilt[k] == doctest::Approx(cols[j][k]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(thin_qr({Vec{1, 2}, Vec{2, 4}}), DegenerateError);
}

TEST_CASE("cholesky solve") {
    const Vec x = cholesky_solve({{4, 2}, {2, 3}}, {2, 5});
    CHECK(x[0] == doctest::Approx(-0.5));
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK_THROWS_AS(cholesky_solve({{1, 2}, {2, 1}}, {1, 1}), DegenerateError);
}
