#include "advshift/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advshift/errors.hpp"
#include "advshift/rng.hpp"

namespace advshift {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw DimensionError(std::string(op) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                             std::to_string(b) + ")");
    }
}

}  // namespace

double inner(ConstVecView u, ConstVecView v) {
    require_same_dim(u.size(), v.size(), "inner");
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
    return sum;
}

double norm(ConstVecView v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    if (std::isfinite(sum) && sum > 1e-280) return std::sqrt(sum);
    // Rescaled fallback for sums that overflow or underflow.
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    const double inv = 1.0 / scale;
    sum = 0.0;
    for (double x : v) {
        const double y = x * inv;
        sum += y * y;
    }
    return scale * std::sqrt(sum);
}

bool all_finite(ConstVecView v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void axpy(double alpha, ConstVecView x, VecView y) {
    require_same_dim(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec add(ConstVecView u, ConstVecView v) {
    require_same_dim(u.size(), v.size(), "add");
    Vec out(u.begin(), u.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    return out;
}

Vec subtract(ConstVecView u, ConstVecView v) {
    require_same_dim(u.size(), v.size(), "subtract");
    Vec out(u.begin(), u.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= v[i];
    return out;
}

Vec scaled(double alpha, ConstVecView v) {
    Vec out(v.begin(), v.end());
    for (double& x : out) x *= alpha;
    return out;
}

Vec normalize(ConstVecView v) {
    const double n = norm(v);
    if (!(n > 0.0)) throw DegenerateError("normalize: zero-norm vector (degenerate particle)");
    return scaled(1.0 / n, v);
}

Subspace::Subspace(std::vector<Vec> basis, std::size_t ambient_dim)
    : basis_(std::move(basis)), ambient_dim_(ambient_dim) {
    if (ambient_dim_ == 0) throw DimensionError("Subspace: ambient dimension must be positive");
    if (basis_.empty() || basis_.size() > ambient_dim_) {
        throw DimensionError("Subspace: rank must be in [1, ambient_dim]");
    }
    for (const Vec& b : basis_) require_same_dim(b.size(), ambient_dim_, "Subspace");
    if (gram_deviation() > 1e-10) throw DimensionError("Subspace: basis is not orthonormal");
}

double Subspace::gram_deviation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        for (std::size_t j = i; j < basis_.size(); ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(inner(basis_[i], basis_[j]) - target));
        }
    }
    return worst;
}

Vec Subspace::coordinates(ConstVecView v) const {
    require_same_dim(v.size(), ambient_dim_, "coordinates");
    Vec c(basis_.size());
    for (std::size_t k = 0; k < basis_.size(); ++k) c[k] = inner(v, basis_[k]);
    return c;
}

Vec Subspace::embed(ConstVecView coords) const {
    require_same_dim(coords.size(), basis_.size(), "embed");
    Vec out(ambient_dim_, 0.0);
    for (std::size_t k = 0; k < basis_.size(); ++k) axpy(coords[k], basis_[k], out);
    return out;
}

Vec project(ConstVecView v, const Subspace& s) {
    return s.embed(s.coordinates(v));
}

ThinQR thin_qr(std::vector<Vec> columns) {
    const std::size_t k = columns.size();
    ThinQR out;
    out.r.assign(k, Vec(k, 0.0));
    out.q.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        Vec v = std::move(columns[j]);
        const double original = norm(v);
        // Two Gram-Schmidt sweeps ("twice is enough").
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                const double c = inner(out.q[i], v);
                out.r[i][j] += c;
                axpy(-c, out.q[i], v);
            }
        }
        const double n = norm(v);
        if (!(n > 1e-14 * std::max(original, 1.0))) {
            throw DegenerateError("thin_qr: columns are linearly dependent");
        }
        out.r[j][j] = n;
        for (double& x : v) x /= n;
        out.q.push_back(std::move(v));
    }
    return out;
}

Subspace haar_subspace(std::size_t ambient_dim, std::size_t rank, std::uint64_t seed) {
    if (rank == 0 || rank > ambient_dim) {
        throw DimensionError("haar_subspace: rank " + std::to_string(rank) + " outside [1, " +
                             std::to_string(ambient_dim) + "]");
    }
    Stream rng(seed, Domain::Subspace, 0);
    std::vector<Vec> cols(rank, Vec(ambient_dim));
    for (Vec& c : cols) {
        for (double& x : c) x = rng.normal();
    }
    return Subspace(thin_qr(std::move(cols)).q, ambient_dim);
}

Vec cholesky_solve(std::vector<Vec> a, Vec b) {
    const std::size_t n = a.size();
    require_same_dim(b.size(), n, "cholesky_solve");
    for (std::size_t j = 0; j < n; ++j) {
        require_same_dim(a[j].size(), n, "cholesky_solve");
        double d = a[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
        if (!(d > 0.0)) throw DegenerateError("cholesky_solve: matrix is not positive definite");
        const double l = std::sqrt(d);
        a[j][j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            a[i][j] = s / l;
        }
    }
    // L y = b, then L^T x = y.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
        b[i] /= a[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k][i] * b[k];
        b[i] /= a[i][i];
    }
    return b;
}

}  // namespace advshift
