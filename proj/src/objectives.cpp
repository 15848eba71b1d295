#include "advshift/objectives.hpp"

#include <cmath>
#include <string>

#include "advshift/errors.hpp"

namespace advshift {

std::string_view to_string(Setting s) {
    return s == Setting::Regression ? "regression" : "classification";
}

Setting parse_setting(std::string_view text) {
    if (text == "regression") return Setting::Regression;
    if (text == "classification") return Setting::Classification;
    throw ConfigError("setting", "expected 'regression' or 'classification', got '" + std::string(text) + "'");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sigmoid_prime(double z) {
    return sigmoid(z) * sigmoid(-z);
}

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

ModelPair::ModelPair(Vec theta_star, Vec theta0)
    : theta_star_(std::move(theta_star)), theta0_(std::move(theta0)) {
    if (theta_star_.empty()) throw DimensionError("ModelPair: empty model");
    if (theta_star_.size() != theta0_.size()) throw DimensionError("ModelPair: theta* and theta0 dimensions differ");
    if (!all_finite(theta_star_) || !all_finite(theta0_)) throw Error("ModelPair: non-finite model entries");

    residual_ = subtract(theta_star_, theta0_);
    residual_norm_ = norm(residual_);
    theta0_norm_ = norm(theta0_);
    theta_star_norm_ = norm(theta_star_);

    if (residual_norm_ > 0.0) delta_b_ = scaled(1.0 / residual_norm_, residual_);

    if (delta_b_ && theta0_norm_ > 0.0 && std::abs(q()) <= 1e-10) {
        // -(|theta0|/|theta*|) delta_b + (|theta*-theta0|/|theta*|) theta0/|theta0|
        Vec dc = scaled(-theta0_norm_ / theta_star_norm_, *delta_b_);
        axpy(residual_norm_ / (theta_star_norm_ * theta0_norm_), theta0_, dc);
        delta_c_ = std::move(dc);
    }
}

const Vec& ModelPair::delta_b() const {
    if (!delta_b_) throw DegenerateError("blessing direction undefined: theta0 equals theta*");
    return *delta_b_;
}

const Vec& ModelPair::delta_c() const {
    if (!delta_c_) {
        throw DegenerateError(
            "curse direction undefined: requires theta0 != 0, theta0 != theta*, and theta0 orthogonal to theta* - theta0");
    }
    return *delta_c_;
}

double ModelPair::r() const {
    if (!(theta0_norm_ > 0.0)) throw DegenerateError("r undefined: theta0 is zero");
    return (residual_norm_ * residual_norm_) / (theta0_norm_ * theta0_norm_);
}

double ModelPair::q() const {
    if (!(theta0_norm_ > 0.0) || !(residual_norm_ > 0.0)) return 0.0;
    return inner(theta0_, residual_) / (theta0_norm_ * residual_norm_);
}

double pointwise_utility(const ModelPair& m, Setting setting, ConstVecView x) {
    if (setting == Setting::Regression) {
        const double u = inner(x, m.residual());
        return u * u + 1.0;
    }
    const double u_star = inner(x, m.theta_star());
    const double u0 = inner(x, m.theta0());
    return sigmoid(u_star) * softplus(-u0) + sigmoid(-u_star) * softplus(u0);
}

void accumulate_gradient(const ModelPair& m, Setting setting, ConstVecView x, double scale, VecView out) {
    if (setting == Setting::Regression) {
        const double u = inner(x, m.residual());
        axpy(scale * 2.0 * u, m.residual(), out);
        return;
    }
    const double u_star = inner(x, m.theta_star());
    const double u0 = inner(x, m.theta0());
    axpy(-scale * sigmoid_prime(u_star) * u0, m.theta_star(), out);
    axpy(scale * (sigmoid(u0) - sigmoid(u_star)), m.theta0(), out);
}

Vec pointwise_gradient(const ModelPair& m, Setting setting, ConstVecView x) {
    Vec g(m.dim(), 0.0);
    accumulate_gradient(m, setting, x, 1.0, g);
    return g;
}

double sample_response(Setting setting, ConstVecView theta_star, ConstVecView x, Stream& rng) {
    const double mean = inner(x, theta_star);
    if (setting == Setting::Regression) return mean + rng.normal();
    return rng.bernoulli(sigmoid(mean)) ? 1.0 : 0.0;
}

Vec best_response(ConstVecView theta_star, const Subspace& s) {
    return project(theta_star, s);
}

Vec sample_best_response(ConstVecView theta_star, const Subspace& s, std::size_t samples, std::uint64_t seed) {
    const std::size_t k = s.rank();
    if (samples < k) throw ConfigError("fit_samples", "must be at least the subspace rank");
    // In subspace coordinates x = Q z, so <x, theta> = <z, Q^T theta>.
    const Vec w_star = s.coordinates(theta_star);
    std::vector<Vec> gram(k, Vec(k, 0.0));
    Vec rhs(k, 0.0);
    Stream rng(seed, Domain::Fit, 0);
    Vec z(k);
    for (std::size_t j = 0; j < samples; ++j) {
        for (double& v : z) v = rng.normal();
        const double y = inner(z, w_star) + rng.normal();
        for (std::size_t a = 0; a < k; ++a) {
            rhs[a] += z[a] * y;
            for (std::size_t b = 0; b <= a; ++b) gram[a][b] += z[a] * z[b];
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) gram[a][b] = gram[b][a];
    }
    return s.embed(cholesky_solve(std::move(gram), std::move(rhs)));
}

}  // namespace advshift
