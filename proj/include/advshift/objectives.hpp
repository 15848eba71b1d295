#pragma once

// Conditional data models (Gaussian / Bernoulli given <x, theta*>), the
// pointwise utility U(theta0, delta_x), its gradient in x, and the best
// response of a learner restricted to a covariate subspace.

#include <cstdint>
#include <optional>
#include <string_view>

#include "advshift/linalg.hpp"
#include "advshift/rng.hpp"

namespace advshift {

enum class Setting { Regression, Classification };

std::string_view to_string(Setting s);
/// "regression" / "classification"; throws ConfigError otherwise.
Setting parse_setting(std::string_view text);

double sigmoid(double z);
/// sigma(z) (1 - sigma(z)), evaluated as sigma(z) sigma(-z).
double sigmoid_prime(double z);
/// log(1 + e^z) without overflow.
double softplus(double z);

/// Current model theta0 and Bayes-optimal theta*, with the blessing and curse
/// directions derived from them.
class ModelPair {
public:
    ModelPair(Vec theta_star, Vec theta0);

    const Vec& theta_star() const noexcept { return theta_star_; }
    const Vec& theta0() const noexcept { return theta0_; }
    /// theta* - theta0
    const Vec& residual() const noexcept { return residual_; }
    std::size_t dim() const noexcept { return theta_star_.size(); }

    double residual_norm() const noexcept { return residual_norm_; }
    double theta0_norm() const noexcept { return theta0_norm_; }
    double theta_star_norm() const noexcept { return theta_star_norm_; }

    bool has_delta_b() const noexcept { return delta_b_.has_value(); }
    bool has_delta_c() const noexcept { return delta_c_.has_value(); }
    /// Unit vector along theta* - theta0. Throws DegenerateError if theta0 = theta*.
    const Vec& delta_b() const;
    /// Unit vector orthogonal to theta*. Defined only for theta0 != 0,
    /// theta0 != theta* and theta0 orthogonal to theta* - theta0.
    const Vec& delta_c() const;

    /// |theta* - theta0|^2 / |theta0|^2
    double r() const;
    /// 2 gamma |theta* - theta0|^2, the regression amplification per step.
    double gamma_tilde(double gamma) const { return 2.0 * gamma * residual_norm_ * residual_norm_; }
    /// gamma |theta0|^2, the classification scalar step size.
    double scalar_eta(double gamma) const { return gamma * theta0_norm_ * theta0_norm_; }
    /// <theta0, theta* - theta0> / (|theta0| |theta* - theta0|); zero for a best response.
    double q() const;

private:
    Vec theta_star_;
    Vec theta0_;
    Vec residual_;
    double residual_norm_;
    double theta0_norm_;
    double theta_star_norm_;
    std::optional<Vec> delta_b_;
    std::optional<Vec> delta_c_;
};

double pointwise_utility(const ModelPair& m, Setting setting, ConstVecView x);

/// out += scale * d/dx U(theta0, delta_x). Allocation-free form used by the
/// particle dynamics.
void accumulate_gradient(const ModelPair& m, Setting setting, ConstVecView x, double scale, VecView out);
Vec pointwise_gradient(const ModelPair& m, Setting setting, ConstVecView x);

/// y | x: Normal(<x, theta*>, 1) or Bernoulli(sigma(<x, theta*>)) in {0, 1}.
double sample_response(Setting setting, ConstVecView theta_star, ConstVecView x, Stream& rng);

/// Minimum-norm element of BR(mu0): the projection of theta* onto supp(mu0).
Vec best_response(ConstVecView theta_star, const Subspace& s);

/// Minimum-norm least-squares fit of theta from `samples` draws
/// x ~ N(0, Pi_s), y ~ Normal(<x, theta*>, 1). The estimate lies in s and
/// differs from best_response by O(sqrt(rank / samples)).
Vec sample_best_response(ConstVecView theta_star, const Subspace& s, std::size_t samples, std::uint64_t seed);

}  // namespace advshift
