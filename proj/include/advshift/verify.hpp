#pragma once

// Property suites backing `advshift verify`: finite-difference gradient
// checks, closed-form and confinement checks on the particle dynamic, and the
// scalar recursion's helper-function, envelope and Lyapunov claims.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advshift/linalg.hpp"
#include "advshift/objectives.hpp"

namespace advshift {

struct PropertyResult {
    std::string name;
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::string counterexample;  ///< inputs of the first failure
    double worst = 0.0;          ///< largest error measure seen (property specific)
    bool passed() const { return checked > 0 && failures == 0; }
};

struct SuiteReport {
    std::string suite;
    std::vector<PropertyResult> properties;
    bool passed() const;
};

using GradientFn = std::function<Vec(const ModelPair&, Setting, ConstVecView)>;

/// Analytic gradient against central differences of pointwise_utility,
/// relative error <= 1e-6 on `cases` random (theta*, theta0, x).
PropertyResult check_gradients(Setting setting, std::size_t cases, std::uint64_t seed,
                               const GradientFn& gradient = pointwise_gradient);
/// <theta0, theta* - theta0> = 0 for best responses; delta_c orthogonal to
/// theta* with unit coefficients.
PropertyResult check_best_response_geometry(std::size_t cases, std::uint64_t seed);

/// Simulated regression x_T against the closed form, entrywise 1e-9 relative, T <= 60.
PropertyResult check_closed_form(std::size_t setups, std::uint64_t seed);
/// Component of x_t orthogonal to delta_b is constant in regression.
PropertyResult check_orthogonal_conservation(std::size_t setups, std::uint64_t seed);
/// x_t - x_0 stays in span{theta0, theta*} in classification.
PropertyResult check_confinement(std::size_t setups, std::uint64_t seed);
/// Full-space classification (a_t, b_t) against the scalar recursion, 1e-9 relative.
PropertyResult check_scalar_vector_consistency(long steps, std::uint64_t seed);

/// env_L <= min(L, env_U); env_U < 1 implies L < 1; env_L > 1/(1+r) implies L > 1/(1+r).
PropertyResult check_envelope_claims(std::size_t cases, std::uint64_t seed);
/// Envelope form and interval form of the initial-condition assumption agree.
PropertyResult check_assumption_equivalence(std::size_t cases, std::uint64_t seed);

/// Sign claims on G_delta over the delta / z grid.
PropertyResult check_helper_signs();
/// G_delta(., z) concave on [0, inf): second difference <= 1e-12.
PropertyResult check_helper_concavity();
/// L_t in [(1 + 1/a_t)/(1 + r + 1/a_t), 1) along assumption-satisfying runs,
/// with a_t increasing and a_t + b_t decreasing.
PropertyResult check_lyapunov_bracket(std::size_t runs, long steps, std::uint64_t seed);
/// One step from an assumption-satisfying state keeps the assumption and
/// strictly lowers env_U.
PropertyResult check_one_step_preservation(std::size_t cases, std::uint64_t seed);
/// r a' - b' = r a - b + eta r (sigma(a) - sigma(a+b)) within 1e-12.
PropertyResult check_exact_key_identity(std::size_t cases, std::uint64_t seed);

struct SuiteOptions {
    std::uint64_t seed = 0;
    GradientFn gradient = pointwise_gradient;
};

const std::vector<std::string>& suite_names();
/// lemmas, gradients, closed-form or envelopes; throws ConfigError otherwise.
SuiteReport run_suite(const std::string& name, const SuiteOptions& options = {});

}  // namespace advshift
