#pragma once

// Two-dimensional summary of the classification dynamic for a best-response
// model (theta0 orthogonal to theta* - theta0):
//   a_t = <x_t, theta0>,  b_t = <x_t, theta* - theta0>,
// with step size eta = gamma |theta0|^2 and r = |theta* - theta0|^2 / |theta0|^2.

#include <optional>
#include <vector>

namespace advshift {

struct ScalarParams {
    double eta;
    double r;
    double c;  ///< the "large enough" constant in the initial-condition assumption
};

struct ScalarState {
    double a;
    double b;
    long t;
    ScalarParams params;
};

/// a' = a - eta sigma'(a+b) a + eta (sigma(a) - sigma(a+b))
/// b' = b - eta r sigma'(a+b) a
/// Throws NumericError if the result is not finite.
ScalarState scalar_step(const ScalarState& s);

/// L = sigma'(a+b) a / (sigma(a) - sigma(a+b)); nullopt when b = 0 (or the
/// denominator vanishes numerically).
std::optional<double> lyapunov(double a, double b);

struct Envelopes {
    std::optional<double> upper;  ///< e^s a / (1 - e^{2s}); defined only for s = a+b < 0
    double lower;                 ///< e^s a / (1 + e^s)
};
Envelopes envelopes(double a, double b);

/// (1 + 1/a) / (1 + r + 1/a), the lower threshold on L and env_L.
double lower_threshold(double a, double r);

/// Open interval for e^{-(a+b)} equivalent to the two envelope conditions.
struct AssumptionInterval {
    double lower;
    double upper;
    bool empty() const { return !(lower < upper); }
};
AssumptionInterval assumption_interval(double a, double r);

struct AssumptionCheck {
    bool ok;            ///< env_U < 1, env_L >= threshold, a > c, a + b < 0
    bool via_interval;  ///< same side conditions with the interval form for e^{-(a+b)}
};
AssumptionCheck check_assumption(double a, double b, double r, double c);

/// G_delta(x, z) = -(1 + delta) sigma'(z) x + sigma(x) - sigma(z)
double helper_g(double delta, double x, double z);

struct DiagnosticRow {
    long t;
    double a;
    double b;
    double s;
    std::optional<double> L;
    std::optional<double> env_u;
    double env_l;
    bool assumption_ok;
};
DiagnosticRow diagnose(const ScalarState& s);

struct ScalarRunSummary {
    std::optional<long> t0;  ///< first t where the assumption holds
    double slope_a;          ///< least-squares slope of a_t over the last half
    double limit_ra_minus_b_over_t;
    double bound_abs_s_over_logt;  ///< max |a_t + b_t| / log t over the last half, t >= 2
    bool basin_reached() const { return t0.has_value(); }
};

struct ScalarRun {
    std::vector<DiagnosticRow> rows;  ///< t = 0..T
    ScalarRunSummary summary;
};

ScalarRun scalar_run(const ScalarState& s0, long T);

}  // namespace advshift
