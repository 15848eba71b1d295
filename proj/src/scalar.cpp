#include "advshift/scalar.hpp"

#include <cmath>
#include <string>

#include "advshift/errors.hpp"
#include "advshift/objectives.hpp"

namespace advshift {

ScalarState scalar_step(const ScalarState& st) {
    const double s = st.a + st.b;
    const double eta = st.params.eta;
    const double sp = sigmoid_prime(s);
    ScalarState next = st;
    next.a = st.a - eta * sp * st.a + eta * (sigmoid(st.a) - sigmoid(s));
    next.b = st.b - eta * st.params.r * sp * st.a;
    next.t = st.t + 1;
    if (!std::isfinite(next.a) || !std::isfinite(next.b)) {
        throw NumericError("scalar_step: non-finite state at step " + std::to_string(next.t), 0, next.t);
    }
    return next;
}

std::optional<double> lyapunov(double a, double b) {
    if (b == 0.0) return std::nullopt;
    const double s = a + b;
    const double denom = sigmoid(a) - sigmoid(s);
    if (denom == 0.0) return std::nullopt;
    return sigmoid_prime(s) * a / denom;
}

Envelopes envelopes(double a, double b) {
    const double s = a + b;
    Envelopes e{std::nullopt, sigmoid(s) * a};
    if (s < 0.0) e.upper = std::exp(s) * a / -std::expm1(2.0 * s);
    return e;
}

double lower_threshold(double a, double r) {
    return (1.0 + 1.0 / a) / (1.0 + r + 1.0 / a);
}

AssumptionInterval assumption_interval(double a, double r) {
    const double inv = 1.0 / a;
    return {a * (1.0 + std::sqrt(1.0 + 4.0 * inv * inv)) / 2.0, a * (1.0 + r + inv) / (1.0 + inv) - 1.0};
}

AssumptionCheck check_assumption(double a, double b, double r, double c) {
    const double s = a + b;
    const bool side = a > c && s < 0.0 && std::isfinite(a) && std::isfinite(b);
    if (!side) return {false, false};
    const Envelopes env = envelopes(a, b);
    const bool ok = env.upper.has_value() && *env.upper < 1.0 && env.lower >= lower_threshold(a, r);
    const AssumptionInterval iv = assumption_interval(a, r);
    const double e = std::exp(-s);
    const bool via = iv.lower < e && e < iv.upper;
    return {ok, via};
}

double helper_g(double delta, double x, double z) {
    return -(1.0 + delta) * sigmoid_prime(z) * x + sigmoid(x) - sigmoid(z);
}

DiagnosticRow diagnose(const ScalarState& st) {
    const Envelopes env = envelopes(st.a, st.b);
    return {st.t,
            st.a,
            st.b,
            st.a + st.b,
            lyapunov(st.a, st.b),
            env.upper,
            env.lower,
            check_assumption(st.a, st.b, st.params.r, st.params.c).ok};
}

ScalarRun scalar_run(const ScalarState& s0, long T) {
    if (T < 1) throw ConfigError("T", "scalar_run needs T >= 1");
    ScalarRun out;
    out.rows.reserve(static_cast<std::size_t>(T) + 1);
    ScalarState st = s0;
    out.rows.push_back(diagnose(st));
    for (long k = 0; k < T; ++k) {
        st = scalar_step(st);
        out.rows.push_back(diagnose(st));
    }

    ScalarRunSummary& sum = out.summary;
    for (const DiagnosticRow& row : out.rows) {
        if (row.assumption_ok) {
            sum.t0 = row.t;
            break;
        }
    }

    const std::size_t half = out.rows.size() / 2;
    double mt = 0.0, ma = 0.0;
    const double count = static_cast<double>(out.rows.size() - half);
    for (std::size_t i = half; i < out.rows.size(); ++i) {
        mt += static_cast<double>(out.rows[i].t);
        ma += out.rows[i].a;
    }
    mt /= count;
    ma /= count;
    double sxy = 0.0, sxx = 0.0;
    double bound = 0.0;
    for (std::size_t i = half; i < out.rows.size(); ++i) {
        const double dt = static_cast<double>(out.rows[i].t) - mt;
        sxy += dt * (out.rows[i].a - ma);
        sxx += dt * dt;
        if (out.rows[i].t >= 2) {
            bound = std::max(bound, std::abs(out.rows[i].s) / std::log(static_cast<double>(out.rows[i].t)));
        }
    }
    sum.slope_a = sxx > 0.0 ? sxy / sxx : 0.0;
    const DiagnosticRow& last = out.rows.back();
    sum.limit_ra_minus_b_over_t = (s0.params.r * last.a - last.b) / static_cast<double>(T);
    sum.bound_abs_s_over_logt = bound;
    return out;
}

}  // namespace advshift
