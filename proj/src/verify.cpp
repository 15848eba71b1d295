#include "advshift/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advshift/dynamics.hpp"
#include "advshift/errors.hpp"
#include "advshift/rng.hpp"
#include "advshift/scalar.hpp"

namespace advshift {

namespace {

// Per-property stream families so that properties never share draws.
enum Family : std::uint64_t {
    kGradReg = 1,
    kGradCls,
    kGeometry,
    kClosedForm,
    kConservation,
    kConfinement,
    kConsistency,
    kEnvelope,
    kEquivalence,
    kBracket,
    kPreservation,
    kExactKey,
};

Stream stream(std::uint64_t seed, Family f, std::uint64_t k) {
    return Stream(seed, Domain::Verify, (static_cast<std::uint64_t>(f) << 32) | k);
}

Vec gaussian(Stream& rng, std::size_t d, double scale) {
    Vec v(d);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

double log_uniform(Stream& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

std::string describe(std::initializer_list<std::pair<const char*, double>> fields) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& [k, v] : fields) {
        os << (first ? "" : ", ") << k << "=" << v;
        first = false;
    }
    return os.str();
}

std::string describe_vec(const char* name, ConstVecView v) {
    std::ostringstream os;
    os.precision(17);
    os << name << "=[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    os << "]";
    return os.str();
}

void record(PropertyResult& res, bool ok, double err, const std::string& detail) {
    ++res.checked;
    if (std::isfinite(err)) res.worst = std::max(res.worst, err);
    if (!ok) {
        if (res.failures == 0) res.counterexample = detail;
        ++res.failures;
    }
}

double max_abs(ConstVecView v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Orthonormal pair spanning {u, v}.
std::pair<Vec, Vec> plane_basis(ConstVecView u, ConstVecView v) {
    Vec e1 = normalize(u);
    Vec e2(v.begin(), v.end());
    axpy(-inner(e2, e1), e1, e2);
    axpy(-inner(e2, e1), e1, e2);
    return {std::move(e1), normalize(e2)};
}

// Random best-response classification state (a, b) with the assumption
// holding, and parameters with eta (1 + r + 1/c) < 1/2.
struct BasinSample {
    double a, b, r, eta, c;
};

BasinSample sample_basin_state(Stream& rng) {
    for (;;) {
        // Preservation needs c large enough: violations occur up to a ~ 5.1 (small r,
        // states on the lower edge of the interval) and none above that.
        const double c = rng.uniform(6.0, 10.0);
        const double r = rng.uniform(0.3, 3.0);
        const double a = rng.uniform(c + 0.1, 100.0);
        const AssumptionInterval iv = assumption_interval(a, r);
        if (iv.empty()) continue;
        const double eta = rng.uniform(0.02, 0.49) / (1.0 + r + 1.0 / c);
        // e^{-s} strictly inside the interval, away from rounding at the ends.
        const double lo = std::log(iv.lower), hi = std::log(iv.upper);
        const double margin = 1e-9 * (hi - lo) + 1e-12 * std::abs(hi);
        const double u = rng.uniform(lo + margin, hi - margin);
        const double s = -u;
        const double b = s - a;
        if (!check_assumption(a, b, r, c).ok) continue;
        return {a, b, r, eta, c};
    }
}

}  // namespace

bool SuiteReport::passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

PropertyResult check_gradients(Setting setting, std::size_t cases, std::uint64_t seed, const GradientFn& gradient) {
    PropertyResult res;
    res.name = std::string("gradient-fd-") + std::string(to_string(setting));
    constexpr double kTol = 1e-6;
    const Family fam = setting == Setting::Regression ? kGradReg : kGradCls;
    for (std::size_t k = 0; k < cases; ++k) {
        Stream rng = stream(seed, fam, k);
        const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 19.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        const ModelPair m(gaussian(rng, d, 2.0 * scale), gaussian(rng, d, 2.0 * scale));
        const Vec x = gaussian(rng, d, 2.0 * scale);
        const Vec g = gradient(m, setting, x);
        Vec fd(d);
        Vec xp = x;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
            xp[j] = x[j] + h;
            const double up = pointwise_utility(m, setting, xp);
            xp[j] = x[j] - h;
            const double down = pointwise_utility(m, setting, xp);
            xp[j] = x[j];
            fd[j] = (up - down) / (2.0 * h);
        }
        double err = 0.0;
        if (g.size() != d) {
            err = INFINITY;
        } else {
            const double denom = std::max({norm(g), norm(fd), 1e-8});
            err = norm(subtract(g, fd)) / denom;
        }
        record(res, err <= kTol, err,
               describe_vec("theta_star", m.theta_star()) + " " + describe_vec("theta0", m.theta0()) + " " +
                   describe_vec("x", x) + " " + describe({{"rel_err", err}}));
    }
    return res;
}

PropertyResult check_best_response_geometry(std::size_t cases, std::uint64_t seed) {
    PropertyResult res;
    res.name = "best-response-geometry";
    for (std::size_t k = 0; k < cases; ++k) {
        Stream rng = stream(seed, kGeometry, k);
        const std::size_t d = 3 + static_cast<std::size_t>(rng.uniform() * 30.0);
        const std::size_t rank = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(d - 2));
        const Subspace s = haar_subspace(d, rank, rng.next_u64());
        const Vec theta_star = gaussian(rng, d, 1.0);
        const ModelPair m(theta_star, best_response(theta_star, s));
        const double scale = m.theta_star_norm() * m.theta_star_norm();
        const double q_err = std::abs(inner(m.theta0(), m.residual())) / scale;
        double dc_err = INFINITY, pyth_err = INFINITY;
        if (m.has_delta_c()) {
            dc_err = std::abs(inner(m.delta_c(), m.theta_star())) / m.theta_star_norm();
            const double c0 = m.theta0_norm() / m.theta_star_norm();
            const double c1 = m.residual_norm() / m.theta_star_norm();
            pyth_err = std::abs(c0 * c0 + c1 * c1 - 1.0);
        }
        const double err = std::max({q_err, dc_err, pyth_err});
        record(res, err <= 1e-10, err,
               describe({{"d", double(d)}, {"rank", double(rank)}, {"q_err", q_err}, {"delta_c_err", dc_err},
                         {"pythagoras_err", pyth_err}}));
    }
    return res;
}

PropertyResult check_closed_form(std::size_t setups, std::uint64_t seed) {
    PropertyResult res;
    res.name = "regression-closed-form";
    for (std::size_t k = 0; k < setups; ++k) {
        Stream rng = stream(seed, kClosedForm, k);
        const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 29.0);
        const ModelPair m(gaussian(rng, d, 1.0 / std::sqrt(double(d))), gaussian(rng, d, 1.0 / std::sqrt(double(d))));
        const Vec x0 = gaussian(rng, d, 1.0);
        // gamma~ in [0.05, 1.5] keeps (1 + gamma~)^60 inside double range.
        const double gamma = rng.uniform(0.05, 1.5) / (2.0 * m.residual_norm() * m.residual_norm());
        const long T = 1 + static_cast<long>(rng.uniform() * 60.0);
        ParticleEnsemble ens({x0}, gamma);
        for (long t = 0; t < T; ++t) ens = step(std::move(ens), m, Setting::Regression);
        const Vec sim = ens.true_particle(0);
        const Vec cf = regression_closed_form_state(x0, m, gamma, T);
        const double entry_err = max_abs(subtract(sim, cf)) / max_abs(cf);
        const double align_err =
            std::abs(record_alignment(ens, m).particles[0].align_b - regression_closed_form(x0, m, gamma, T).align_b);
        const bool ok = entry_err <= 1e-9 && align_err <= 1e-10;
        record(res, ok, std::max(entry_err, align_err),
               describe({{"d", double(d)}, {"gamma", gamma}, {"T", double(T)}, {"entry_err", entry_err},
                         {"align_err", align_err}}));
    }
    return res;
}

PropertyResult check_orthogonal_conservation(std::size_t setups, std::uint64_t seed) {
    PropertyResult res;
    res.name = "regression-orthogonal-conservation";
    for (std::size_t k = 0; k < setups; ++k) {
        Stream rng = stream(seed, kConservation, k);
        const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 29.0);
        const ModelPair m(gaussian(rng, d, 1.0 / std::sqrt(double(d))), gaussian(rng, d, 1.0 / std::sqrt(double(d))));
        const Vec x0 = gaussian(rng, d, 1.0);
        const double gamma = rng.uniform(0.05, 1.0) / (2.0 * m.residual_norm() * m.residual_norm());
        const Vec& db = m.delta_b();
        auto perp = [&](const Vec& x) {
            Vec p = x;
            axpy(-inner(x, db), db, p);
            return p;
        };
        const Vec p0 = perp(x0);
        ParticleEnsemble ens({x0}, gamma);
        double worst = 0.0;
        for (long t = 1; t <= 40; ++t) {
            ens = step(std::move(ens), m, Setting::Regression);
            const Vec x = ens.true_particle(0);
            // Rounding in the projection scales with |x_t|.
            worst = std::max(worst, max_abs(subtract(perp(x), p0)) / std::max(1.0, norm(x)));
        }
        record(res, worst <= 1e-10, worst, describe({{"d", double(d)}, {"gamma", gamma}, {"err", worst}}));
    }
    return res;
}

PropertyResult check_confinement(std::size_t setups, std::uint64_t seed) {
    PropertyResult res;
    res.name = "classification-two-plane-confinement";
    for (std::size_t k = 0; k < setups; ++k) {
        Stream rng = stream(seed, kConfinement, k);
        const std::size_t d = 3 + static_cast<std::size_t>(rng.uniform() * 28.0);
        const ModelPair m(gaussian(rng, d, 2.0 / std::sqrt(double(d))), gaussian(rng, d, 1.0 / std::sqrt(double(d))));
        const Vec x0 = gaussian(rng, d, 1.0);
        const double gamma = rng.uniform(0.05, 1.0);
        const auto [e1, e2] = plane_basis(m.theta0(), m.theta_star());
        ParticleEnsemble ens({x0}, gamma);
        double worst = 0.0;
        for (long t = 1; t <= 200; ++t) {
            ens = step(std::move(ens), m, Setting::Classification);
            Vec diff = subtract(ens.particle(0), x0);
            axpy(-inner(diff, e1), e1, diff);
            axpy(-inner(diff, e2), e2, diff);
            worst = std::max(worst, max_abs(diff) / std::max(1.0, norm(ens.particle(0))));
        }
        record(res, worst <= 1e-10, worst, describe({{"d", double(d)}, {"gamma", gamma}, {"err", worst}}));
    }
    return res;
}

PropertyResult check_scalar_vector_consistency(long steps, std::uint64_t seed) {
    PropertyResult res;
    res.name = "scalar-vector-consistency";
    constexpr std::size_t kSetups = 4;
    for (std::size_t k = 0; k < kSetups; ++k) {
        Stream rng = stream(seed, kConsistency, k);
        const std::size_t d = 200, rank = 100;
        const Subspace s = haar_subspace(d, rank, rng.next_u64());
        Vec theta_star(d);
        for (std::size_t i = 0; i < d; ++i) theta_star[i] = 1.0 / static_cast<double>(i + 1);
        const ModelPair m(theta_star, best_response(theta_star, s));
        const double gamma = 0.4 / (m.theta0_norm() * m.theta0_norm() * (1.0 + m.r() + 0.2));
        Vec x0 = normalize(s.embed(gaussian(rng, rank, 1.0)));
        if (k % 2 == 1) axpy(rng.uniform(-3.0, 3.0), normalize(m.residual()), x0);  // off-subspace start
        ParticleEnsemble ens({x0}, gamma);
        ScalarState sc{inner(x0, m.theta0()), inner(x0, m.residual()), 0, {m.scalar_eta(gamma), m.r(), 5.0}};
        double worst = 0.0;
        long worst_t = 0;
        for (long t = 1; t <= steps; ++t) {
            ens = step(std::move(ens), m, Setting::Classification);
            sc = scalar_step(sc);
            const Vec& x = ens.particle(0);
            const double a = inner(x, m.theta0()), b = inner(x, m.residual());
            const double err = std::max(std::abs(a - sc.a), std::abs(b - sc.b)) /
                               std::max({std::abs(sc.a), std::abs(sc.b), 1.0});
            if (err > worst) worst = err, worst_t = t;
        }
        record(res, worst <= 1e-9, worst,
               describe({{"setup", double(k)}, {"gamma", gamma}, {"step", double(worst_t)}, {"rel_err", worst}}));
    }
    return res;
}

PropertyResult check_envelope_claims(std::size_t cases, std::uint64_t seed) {
    PropertyResult res;
    res.name = "envelope-claims";
    constexpr double kSlack = 1e-12;
    for (std::size_t k = 0; k < cases; ++k) {
        Stream rng = stream(seed, kEnvelope, k);
        const double a = log_uniform(rng, 1e-2, 100.0);
        const double s = -log_uniform(rng, 1e-3, 40.0);
        const double r = log_uniform(rng, 1e-2, 10.0);
        const double b = s - a;
        const auto L = lyapunov(a, b);
        const Envelopes env = envelopes(a, b);
        if (!L || !env.upper) {
            record(res, false, INFINITY, describe({{"a", a}, {"b", b}, {"undefined", 1.0}}));
            continue;
        }
        const double lo = env.lower, up = *env.upper, l = *L, stable = 1.0 / (1.0 + r);
        bool ok = lo <= std::min(l, up) * (1.0 + kSlack);
        if (up < 1.0 - kSlack) ok = ok && l < 1.0;
        if (lo > stable * (1.0 + kSlack)) ok = ok && l > stable;
        record(res, ok, 0.0, describe({{"a", a}, {"b", b}, {"r", r}, {"L", l}, {"env_u", up}, {"env_l", lo}}));
    }
    return res;
}

PropertyResult check_assumption_equivalence(std::size_t cases, std::uint64_t seed) {
    PropertyResult res;
    res.name = "assumption-interval-equivalence";
    constexpr double kBoundary = 1e-12;
    std::size_t positives = 0;
    for (std::size_t k = 0; k < cases; ++k) {
        Stream rng = stream(seed, kEquivalence, k);
        const double c = 5.0;
        const double a = rng.uniform(0.5, 60.0);
        const double r = log_uniform(rng, 0.05, 5.0);
        const AssumptionInterval iv = assumption_interval(a, r);
        double s;
        if (rng.bernoulli(0.5) && !iv.empty()) {
            // Concentrate near and inside the interval so both outcomes occur.
            s = -std::log(rng.uniform(0.8 * iv.lower, 1.2 * iv.upper));
        } else {
            s = rng.uniform(-6.0, 1.0);
        }
        const double b = s - a;
        const double e = std::exp(-s);
        const bool near = std::abs(e - iv.lower) <= kBoundary * std::abs(iv.lower) ||
                          std::abs(e - iv.upper) <= kBoundary * std::abs(iv.upper);
        if (near) continue;
        const AssumptionCheck chk = check_assumption(a, b, r, c);
        positives += chk.ok ? 1 : 0;
        record(res, chk.ok == chk.via_interval, 0.0,
               describe({{"a", a}, {"b", b}, {"r", r}, {"ok", double(chk.ok)}, {"via_interval", double(chk.via_interval)}}));
    }
    res.worst = static_cast<double>(positives);
    return res;
}

PropertyResult check_helper_signs() {
    PropertyResult res;
    res.name = "helper-sign-claims";
    const double deltas[] = {0.0, 0.25, 0.5, 1.0};
    const double above[] = {1.001, 1.01, 1.1, 1.5, 2.0, 10.0, 100.0};
    const double below[] = {0.0, 1e-3, 0.1, 0.5, 0.9, 0.99, 0.999};
    constexpr int kZ = 400;
    for (double delta : deltas) {
        for (int i = 0; i < kZ; ++i) {
            // z log-spaced in magnitude over [0.01, 30].
            const double z = -std::exp(std::log(0.01) + (std::log(30.0) - std::log(0.01)) * i / (kZ - 1));
            const double upper_bound = (std::exp(-z) + 1.0) / (1.0 + delta);
            const double lower_bound = (std::exp(-z) - std::exp(z)) / (1.0 + delta);
            for (double f : above) {
                const double x = f * upper_bound;
                const double g = helper_g(delta, x, z);
                record(res, g < 0.0, 0.0, describe({{"delta", delta}, {"x", x}, {"z", z}, {"G", g}, {"expected_sign", -1}}));
            }
            for (double f : below) {
                const double x = f * lower_bound;
                const double g = helper_g(delta, x, z);
                record(res, g > 0.0, 0.0, describe({{"delta", delta}, {"x", x}, {"z", z}, {"G", g}, {"expected_sign", 1}}));
            }
        }
    }
    return res;
}

PropertyResult check_helper_concavity() {
    PropertyResult res;
    res.name = "helper-concavity";
    const double deltas[] = {0.0, 0.25, 0.5, 1.0};
    constexpr double h = 1e-3;
    for (double delta : deltas) {
        for (int i = 0; i < 60; ++i) {
            const double z = -0.01 - (30.0 - 0.01) * i / 59.0;
            for (int j = 1; j <= 500; ++j) {
                const double x = 0.1 * j;
                const double second = helper_g(delta, x + h, z) - 2.0 * helper_g(delta, x, z) + helper_g(delta, x - h, z);
                record(res, second <= 1e-12, second, describe({{"delta", delta}, {"x", x}, {"z", z}, {"second_diff", second}}));
            }
        }
    }
    return res;
}

PropertyResult check_lyapunov_bracket(std::size_t runs, long steps, std::uint64_t seed) {
    PropertyResult res;
    res.name = "lyapunov-bracket";
    constexpr double kSlack = 1e-12;
    for (std::size_t k = 0; k < runs; ++k) {
        Stream rng = stream(seed, kBracket, k);
        const BasinSample bs = sample_basin_state(rng);
        ScalarState st{bs.a, bs.b, 0, {bs.eta, bs.r, bs.c}};
        for (long t = 0; t <= steps; ++t) {
            const auto L = lyapunov(st.a, st.b);
            const double thr = lower_threshold(st.a, bs.r);
            bool ok = L && *L >= thr * (1.0 - kSlack) && *L < 1.0;
            ScalarState next = st;
            if (ok && t < steps) {
                next = scalar_step(st);
                ok = next.a > st.a && next.a + next.b < st.a + st.b;
            }
            const double l = L ? *L : std::nan("");
            record(res, ok, 0.0,
                   describe({{"run", double(k)}, {"t", double(t)}, {"a", st.a}, {"b", st.b}, {"r", bs.r},
                             {"eta", bs.eta}, {"L", l}, {"threshold", thr}}));
            if (!ok) break;
            st = next;
        }
    }
    return res;
}

PropertyResult check_one_step_preservation(std::size_t cases, std::uint64_t seed) {
    PropertyResult res;
    res.name = "one-step-preservation";
    for (std::size_t k = 0; k < cases; ++k) {
        Stream rng = stream(seed, kPreservation, k);
        const BasinSample bs = sample_basin_state(rng);
        const ScalarState st{bs.a, bs.b, 0, {bs.eta, bs.r, bs.c}};
        const ScalarState next = scalar_step(st);
        const Envelopes before = envelopes(st.a, st.b);
        const Envelopes after = envelopes(next.a, next.b);
        const bool ok = check_assumption(next.a, next.b, bs.r, bs.c).ok && after.upper && *after.upper < *before.upper &&
                        after.lower >= lower_threshold(next.a, bs.r);
        record(res, ok, 0.0,
               describe({{"a", st.a}, {"b", st.b}, {"r", bs.r}, {"eta", bs.eta}, {"c", bs.c}, {"a_next", next.a},
                         {"b_next", next.b}}));
    }
    return res;
}

PropertyResult check_exact_key_identity(std::size_t cases, std::uint64_t seed) {
    PropertyResult res;
    res.name = "exact-key-identity";
    for (std::size_t k = 0; k < cases; ++k) {
        Stream rng = stream(seed, kExactKey, k);
        const double a = rng.uniform(-50.0, 200.0);
        const double b = rng.uniform(-250.0, 50.0);
        const double r = log_uniform(rng, 1e-2, 10.0);
        const double eta = log_uniform(rng, 1e-3, 1.0);
        const ScalarState next = scalar_step({a, b, 0, {eta, r, 5.0}});
        const double lhs = r * next.a - next.b;
        const double rhs = r * a - b + eta * r * (sigmoid(a) - sigmoid(a + b));
        const double err = std::abs(lhs - rhs) / std::max({1.0, std::abs(r * a), std::abs(b)});
        record(res, err <= 1e-12, err, describe({{"a", a}, {"b", b}, {"r", r}, {"eta", eta}, {"err", err}}));
    }
    return res;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"lemmas", "gradients", "closed-form", "envelopes"};
    return names;
}

SuiteReport run_suite(const std::string& name, const SuiteOptions& options) {
    const std::uint64_t seed = options.seed;
    SuiteReport rep;
    rep.suite = name;
    if (name == "lemmas") {
        rep.properties.push_back(check_helper_signs());
        rep.properties.push_back(check_helper_concavity());
        rep.properties.push_back(check_lyapunov_bracket(50, 2000, seed));
        rep.properties.push_back(check_one_step_preservation(10000, seed));
        rep.properties.push_back(check_exact_key_identity(10000, seed));
    } else if (name == "gradients") {
        rep.properties.push_back(check_gradients(Setting::Regression, 1000, seed, options.gradient));
        rep.properties.push_back(check_gradients(Setting::Classification, 1000, seed, options.gradient));
        rep.properties.push_back(check_best_response_geometry(200, seed));
    } else if (name == "closed-form") {
        rep.properties.push_back(check_closed_form(100, seed));
        rep.properties.push_back(check_orthogonal_conservation(50, seed));
        rep.properties.push_back(check_confinement(50, seed));
        rep.properties.push_back(check_scalar_vector_consistency(10000, seed));
    } else if (name == "envelopes") {
        rep.properties.push_back(check_envelope_claims(100000, seed));
        rep.properties.push_back(check_assumption_equivalence(100000, seed));
    } else {
        throw ConfigError("suite", "unknown suite '" + name + "' (expected lemmas, gradients, closed-form or envelopes)");
    }
    return rep;
}

}  // namespace advshift
