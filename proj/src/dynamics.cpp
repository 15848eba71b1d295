#include "advshift/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "advshift/errors.hpp"
#include "advshift/parallel.hpp"

namespace advshift {

namespace {

constexpr double kRescaleThreshold = 1e150;
constexpr double kStationaryTol = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DirectionStats {
    double align;
    double sin2;
};

DirectionStats direction_stats(ConstVecView x, double x_norm, ConstVecView direction) {
    const double p = inner(x, direction);
    double perp2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = x[i] - p * direction[i];
        perp2 += e * e;
    }
    return {std::abs(p) / x_norm, perp2 / (x_norm * x_norm)};
}

}  // namespace

ParticleEnsemble::ParticleEnsemble(std::vector<Vec> particles, double gamma)
    : particles_(std::move(particles)), gamma_(gamma) {
    if (particles_.empty()) throw DimensionError("ParticleEnsemble: no particles");
    if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) throw ConfigError("gamma", "step size must be positive");
    const std::size_t d = particles_.front().size();
    if (d == 0) throw DimensionError("ParticleEnsemble: zero-dimensional particles");
    for (std::size_t i = 0; i < particles_.size(); ++i) {
        if (particles_[i].size() != d) throw DimensionError("ParticleEnsemble: particle dimensions differ");
        if (!all_finite(particles_[i])) {
            throw NumericError("ParticleEnsemble: non-finite initial particle " + std::to_string(i), i, 0);
        }
    }
    log_scale_.assign(particles_.size(), 0.0);
    stationary_.assign(particles_.size(), 0);
}

std::size_t ParticleEnsemble::stationary_count() const {
    return static_cast<std::size_t>(std::count(stationary_.begin(), stationary_.end(), 1));
}

Vec ParticleEnsemble::true_particle(std::size_t i) const {
    return scaled(std::exp(log_scale_[i]), particles_[i]);
}

void ParticleEnsemble::flag_stationary(const ModelPair& m, Setting setting) {
    if (m.dim() != dim()) throw DimensionError("flag_stationary: model and particle dimensions differ");
    for (std::size_t i = 0; i < particles_.size(); ++i) {
        const Vec& x = particles_[i];
        const double xn = norm(x);
        bool fixed = false;
        if (xn == 0.0) {
            fixed = true;
        } else if (setting == Setting::Regression) {
            fixed = !m.has_delta_b() || std::abs(inner(x, m.delta_b())) <= kStationaryTol * xn;
        } else {
            fixed = std::abs(inner(x, m.theta0())) <= kStationaryTol * xn * m.theta0_norm() &&
                    std::abs(inner(x, m.theta_star())) <= kStationaryTol * xn * m.theta_star_norm();
        }
        if (fixed) stationary_[i] = 1;
    }
}

ParticleEnsemble step(ParticleEnsemble ensemble, const ModelPair& m, Setting setting, unsigned threads) {
    if (m.dim() != ensemble.dim()) throw DimensionError("step: model and particle dimensions differ");
    const double gamma = ensemble.gamma_;
    const long t = ensemble.t_;
    parallel_for(ensemble.size(), threads, [&](std::size_t i) {
        if (ensemble.stationary_[i]) return;
        Vec& x = ensemble.particles_[i];
        // accumulate_gradient reads all inner products before writing, so the
        // update can be applied in place.
        accumulate_gradient(m, setting, x, gamma, x);
        if (!all_finite(x)) {
            throw NumericError("non-finite update for particle " + std::to_string(i) + " at step " +
                                   std::to_string(t + 1),
                               i, t + 1);
        }
        if (setting == Setting::Regression) {
            const double n = norm(x);
            if (n > kRescaleThreshold) {
                for (double& v : x) v /= n;
                ensemble.log_scale_[i] += std::log(n);
            }
        }
    });
    ++ensemble.t_;
    return ensemble;
}

AlignmentRecord record_alignment(const ParticleEnsemble& ensemble, const ModelPair& m) {
    AlignmentRecord rec{ensemble.t(), {}};
    rec.particles.reserve(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const Vec& x = ensemble.particle(i);
        const double scale = std::exp(ensemble.log_scale(i));
        const double xn = norm(x);
        ParticleDiagnostics p{kNaN, kNaN, kNaN, kNaN, inner(x, m.theta0()) * scale, inner(x, m.residual()) * scale,
                              std::log(xn) + ensemble.log_scale(i), ensemble.stationary(i)};
        if (xn > 0.0) {
            if (m.has_delta_b()) {
                const auto s = direction_stats(x, xn, m.delta_b());
                p.align_b = s.align;
                p.sin2_b = s.sin2;
            }
            if (m.has_delta_c()) {
                const auto s = direction_stats(x, xn, m.delta_c());
                p.align_c = s.align;
                p.sin2_c = s.sin2;
            }
        }
        rec.particles.push_back(p);
    }
    return rec;
}

RunResult run_snapshots(ParticleEnsemble ensemble, const ModelPair& m, Setting setting,
                        const std::vector<long>& snapshots, unsigned threads, const SnapshotObserver& observer) {
    if (snapshots.empty()) throw ConfigError("snapshots", "at least one snapshot time is required");
    if (!std::is_sorted(snapshots.begin(), snapshots.end()) || snapshots.front() < ensemble.t()) {
        throw ConfigError("snapshots", "snapshot times must be sorted and not before the current step");
    }
    ensemble.flag_stationary(m, setting);
    RunResult out{{}, ensemble};
    out.records.reserve(snapshots.size());
    for (long target : snapshots) {
        while (ensemble.t() < target) ensemble = step(std::move(ensemble), m, setting, threads);
        if (out.records.empty() || out.records.back().t != target) {
            out.records.push_back(record_alignment(ensemble, m));
            if (observer) observer(ensemble);
        }
    }
    out.final_ensemble = std::move(ensemble);
    return out;
}

RunResult run(ParticleEnsemble ensemble0, const ModelPair& m, Setting setting, long T, long record_every,
              unsigned threads) {
    if (T < 0) throw ConfigError("T", "must be non-negative");
    if (record_every < 1) throw ConfigError("record_every", "must be at least 1");
    std::vector<long> snaps;
    const long t0 = ensemble0.t();
    for (long t = 0; t < T; t += record_every) snaps.push_back(t0 + t);
    snaps.push_back(t0 + T);
    return run_snapshots(std::move(ensemble0), m, setting, snaps, threads);
}

double alignment(ConstVecView x, ConstVecView direction) {
    const double xn = norm(x);
    if (!(xn > 0.0)) throw DegenerateError("alignment: zero vector (degenerate particle)");
    return std::abs(inner(x, direction)) / xn;
}

ClosedFormAlignment regression_closed_form(ConstVecView x0, const ModelPair& m, double gamma, long T) {
    if (T < 0) throw ConfigError("T", "must be non-negative");
    const Vec& db = m.delta_b();
    const double along = inner(x0, db);
    if (along == 0.0) throw DegenerateError("degenerate initialization: alignment undefined");
    Vec perp(x0.begin(), x0.end());
    axpy(-along, db, perp);
    const double perp2 = inner(perp, perp);
    const double log_coeff = static_cast<double>(T) * std::log1p(m.gamma_tilde(gamma)) + std::log(std::abs(along));
    if (perp2 == 0.0) return {1.0, log_coeff, -std::numeric_limits<double>::infinity()};
    // ratio = perp2 / coeff^2 ; 1 - align^2 = ratio / (1 + ratio)
    const double log_ratio = std::log(perp2) - 2.0 * log_coeff;
    const double ratio = std::exp(log_ratio);
    const double log_sin2 = log_ratio - std::log1p(ratio);
    return {1.0 / std::sqrt(1.0 + ratio), log_coeff, log_sin2};
}

Vec regression_closed_form_state(ConstVecView x0, const ModelPair& m, double gamma, long T) {
    const Vec& db = m.delta_b();
    const double along = inner(x0, db);
    Vec x(x0.begin(), x0.end());
    const double grow = std::pow(1.0 + m.gamma_tilde(gamma), static_cast<double>(T));
    axpy((grow - 1.0) * along, db, x);
    return x;
}

}  // namespace advshift
