#pragma once

// Explicit-Euler adversarial covariate shift on a particle ensemble,
//   x_{t+1} = x_t + gamma * d/dx U(theta0, delta_x) |_{x = x_t},
// with alignment diagnostics and the closed-form regression trajectory.

#include <cstddef>
#include <functional>
#include <vector>

#include "advshift/linalg.hpp"
#include "advshift/objectives.hpp"

namespace advshift {

/// The discrete measure (1/n) sum_i delta_{x_i}. The true particle i is
/// exp(log_scale(i)) * particle(i); the scale only moves in regression, where
/// the update is linear in x and blow-up is expected.
class ParticleEnsemble {
public:
    ParticleEnsemble(std::vector<Vec> particles, double gamma);

    std::size_t size() const noexcept { return particles_.size(); }
    std::size_t dim() const noexcept { return particles_.front().size(); }
    double gamma() const noexcept { return gamma_; }
    long t() const noexcept { return t_; }

    const Vec& particle(std::size_t i) const { return particles_[i]; }
    double log_scale(std::size_t i) const { return log_scale_[i]; }
    bool stationary(std::size_t i) const { return stationary_[i] != 0; }
    std::size_t stationary_count() const;

    /// Unscaled copy of particle i; may overflow to inf for long regression runs.
    Vec true_particle(std::size_t i) const;

    /// Flags particles sitting on a fixed point of the dynamic (zero gradient
    /// for all t in exact arithmetic). Flagged particles are kept but frozen.
    void flag_stationary(const ModelPair& m, Setting setting);

    friend ParticleEnsemble step(ParticleEnsemble ensemble, const ModelPair& m, Setting setting, unsigned threads);

private:
    std::vector<Vec> particles_;
    std::vector<double> log_scale_;
    std::vector<char> stationary_;
    double gamma_;
    long t_ = 0;
};

/// One Euler step for every particle; particles are independent so the result
/// does not depend on `threads`. Throws NumericError on non-finite updates.
ParticleEnsemble step(ParticleEnsemble ensemble, const ModelPair& m, Setting setting, unsigned threads = 1);

struct ParticleDiagnostics {
    double align_b;   ///< |<x/|x|, delta_b>|, NaN if delta_b undefined
    double align_c;   ///< |<x/|x|, delta_c>|, NaN if delta_c undefined
    double sin2_b;    ///< 1 - align_b^2 from the orthogonal residual (no cancellation)
    double sin2_c;    ///< 1 - align_c^2, same construction
    double a;         ///< <x, theta0>
    double b;         ///< <x, theta* - theta0>
    double log_norm;  ///< natural log of |x|
    bool stationary;
};

struct AlignmentRecord {
    long t;
    std::vector<ParticleDiagnostics> particles;
};

AlignmentRecord record_alignment(const ParticleEnsemble& ensemble, const ModelPair& m);

struct RunResult {
    std::vector<AlignmentRecord> records;
    ParticleEnsemble final_ensemble;
};

/// Steps T times, recording at t = 0, every, 2 every, ..., and at T.
RunResult run(ParticleEnsemble ensemble0, const ModelPair& m, Setting setting, long T, long record_every,
              unsigned threads = 1);

using SnapshotObserver = std::function<void(const ParticleEnsemble&)>;

/// Steps up to the last snapshot, recording at each listed time (sorted, >= 0).
/// `observer`, if set, sees the ensemble at every snapshot.
RunResult run_snapshots(ParticleEnsemble ensemble0, const ModelPair& m, Setting setting,
                        const std::vector<long>& snapshots, unsigned threads = 1,
                        const SnapshotObserver& observer = {});

/// |<x, direction>| / |x|; throws DegenerateError for x = 0.
double alignment(ConstVecView x, ConstVecView direction);

struct ClosedFormAlignment {
    double align_b;
    /// T log(1 + gamma~) + log|<x0, delta_b>|
    double log_coeff;
    /// log(1 - align_b^2), accurate far beyond double saturation of align_b
    double log_sin2;
};

/// Exact regression alignment after T steps, evaluated in the log domain.
ClosedFormAlignment regression_closed_form(ConstVecView x0, const ModelPair& m, double gamma, long T);

/// x_T = (1 + gamma~)^T <x0, delta_b> delta_b + (I - delta_b delta_b^T) x0
Vec regression_closed_form_state(ConstVecView x0, const ModelPair& m, double gamma, long T);

}  // namespace advshift
