#include "advshift/learner.hpp"

#include <cmath>

#include "advshift/errors.hpp"

namespace advshift {

Vec learner_step(ConstVecView theta, std::span<const Sample> samples, Setting setting, double eta) {
    if (samples.empty()) throw DegenerateError("learner_step: empty sample set");
    Vec grad(theta.size(), 0.0);
    for (const Sample& s : samples) {
        const double f = inner(s.x, theta);
        const double coeff = (setting == Setting::Regression) ? 2.0 * (f - s.y) : sigmoid(f) - s.y;
        axpy(coeff, s.x, grad);
    }
    Vec out(theta.begin(), theta.end());
    axpy(-eta / static_cast<double>(samples.size()), grad, out);
    return out;
}

GameStage renormalize(const ParticleEnsemble& shifted) {
    GameStage stage;
    stage.particles.reserve(shifted.size());
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        const Vec& x = shifted.particle(i);
        if (!(norm(x) > 0.0)) {
            ++stage.excluded;
            continue;
        }
        stage.particles.push_back(normalize(x));
    }
    if (stage.particles.empty()) throw DegenerateError("renormalize: every particle is degenerate (zero norm)");
    return stage;
}

std::vector<Sample> draw_samples(const GameStage& stage, Setting setting, ConstVecView theta_star, std::uint64_t seed,
                                 ResponseMode mode) {
    std::vector<Sample> samples;
    samples.reserve(stage.particles.size());
    for (std::size_t i = 0; i < stage.particles.size(); ++i) {
        const Vec& x = stage.particles[i];
        double y;
        if (mode == ResponseMode::NoiseFree) {
            const double mean = inner(x, theta_star);
            y = setting == Setting::Regression ? mean : sigmoid(mean);
        } else {
            Stream rng(seed, Domain::Response, i);
            y = sample_response(setting, theta_star, x, rng);
        }
        samples.push_back({x, y});
    }
    return samples;
}

LearnerOutcome evaluate_outcome(Vec theta1, const ModelPair& m) {
    LearnerOutcome out;
    const Vec err = subtract(m.theta_star(), theta1);
    out.err_norm = norm(err);
    const double denom = inner(m.residual(), m.theta_star());
    if (std::abs(denom) > 1e-12 * m.theta_star_norm() * m.theta_star_norm()) {
        out.curse_ratio = inner(err, m.theta_star()) / denom;
    }
    out.theta1 = std::move(theta1);
    return out;
}

LearnerOutcome respond(const ModelPair& m, Setting setting, const ParticleEnsemble& shifted,
                       const LearnerSettings& learner) {
    if (learner.steps < 1) throw ConfigError("learner_steps", "must be at least 1");
    if (!(learner.eta > 0.0)) throw ConfigError("learner_eta", "must be positive");
    const GameStage stage = renormalize(shifted);
    const std::vector<Sample> samples = draw_samples(stage, setting, m.theta_star(), learner.seed, learner.mode);
    Vec theta = m.theta0();
    for (int k = 0; k < learner.steps; ++k) theta = learner_step(theta, samples, setting, learner.eta);
    LearnerOutcome out = evaluate_outcome(std::move(theta), m);
    out.excluded = stage.excluded;
    return out;
}

LearnerOutcome play_round(const ModelPair& m, Setting setting, ParticleEnsemble ensemble0, long T,
                          const LearnerSettings& learner, unsigned threads) {
    if (T < 0) throw ConfigError("T", "must be non-negative");
    ensemble0.flag_stationary(m, setting);
    for (long t = 0; t < T; ++t) ensemble0 = step(std::move(ensemble0), m, setting, threads);
    return respond(m, setting, ensemble0, learner);
}

ErrDecomposition err_decomposition(ConstVecView theta, const ModelPair& m) {
    Vec e = subtract(m.theta_star(), theta);
    ErrDecomposition out{0.0, 0.0, 0.0};
    if (m.has_delta_b()) {
        out.along_b = inner(e, m.delta_b());
        axpy(-out.along_b, m.delta_b(), e);
    }
    if (m.theta_star_norm() > 0.0) {
        Vec w = scaled(1.0 / m.theta_star_norm(), m.theta_star());
        if (m.has_delta_b()) axpy(-inner(w, m.delta_b()), m.delta_b(), w);
        const double wn = norm(w);
        if (wn > 1e-12) {
            for (double& v : w) v /= wn;
            out.along_star = inner(e, w);
            axpy(-out.along_star, w, e);
        }
    }
    out.residual = norm(e);
    return out;
}

}  // namespace advshift
