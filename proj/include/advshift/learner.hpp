#pragma once

// One round of the sequential game: the adversary shifts the covariates for T
// steps, the shifted particles are renormalized to the unit sphere, responses
// are drawn from the fixed conditional model, and the learner takes gradient
// step(s) from theta0.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "advshift/dynamics.hpp"
#include "advshift/linalg.hpp"
#include "advshift/objectives.hpp"

namespace advshift {

struct Sample {
    Vec x;
    double y;
};

/// theta - eta (1/n) sum_i d/dtheta loss(<x_i, theta>, y_i)
Vec learner_step(ConstVecView theta, std::span<const Sample> samples, Setting setting, double eta);

enum class ResponseMode {
    Sampled,
    /// y = E[y | x]: <x, theta*> or sigma(<x, theta*>)
    NoiseFree,
};

/// The shifted empirical measure on the unit sphere.
struct GameStage {
    std::vector<Vec> particles;  ///< unit norm
    std::size_t excluded = 0;    ///< zero-norm particles dropped before renormalizing
};

GameStage renormalize(const ParticleEnsemble& shifted);

/// One response per particle, particle i drawn from the (seed, Response, i) stream.
std::vector<Sample> draw_samples(const GameStage& stage, Setting setting, ConstVecView theta_star, std::uint64_t seed,
                                 ResponseMode mode);

struct LearnerOutcome {
    Vec theta1;
    double err_norm;                   ///< |theta* - theta1|
    std::optional<double> curse_ratio;  ///< <theta*-theta1, theta*> / <theta*-theta0, theta*>
    std::size_t excluded = 0;
};

LearnerOutcome evaluate_outcome(Vec theta1, const ModelPair& m);

struct LearnerSettings {
    double eta = 0.5;
    int steps = 1;
    std::uint64_t seed = 0;
    ResponseMode mode = ResponseMode::Sampled;
};

/// Learner reaction to an already shifted ensemble.
LearnerOutcome respond(const ModelPair& m, Setting setting, const ParticleEnsemble& shifted,
                       const LearnerSettings& learner);

/// Shift for T steps, then respond.
LearnerOutcome play_round(const ModelPair& m, Setting setting, ParticleEnsemble ensemble0, long T,
                          const LearnerSettings& learner, unsigned threads = 1);

/// theta* - theta split along delta_b, along theta*/|theta*| orthogonalized
/// against delta_b, and the remainder. The squared parts sum to |theta* - theta|^2.
struct ErrDecomposition {
    double along_b;
    double along_star;
    double residual;
};
ErrDecomposition err_decomposition(ConstVecView theta, const ModelPair& m);

}  // namespace advshift
