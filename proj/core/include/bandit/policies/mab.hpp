#pragma once

#include <cstdint>
#include <vector>

#include "bandit/rng.hpp"

namespace bandit {

// Argmax with ties broken by smallest index. Throws EmptyArmSet.
std::size_t argmax_index(const std::vector<double>& values);

// Draws an index from an explicit probability vector by inverse CDF.
// Probabilities must be nonnegative and sum to ~1; the last index absorbs
// floating-point slack.
std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng);

// Epsilon-greedy over running per-arm reward means.
struct EGState {
  std::vector<int64_t> n;
  std::vector<double> mean;
};

EGState make_eg(std::size_t n_arms);
std::size_t eg_sample(const EGState& state, double epsilon, Rng& rng);
EGState eg_update(EGState state, std::size_t arm, double reward);

// Beta-Bernoulli Thompson sampling, Beta(1,1) prior.
struct BetaState {
  std::vector<double> alpha;
  std::vector<double> beta;
};

BetaState make_beta(std::size_t n_arms);
std::size_t beta_sample(const BetaState& state, Rng& rng);
BetaState beta_update(BetaState state, std::size_t arm, double reward);

// Exp3 exponential weights. Weights are rescaled to max 1 after every update
// so long horizons cannot overflow; the induced distribution only depends on
// weight ratios.
struct Exp3State {
  std::vector<double> w;
};

Exp3State make_exp3(std::size_t n_arms);
// p_a = (1 - gamma) * w_a / sum(w) + gamma / K
std::vector<double> exp3_distribution(const Exp3State& state, double gamma);
// Importance-weighted update for the drawn arm; p_arm is the probability the
// arm was drawn with.
Exp3State exp3_update(Exp3State state, std::size_t arm, double reward, double p_arm, double gamma);

}  // namespace bandit
