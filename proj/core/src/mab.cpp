#include "bandit/policies/mab.hpp"

#include <cmath>

#include "bandit/errors.hpp"

namespace bandit {

std::size_t argmax_index(const std::vector<double>& values) {
  if (values.empty()) fail(Errc::EmptyArmSet, "argmax over zero arms");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
  if (probs.empty()) fail(Errc::EmptyArmSet, "categorical draw over zero arms");
  double u = rng.uniform01();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

static void check_arm(std::size_t arm, std::size_t n_arms) {
  if (arm >= n_arms) {
    fail(Errc::UnknownArm, "arm index " + std::to_string(arm) + " of " + std::to_string(n_arms));
  }
}

EGState make_eg(std::size_t n_arms) {
  return EGState{std::vector<int64_t>(n_arms, 0), std::vector<double>(n_arms, 0.0)};
}

std::size_t eg_sample(const EGState& state, double epsilon, Rng& rng) {
  if (state.mean.empty()) fail(Errc::EmptyArmSet, "eg_sample over zero arms");
  if (epsilon > 0.0 && rng.uniform01() < epsilon) return rng.uniform_index(state.mean.size());
  return argmax_index(state.mean);
}

EGState eg_update(EGState state, std::size_t arm, double reward) {
  check_arm(arm, state.mean.size());
  state.n[arm] += 1;
  state.mean[arm] += (reward - state.mean[arm]) / static_cast<double>(state.n[arm]);
  return state;
}

BetaState make_beta(std::size_t n_arms) {
  return BetaState{std::vector<double>(n_arms, 1.0), std::vector<double>(n_arms, 1.0)};
}

std::size_t beta_sample(const BetaState& state, Rng& rng) {
  if (state.alpha.empty()) fail(Errc::EmptyArmSet, "beta_sample over zero arms");
  std::size_t best = 0;
  double best_theta = -1.0;
  for (std::size_t i = 0; i < state.alpha.size(); ++i) {
    double theta = rng.beta(state.alpha[i], state.beta[i]);
    if (theta > best_theta) {
      best_theta = theta;
      best = i;
    }
  }
  return best;
}

BetaState beta_update(BetaState state, std::size_t arm, double reward) {
  check_arm(arm, state.alpha.size());
  if (reward != 0.0 && reward != 1.0) {
    fail(Errc::NonBinaryReward, "beta_update needs reward in {0,1}, got " + std::to_string(reward));
  }
  if (reward == 1.0) {
    state.alpha[arm] += 1.0;
  } else {
    state.beta[arm] += 1.0;
  }
  return state;
}

Exp3State make_exp3(std::size_t n_arms) {
  return Exp3State{std::vector<double>(n_arms, 1.0)};
}

std::vector<double> exp3_distribution(const Exp3State& state, double gamma) {
  const std::size_t k = state.w.size();
  if (k == 0) fail(Errc::EmptyArmSet, "exp3_distribution over zero arms");
  double total = 0.0;
  for (double w : state.w) total += w;
  std::vector<double> p(k);
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = (1.0 - gamma) * state.w[i] / total + gamma / static_cast<double>(k);
  }
  return p;
}

Exp3State exp3_update(Exp3State state, std::size_t arm, double reward, double p_arm, double gamma) {
  const std::size_t k = state.w.size();
  check_arm(arm, k);
  if (reward < 0.0 || reward > 1.0) {
    fail(Errc::RewardOutOfRange, "exp3_update needs reward in [0,1], got " + std::to_string(reward));
  }
  if (!(p_arm > 0.0)) {
    fail(Errc::ZeroProbability, "exp3_update needs the draw probability, got " + std::to_string(p_arm));
  }
  double xhat = reward / p_arm;
  state.w[arm] *= std::exp(gamma * xhat / static_cast<double>(k));
  double max_w = 0.0;
  for (double w : state.w) max_w = std::max(max_w, w);
  for (double& w : state.w) w /= max_w;
  return state;
}

}  // namespace bandit
