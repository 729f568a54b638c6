#include "bandit/policies/structured.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bandit/errors.hpp"
#include "bandit/policies/mab.hpp"

namespace bandit {

CascadeState make_cascade(std::size_t n_items) {
  return CascadeState{std::vector<double>(n_items, 1.0), std::vector<double>(n_items, 1.0)};
}

std::vector<std::size_t> cascade_sample(const CascadeState& state, std::size_t k, Rng& rng) {
  const std::size_t n = state.alpha.size();
  if (n == 0) fail(Errc::EmptyArmSet, "cascade_sample over zero items");
  if (k > n) {
    fail(Errc::KTooLarge, "ranking k " + std::to_string(k) + " exceeds " + std::to_string(n) + " items");
  }
  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = rng.beta(state.alpha[i], state.beta[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return theta[a] > theta[b]; });
  order.resize(k);
  return order;
}

CascadeState cascade_update(CascadeState state, const std::vector<std::size_t>& shown,
                            std::optional<std::size_t> click_position) {
  const std::size_t n = state.alpha.size();
  for (std::size_t item : shown) {
    if (item >= n) fail(Errc::UnknownArm, "shown item index " + std::to_string(item));
  }
  if (click_position) {
    if (*click_position >= shown.size()) {
      fail(Errc::PositionOutOfRange, "click at position " + std::to_string(*click_position) +
                                         " of " + std::to_string(shown.size()) + " shown");
    }
    for (std::size_t pos = 0; pos < *click_position; ++pos) state.beta[shown[pos]] += 1.0;
    state.alpha[shown[*click_position]] += 1.0;
  } else {
    for (std::size_t item : shown) state.beta[item] += 1.0;
  }
  return state;
}

GGIWeights GGIWeights::make(std::vector<double> raw) {
  if (raw.empty()) fail(Errc::LengthMismatch, "ggi weights are empty");
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] > 0.0)) fail(Errc::OutOfRange, "ggi weights must be positive");
    if (i > 0 && raw[i] > raw[i - 1]) fail(Errc::OutOfRange, "ggi weights must be nonincreasing");
    total += raw[i];
  }
  for (double& w : raw) w /= total;
  return GGIWeights{std::move(raw)};
}

double ggi_scalarize(const std::vector<double>& rewards, const GGIWeights& weights) {
  if (rewards.size() != weights.w.size()) {
    fail(Errc::LengthMismatch, "got " + std::to_string(rewards.size()) + " rewards for " +
                                   std::to_string(weights.w.size()) + " weights");
  }
  std::vector<double> sorted = rewards;
  std::sort(sorted.begin(), sorted.end());
  double value = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) value += weights.w[i] * sorted[i];
  return value;
}

std::size_t ggi_ts_sample(const std::vector<RLSState>& objectives, const Eigen::VectorXd& x,
                          const GGIWeights& weights, Rng& rng) {
  if (objectives.size() != weights.w.size()) {
    fail(Errc::LengthMismatch, "got " + std::to_string(objectives.size()) + " objectives for " +
                                   std::to_string(weights.w.size()) + " weights");
  }
  const std::size_t n_arms = objectives.front().arms.size();
  if (n_arms == 0) fail(Errc::EmptyArmSet, "ggi_ts_sample over zero arms");
  for (const RLSState& obj : objectives) {
    if (obj.arms.size() != n_arms) fail(Errc::LengthMismatch, "objectives disagree on arm count");
  }
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> draws(objectives.size());
  for (std::size_t a = 0; a < n_arms; ++a) {
    for (std::size_t o = 0; o < objectives.size(); ++o) {
      const LinearGaussian& arm = objectives[o].arms[a];
      if (arm.m.size() != x.size()) fail(Errc::DimensionMismatch, "context dim mismatch");
      double var = std::max(x.dot(arm.P * x), 0.0);
      draws[o] = arm.m.dot(x) + std::sqrt(var) * rng.gaussian();
    }
    double value = ggi_scalarize(draws, weights);
    if (value > best_value) {
      best_value = value;
      best = a;
    }
  }
  return best;
}

GreedyResult greedy_search(const SlotScoreFn& score, const SlottedArms& space,
                           const GreedyBudget& budget) {
  const std::size_t n_slots = space.slots.size();
  if (n_slots == 0) fail(Errc::EmptyArmSet, "greedy_search over zero slots");
  for (const Slot& slot : space.slots) {
    if (slot.options.empty()) fail(Errc::EmptyArmSet, "slot '" + slot.name + "' has no options");
  }

  const auto start = std::chrono::steady_clock::now();
  auto expired = [&] { return std::chrono::steady_clock::now() - start >= budget.deadline; };

  GreedyResult result;
  result.assignment.assign(n_slots, 0);
  result.score = -std::numeric_limits<double>::infinity();

  bool scored_anything = false;
  for (std::size_t pass = 0; pass < budget.max_passes; ++pass) {
    const std::vector<std::size_t> before = result.assignment;
    for (std::size_t s = 0; s < n_slots; ++s) {
      if (expired()) {
        result.deadline_expired = true;
        result.deadline_before_first_pass = !scored_anything;
        if (!scored_anything) {
          result.score = score(result.assignment);
          ++result.evaluations;
        }
        return result;
      }
      const std::size_t n_opts = space.slots[s].options.size();
      std::size_t best_opt = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t opt = 0; opt < n_opts; ++opt) {
        result.assignment[s] = opt;
        double value = score(result.assignment);
        ++result.evaluations;
        if (value > best_score) {
          best_score = value;
          best_opt = opt;
        }
      }
      scored_anything = true;
      result.assignment[s] = best_opt;
      result.score = best_score;
    }
    ++result.passes;
    if (result.assignment == before) break;
  }
  return result;
}

}  // namespace bandit
