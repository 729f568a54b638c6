#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "bandit/config.hpp"
#include "bandit/policies/linear.hpp"
#include "bandit/rng.hpp"

namespace bandit {

// Beta posteriors over per-item attraction probabilities, cascade click model.
struct CascadeState {
  std::vector<double> alpha;
  std::vector<double> beta;
};

CascadeState make_cascade(std::size_t n_items);

// Top-k items by sampled attraction, descending, ties to smallest item index.
std::vector<std::size_t> cascade_sample(const CascadeState& state, std::size_t k, Rng& rng);

// Cascade credit: everything above the click is a skip (beta + 1), the
// clicked item a success (alpha + 1), everything below unobserved. Without a
// click every shown item is a skip.
CascadeState cascade_update(CascadeState state, const std::vector<std::size_t>& shown,
                            std::optional<std::size_t> click_position);

// Nonincreasing positive weights, normalized to sum 1, largest weight on the
// worst objective.
struct GGIWeights {
  std::vector<double> w;

  static GGIWeights make(std::vector<double> raw);
};

// Sorts rewards ascending and dots them with the weights.
double ggi_scalarize(const std::vector<double>& rewards, const GGIWeights& weights);

// One Thompson draw per arm per objective, scalarized; argmax with ties to
// smallest arm index. Objective states must agree on arm count and dim.
std::size_t ggi_ts_sample(const std::vector<RLSState>& objectives, const Eigen::VectorXd& x,
                          const GGIWeights& weights, Rng& rng);

struct GreedyBudget {
  std::size_t max_passes = 2;
  std::chrono::milliseconds deadline{50};
};

struct GreedyResult {
  std::vector<std::size_t> assignment;  // option index per slot
  double score = 0.0;
  std::size_t evaluations = 0;
  std::size_t passes = 0;
  bool deadline_expired = false;
  // The deadline fired before the first slot sweep; assignment is the
  // untouched first-option start.
  bool deadline_before_first_pass = false;
};

using SlotScoreFn = std::function<double(const std::vector<std::size_t>&)>;

// Coordinate ascent over slots from the all-first-options assignment. Each
// pass sweeps the slots in order, trying every option with the rest held
// fixed (ties keep the earliest option). Stops on a no-change pass, after
// max_passes, or at the deadline, which is only checked between slot sweeps.
GreedyResult greedy_search(const SlotScoreFn& score, const SlottedArms& space,
                           const GreedyBudget& budget);

}  // namespace bandit
