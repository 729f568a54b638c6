#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "bandit/config.hpp"
#include "bandit/context.hpp"
#include "bandit/policies/linear.hpp"
#include "bandit/policies/mab.hpp"
#include "bandit/policies/structured.hpp"
#include "bandit/rng.hpp"

namespace bandit {

// Maps arm ids to dense indices. Explicit spaces index in declaration order;
// slotted spaces use the mixed-radix rank of the option assignment (last slot
// fastest), so ids are materialized on demand and huge spaces stay cheap.
class ArmIndexer {
 public:
  explicit ArmIndexer(const ArmSpace& space);

  bool slotted() const { return space_.slotted(); }
  std::size_t size() const;
  std::string id_of(std::size_t index) const;
  std::size_t index_of(const std::string& arm_id) const;  // throws UnknownArm
  // Slotted spaces only.
  std::vector<std::size_t> assignment_of(std::size_t index) const;
  std::size_t index_of_assignment(const std::vector<std::size_t>& assignment) const;

  const ArmSpace& space() const { return space_; }

 private:
  ArmSpace space_;
  std::unordered_map<std::string, std::size_t> by_id_;  // explicit only
  std::vector<std::size_t> stride_;                     // slotted only
  std::size_t total_ = 0;
};

// Feature layout for the one shared linear model a slotted space trains: the
// encoded context first, then one one-hot block per slot.
class LinearFeatureMap {
 public:
  LinearFeatureMap(std::size_t context_dim, const SlottedArms& slots);

  std::size_t dim() const { return dim_; }
  std::size_t context_dim() const { return context_dim_; }
  std::size_t feature_index(std::size_t slot, std::size_t option) const;
  Eigen::VectorXd combine(const ContextVector& x, const std::vector<std::size_t>& assignment) const;
  // w . phi(x, assignment) without materializing phi: callers precompute the
  // context part once and add per-slot weights during search.
  double context_score(const Eigen::VectorXd& w, const ContextVector& x) const;
  double slot_score(const Eigen::VectorXd& w, std::size_t slot, std::size_t option) const;
  double score(const Eigen::VectorXd& w, const ContextVector& x,
               const std::vector<std::size_t>& assignment) const;

 private:
  std::size_t context_dim_ = 0;
  std::vector<std::size_t> offset_;
  std::size_t dim_ = 0;
};

// Per-objective per-arm gaussians (multi-objective over explicit arms).
struct MultiRLSState {
  std::vector<RLSState> objectives;
};

// Per-objective shared gaussians (multi-objective over slotted spaces).
struct MultiSharedState {
  std::vector<LinearGaussian> objectives;
};

using PolicyVariant = std::variant<EGState, BetaState, Exp3State, RLSState, BLRState,
                                   LinearGaussian, LinearLogistic, CascadeState, MultiRLSState,
                                   MultiSharedState>;

struct PolicyState {
  // Training batches applied so far; drives the inverse-gap-weighting
  // exploration schedule.
  int64_t update_batches = 0;
  PolicyVariant state;
};

struct SampleOutcome {
  // Indices into the bandit's ArmIndexer; one entry except for rankings,
  // which carry ranking_k in display order.
  std::vector<std::size_t> arms;
  // Draw probability when the policy samples from an explicit distribution
  // (Exp3, inverse gap weighting); logged with the impression so training can
  // importance-weight.
  std::optional<double> probability;
};

// Fresh state for the configured algorithm: tabular policies get one slot per
// enumerated arm, explicit linear policies one model per arm, slotted linear
// policies one shared model over the feature map.
PolicyState init_policy(const BanditConfig& config);

// Dispatches to the algorithm's sampling rule. Frozen configs switch every
// family to its exploit action (posterior-mean argmax, epsilon 0, ranking by
// posterior means).
SampleOutcome sample_policy(const BanditConfig& config, const PolicyState& policy,
                            const ContextVector& x, Rng& rng);

// The dimension sample/update expect for encoded contexts under this config.
std::size_t policy_context_dim(const BanditConfig& config);

}  // namespace bandit
