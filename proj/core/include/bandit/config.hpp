#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bandit {

enum class Algorithm {
  EpsilonGreedy,
  ThompsonBernoulli,
  Exp3,
  LinearTS,
  LinearEG,
  LinearIGW,
  CascadeTS,
  MultiObjectiveGGI,
};

const char* algorithm_name(Algorithm a);
std::optional<Algorithm> algorithm_from_name(const std::string& name);

enum class LifecycleStatus { Learning, Frozen };

// -- Arm spaces ---------------------------------------------------------

struct ExplicitArms {
  std::vector<std::string> ids;
};

struct Slot {
  std::string name;
  std::vector<std::string> options;
};

struct SlottedArms {
  std::vector<Slot> slots;
};

struct ArmSpace {
  std::variant<ExplicitArms, SlottedArms> space;

  bool slotted() const { return std::holds_alternative<SlottedArms>(space); }
  const ExplicitArms& as_explicit() const { return std::get<ExplicitArms>(space); }
  const SlottedArms& as_slotted() const { return std::get<SlottedArms>(space); }

  // Total distinct arms; the product of option counts for slotted spaces.
  // Saturates at SIZE_MAX on overflow.
  std::size_t total_arms() const;
};

// Arms beyond this count cannot be enumerated; callers fall back to greedy
// search over the slots.
inline constexpr std::size_t kEnumerationCap = 1'000'000;

// Slot options join with '/' in slot order to form a slotted arm id.
inline constexpr char kSlotSeparator = '/';

// Deterministic arm listing: explicit spaces keep declaration order; slotted
// spaces enumerate the option product with the last slot varying fastest.
// Throws SpaceTooLarge past kEnumerationCap.
std::vector<std::string> enumerate_arms(const ArmSpace& space);

std::string slotted_arm_id(const SlottedArms& slots, const std::vector<std::size_t>& assignment);
// Inverse of slotted_arm_id; throws UnknownArm if the id does not parse.
std::vector<std::size_t> parse_slotted_arm_id(const SlottedArms& slots, const std::string& arm_id);

// -- Features and rewards ------------------------------------------------

struct CategoricalKind {
  std::size_t cardinality = 0;
};

struct NumericKind {
  double lo = 0.0;
  double hi = 1.0;
};

struct FeatureSpec {
  std::string name;
  std::variant<CategoricalKind, NumericKind> kind;

  bool categorical() const { return std::holds_alternative<CategoricalKind>(kind); }
};

struct RewardSpec {
  enum class Kind { Binary, Continuous, MultiObjective };
  Kind kind = Kind::Binary;
  std::size_t objectives = 1;  // > 1 only for MultiObjective
};

struct HyperParams {
  double epsilon = 0.1;
  double exp3_gamma = 0.1;
  double prior_variance = 1.0;
  double igw_gamma0 = 1.0;
  std::vector<double> ggi_weights;  // required for MultiObjectiveGGI
  std::size_t ranking_k = 1;
  std::size_t greedy_passes = 2;
  std::chrono::milliseconds latency_budget{50};
};

struct BanditConfig {
  std::string bandit_id;
  Algorithm algorithm = Algorithm::ThompsonBernoulli;
  ArmSpace arm_space;
  std::vector<FeatureSpec> context_schema;
  RewardSpec reward_spec;
  HyperParams hyperparameters;
  std::chrono::seconds attribution_window{3600};
  LifecycleStatus status = LifecycleStatus::Learning;

  bool frozen() const { return status == LifecycleStatus::Frozen; }
};

// Returns every violated invariant, empty when the config can back a live
// policy. Never throws.
std::vector<std::string> validate_config(const BanditConfig& config);

// True when the algorithm consumes the context vector (linear families).
bool algorithm_contextual(Algorithm a);
// True for the tabular families that need one parameter slot per arm.
bool algorithm_tabular(Algorithm a);

}  // namespace bandit
