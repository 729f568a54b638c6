#include "bandit/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "bandit/errors.hpp"

namespace bandit {

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::EpsilonGreedy: return "EpsilonGreedy";
    case Algorithm::ThompsonBernoulli: return "ThompsonBernoulli";
    case Algorithm::Exp3: return "Exp3";
    case Algorithm::LinearTS: return "LinearTS";
    case Algorithm::LinearEG: return "LinearEG";
    case Algorithm::LinearIGW: return "LinearIGW";
    case Algorithm::CascadeTS: return "CascadeTS";
    case Algorithm::MultiObjectiveGGI: return "MultiObjectiveGGI";
  }
  return "Unknown";
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
  static const std::pair<const char*, Algorithm> table[] = {
      {"EpsilonGreedy", Algorithm::EpsilonGreedy},
      {"ThompsonBernoulli", Algorithm::ThompsonBernoulli},
      {"Exp3", Algorithm::Exp3},
      {"LinearTS", Algorithm::LinearTS},
      {"LinearEG", Algorithm::LinearEG},
      {"LinearIGW", Algorithm::LinearIGW},
      {"CascadeTS", Algorithm::CascadeTS},
      {"MultiObjectiveGGI", Algorithm::MultiObjectiveGGI},
  };
  for (const auto& [n, a] : table) {
    if (name == n) return a;
  }
  return std::nullopt;
}

bool algorithm_contextual(Algorithm a) {
  switch (a) {
    case Algorithm::LinearTS:
    case Algorithm::LinearEG:
    case Algorithm::LinearIGW:
    case Algorithm::MultiObjectiveGGI:
      return true;
    default:
      return false;
  }
}

bool algorithm_tabular(Algorithm a) {
  switch (a) {
    case Algorithm::EpsilonGreedy:
    case Algorithm::ThompsonBernoulli:
    case Algorithm::Exp3:
      return true;
    default:
      return false;
  }
}

std::size_t ArmSpace::total_arms() const {
  if (!slotted()) return as_explicit().ids.size();
  std::size_t total = 1;
  for (const Slot& slot : as_slotted().slots) {
    if (slot.options.empty()) return 0;
    if (total > std::numeric_limits<std::size_t>::max() / slot.options.size()) {
      return std::numeric_limits<std::size_t>::max();
    }
    total *= slot.options.size();
  }
  return as_slotted().slots.empty() ? 0 : total;
}

std::string slotted_arm_id(const SlottedArms& slots, const std::vector<std::size_t>& assignment) {
  std::string id;
  for (std::size_t s = 0; s < slots.slots.size(); ++s) {
    if (s > 0) id.push_back(kSlotSeparator);
    id += slots.slots[s].options.at(assignment.at(s));
  }
  return id;
}

std::vector<std::size_t> parse_slotted_arm_id(const SlottedArms& slots, const std::string& arm_id) {
  std::vector<std::size_t> assignment;
  assignment.reserve(slots.slots.size());
  std::size_t pos = 0;
  for (std::size_t s = 0; s < slots.slots.size(); ++s) {
    std::size_t next = arm_id.find(kSlotSeparator, pos);
    bool last = s + 1 == slots.slots.size();
    std::string part = last ? arm_id.substr(pos)
                            : arm_id.substr(pos, next == std::string::npos ? std::string::npos
                                                                           : next - pos);
    if (!last && next == std::string::npos) {
      fail(Errc::UnknownArm, "slotted arm id '" + arm_id + "' has too few parts");
    }
    const auto& options = slots.slots[s].options;
    auto it = std::find(options.begin(), options.end(), part);
    if (it == options.end()) {
      fail(Errc::UnknownArm,
           "option '" + part + "' not in slot '" + slots.slots[s].name + "'");
    }
    assignment.push_back(static_cast<std::size_t>(it - options.begin()));
    pos = last ? arm_id.size() : next + 1;
  }
  if (pos != arm_id.size() && !slots.slots.empty()) {
    fail(Errc::UnknownArm, "slotted arm id '" + arm_id + "' has trailing parts");
  }
  return assignment;
}

std::vector<std::string> enumerate_arms(const ArmSpace& space) {
  if (!space.slotted()) return space.as_explicit().ids;
  const SlottedArms& slotted = space.as_slotted();
  std::size_t total = space.total_arms();
  if (total > kEnumerationCap) {
    fail(Errc::SpaceTooLarge, "slotted space has " + std::to_string(total) +
                                  " arms, enumeration cap is " + std::to_string(kEnumerationCap));
  }
  std::vector<std::string> ids;
  ids.reserve(total);
  std::vector<std::size_t> assignment(slotted.slots.size(), 0);
  if (total == 0) return ids;
  for (;;) {
    ids.push_back(slotted_arm_id(slotted, assignment));
    // Odometer: last slot varies fastest.
    std::size_t s = slotted.slots.size();
    while (s > 0) {
      --s;
      if (++assignment[s] < slotted.slots[s].options.size()) break;
      assignment[s] = 0;
      if (s == 0) return ids;
    }
    if (slotted.slots.empty()) return ids;
  }
}

namespace {

bool weights_nonincreasing_positive(const std::vector<double>& w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) return false;
    if (i > 0 && w[i] > w[i - 1]) return false;
  }
  return !w.empty();
}

bool valid_bandit_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> validate_config(const BanditConfig& config) {
  std::vector<std::string> violations;
  auto violate = [&](std::string msg) { violations.push_back(std::move(msg)); };

  if (!valid_bandit_id(config.bandit_id)) {
    violate("bandit_id must be 1-128 chars of [A-Za-z0-9._-]");
  }

  // Arm space.
  std::size_t total = config.arm_space.total_arms();
  if (total < 2) violate("arm_space needs >= 2 arms");
  if (!config.arm_space.slotted()) {
    std::unordered_set<std::string> seen;
    for (const std::string& id : config.arm_space.as_explicit().ids) {
      if (id.empty()) violate("explicit arm ids must be nonempty");
      if (!seen.insert(id).second) violate("duplicate arm id '" + id + "'");
    }
  } else {
    const auto& slots = config.arm_space.as_slotted().slots;
    if (slots.empty()) violate("slotted space needs >= 1 slot");
    std::unordered_set<std::string> slot_names;
    for (const Slot& slot : slots) {
      if (slot.name.empty()) violate("slot names must be nonempty");
      if (!slot_names.insert(slot.name).second) violate("duplicate slot name '" + slot.name + "'");
      if (slot.options.empty()) violate("slot '" + slot.name + "' needs >= 1 option");
      std::unordered_set<std::string> opts;
      for (const std::string& opt : slot.options) {
        if (opt.empty()) violate("slot '" + slot.name + "' has an empty option");
        if (opt.find(kSlotSeparator) != std::string::npos) {
          violate("slot option '" + opt + "' may not contain '" + std::string(1, kSlotSeparator) +
                  "'");
        }
        if (!opts.insert(opt).second) {
          violate("slot '" + slot.name + "' has duplicate option '" + opt + "'");
        }
      }
    }
  }

  // Context schema.
  std::unordered_set<std::string> feature_names;
  for (const FeatureSpec& f : config.context_schema) {
    if (f.name.empty()) violate("feature names must be nonempty");
    if (!feature_names.insert(f.name).second) violate("duplicate feature name '" + f.name + "'");
    if (f.categorical()) {
      if (std::get<CategoricalKind>(f.kind).cardinality < 1) {
        violate("categorical feature '" + f.name + "' needs cardinality >= 1");
      }
    } else {
      const auto& num = std::get<NumericKind>(f.kind);
      if (!(num.lo < num.hi)) violate("numeric feature '" + f.name + "' needs lo < hi");
    }
  }

  // Reward spec vs algorithm.
  const RewardSpec& reward = config.reward_spec;
  switch (reward.kind) {
    case RewardSpec::Kind::Binary:
    case RewardSpec::Kind::Continuous:
      if (reward.objectives != 1) violate("single-objective reward specs carry 1 objective");
      break;
    case RewardSpec::Kind::MultiObjective:
      if (reward.objectives < 2) violate("MultiObjective reward needs k >= 2 objectives");
      break;
  }

  const Algorithm algo = config.algorithm;
  const bool binary = reward.kind == RewardSpec::Kind::Binary;
  const bool continuous = reward.kind == RewardSpec::Kind::Continuous;
  const bool multi = reward.kind == RewardSpec::Kind::MultiObjective;

  switch (algo) {
    case Algorithm::ThompsonBernoulli:
      if (!binary) violate("ThompsonBernoulli requires Binary reward");
      break;
    case Algorithm::CascadeTS:
      if (!binary) violate("CascadeTS requires Binary reward");
      if (config.arm_space.slotted()) violate("CascadeTS requires an explicit item list");
      if (config.hyperparameters.ranking_k < 1) violate("CascadeTS needs ranking_k >= 1");
      if (!config.arm_space.slotted() && config.hyperparameters.ranking_k > total) {
        violate("ranking_k exceeds item count");
      }
      break;
    case Algorithm::LinearTS:
    case Algorithm::LinearEG:
    case Algorithm::LinearIGW:
      if (multi) violate(std::string(algorithm_name(algo)) + " requires Binary or Continuous reward");
      if (algo == Algorithm::LinearIGW && config.arm_space.slotted()) {
        violate("LinearIGW requires an explicit arm space");
      }
      break;
    case Algorithm::MultiObjectiveGGI:
      if (!multi) violate("MultiObjectiveGGI requires MultiObjective reward");
      if (config.hyperparameters.ggi_weights.size() != reward.objectives) {
        violate("ggi_weights length must equal the objective count");
      }
      break;
    case Algorithm::EpsilonGreedy:
    case Algorithm::Exp3:
      if (multi) violate(std::string(algorithm_name(algo)) + " requires Binary or Continuous reward");
      break;
  }

  if (algorithm_tabular(algo) && config.arm_space.slotted() && total > kEnumerationCap) {
    violate(std::string(algorithm_name(algo)) + " needs an enumerable arm space (<= " +
            std::to_string(kEnumerationCap) + " arms)");
  }

  // Hyperparameters.
  const HyperParams& hp = config.hyperparameters;
  if (!(hp.epsilon >= 0.0 && hp.epsilon <= 1.0)) violate("epsilon must be in [0,1]");
  if (!(hp.exp3_gamma > 0.0 && hp.exp3_gamma <= 1.0)) violate("exp3_gamma must be in (0,1]");
  if (!(hp.prior_variance > 0.0)) violate("prior_variance must be > 0");
  if (!(hp.igw_gamma0 > 0.0)) violate("igw_gamma0 must be > 0");
  if (!hp.ggi_weights.empty() && !weights_nonincreasing_positive(hp.ggi_weights)) {
    violate("ggi_weights must be positive and nonincreasing");
  }
  if (algo == Algorithm::MultiObjectiveGGI && hp.ggi_weights.empty()) {
    violate("ggi_weights must be positive and nonincreasing");
  }
  if (hp.ranking_k < 1) violate("ranking_k must be >= 1");
  if (hp.greedy_passes < 1) violate("greedy_passes must be >= 1");
  if (hp.latency_budget.count() <= 0) violate("latency_budget must be positive");

  if (config.attribution_window.count() <= 0) violate("attribution_window must be positive");

  return violations;
}

}  // namespace bandit
