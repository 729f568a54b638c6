#include "bandit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bandit/errors.hpp"

namespace bandit {

ArmIndexer::ArmIndexer(const ArmSpace& space) : space_(space) {
  total_ = space_.total_arms();
  if (space_.slotted()) {
    const auto& slots = space_.as_slotted().slots;
    stride_.assign(slots.size(), 1);
    for (std::size_t s = slots.size(); s-- > 1;) {
      stride_[s - 1] = stride_[s] * slots[s].options.size();
    }
  } else {
    const auto& ids = space_.as_explicit().ids;
    by_id_.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) by_id_.emplace(ids[i], i);
  }
}

std::size_t ArmIndexer::size() const { return total_; }

std::string ArmIndexer::id_of(std::size_t index) const {
  if (index >= total_) fail(Errc::UnknownArm, "arm index " + std::to_string(index) + " out of range");
  if (!space_.slotted()) return space_.as_explicit().ids[index];
  return slotted_arm_id(space_.as_slotted(), assignment_of(index));
}

std::size_t ArmIndexer::index_of(const std::string& arm_id) const {
  if (space_.slotted()) {
    return index_of_assignment(parse_slotted_arm_id(space_.as_slotted(), arm_id));
  }
  auto it = by_id_.find(arm_id);
  if (it == by_id_.end()) fail(Errc::UnknownArm, "unknown arm '" + arm_id + "'");
  return it->second;
}

std::vector<std::size_t> ArmIndexer::assignment_of(std::size_t index) const {
  if (!space_.slotted()) fail(Errc::UnknownArm, "assignment_of on an explicit space");
  if (index >= total_) fail(Errc::UnknownArm, "arm index " + std::to_string(index) + " out of range");
  const auto& slots = space_.as_slotted().slots;
  std::vector<std::size_t> assignment(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    assignment[s] = index / stride_[s];
    index %= stride_[s];
  }
  return assignment;
}

std::size_t ArmIndexer::index_of_assignment(const std::vector<std::size_t>& assignment) const {
  if (!space_.slotted()) fail(Errc::UnknownArm, "index_of_assignment on an explicit space");
  const auto& slots = space_.as_slotted().slots;
  if (assignment.size() != slots.size()) {
    fail(Errc::UnknownArm, "assignment has " + std::to_string(assignment.size()) + " slots, space has " +
                               std::to_string(slots.size()));
  }
  std::size_t index = 0;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (assignment[s] >= slots[s].options.size()) {
      fail(Errc::UnknownArm, "option index " + std::to_string(assignment[s]) + " out of range in slot '" +
                                 slots[s].name + "'");
    }
    index += assignment[s] * stride_[s];
  }
  return index;
}

LinearFeatureMap::LinearFeatureMap(std::size_t context_dim, const SlottedArms& slots)
    : context_dim_(context_dim) {
  offset_.reserve(slots.slots.size());
  std::size_t at = context_dim;
  for (const Slot& slot : slots.slots) {
    offset_.push_back(at);
    at += slot.options.size();
  }
  dim_ = at;
}

std::size_t LinearFeatureMap::feature_index(std::size_t slot, std::size_t option) const {
  return offset_.at(slot) + option;
}

Eigen::VectorXd LinearFeatureMap::combine(const ContextVector& x,
                                          const std::vector<std::size_t>& assignment) const {
  if (static_cast<std::size_t>(x.size()) != context_dim_) {
    fail(Errc::DimensionMismatch, "context has dim " + std::to_string(x.size()) + ", expected " +
                                      std::to_string(context_dim_));
  }
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  phi.head(x.size()) = x;
  for (std::size_t s = 0; s < assignment.size(); ++s) {
    phi[static_cast<Eigen::Index>(feature_index(s, assignment[s]))] = 1.0;
  }
  return phi;
}

double LinearFeatureMap::context_score(const Eigen::VectorXd& w, const ContextVector& x) const {
  return w.head(x.size()).dot(x);
}

double LinearFeatureMap::slot_score(const Eigen::VectorXd& w, std::size_t slot,
                                    std::size_t option) const {
  return w[static_cast<Eigen::Index>(feature_index(slot, option))];
}

double LinearFeatureMap::score(const Eigen::VectorXd& w, const ContextVector& x,
                               const std::vector<std::size_t>& assignment) const {
  double value = context_score(w, x);
  for (std::size_t s = 0; s < assignment.size(); ++s) value += slot_score(w, s, assignment[s]);
  return value;
}

std::size_t policy_context_dim(const BanditConfig& config) {
  return context_dimension(config.context_schema);
}

namespace {

GreedyBudget greedy_budget(const BanditConfig& config) {
  return GreedyBudget{config.hyperparameters.greedy_passes, config.hyperparameters.latency_budget};
}

double igw_gamma_t(const BanditConfig& config, int64_t update_batches) {
  return config.hyperparameters.igw_gamma0 * std::sqrt(static_cast<double>(update_batches) + 1.0);
}

std::vector<double> beta_means(const std::vector<double>& alpha, const std::vector<double>& beta) {
  std::vector<double> means(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) means[i] = alpha[i] / (alpha[i] + beta[i]);
  return means;
}

// Top-k indices by value descending, ties to smallest index.
std::vector<std::size_t> top_k(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(k);
  return order;
}

SampleOutcome one_arm(std::size_t arm) { return SampleOutcome{{arm}, std::nullopt}; }

// Greedy maximization of a sampled or mean weight vector over the slot space.
std::size_t search_shared(const BanditConfig& config, const Eigen::VectorXd& w,
                          const ContextVector& x, const ArmIndexer& indexer) {
  const SlottedArms& slots = config.arm_space.as_slotted();
  LinearFeatureMap map(static_cast<std::size_t>(x.size()), slots);
  double base = map.context_score(w, x);
  auto score = [&](const std::vector<std::size_t>& assignment) {
    double value = base;
    for (std::size_t s = 0; s < assignment.size(); ++s) value += map.slot_score(w, s, assignment[s]);
    return value;
  };
  GreedyResult result = greedy_search(score, slots, greedy_budget(config));
  return indexer.index_of_assignment(result.assignment);
}

std::size_t search_shared_ggi(const BanditConfig& config, const std::vector<Eigen::VectorXd>& ws,
                              const ContextVector& x, const ArmIndexer& indexer,
                              const GGIWeights& weights) {
  const SlottedArms& slots = config.arm_space.as_slotted();
  LinearFeatureMap map(static_cast<std::size_t>(x.size()), slots);
  std::vector<double> base(ws.size());
  for (std::size_t o = 0; o < ws.size(); ++o) base[o] = map.context_score(ws[o], x);
  std::vector<double> draws(ws.size());
  auto score = [&](const std::vector<std::size_t>& assignment) {
    for (std::size_t o = 0; o < ws.size(); ++o) {
      double value = base[o];
      for (std::size_t s = 0; s < assignment.size(); ++s) {
        value += map.slot_score(ws[o], s, assignment[s]);
      }
      draws[o] = value;
    }
    return ggi_scalarize(draws, weights);
  };
  GreedyResult result = greedy_search(score, slots, greedy_budget(config));
  return indexer.index_of_assignment(result.assignment);
}

std::size_t random_slotted_arm(const BanditConfig& config, const ArmIndexer& indexer, Rng& rng) {
  const auto& slots = config.arm_space.as_slotted().slots;
  std::vector<std::size_t> assignment(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    assignment[s] = rng.uniform_index(slots[s].options.size());
  }
  return indexer.index_of_assignment(assignment);
}

}  // namespace

PolicyState init_policy(const BanditConfig& config) {
  auto violations = validate_config(config);
  if (!violations.empty()) fail(Errc::InvalidConfig, violations.front());

  const std::size_t total = config.arm_space.total_arms();
  const std::size_t d = policy_context_dim(config);
  const double pv = config.hyperparameters.prior_variance;
  const bool binary = config.reward_spec.kind == RewardSpec::Kind::Binary;

  PolicyState policy;
  switch (config.algorithm) {
    case Algorithm::EpsilonGreedy:
      policy.state = make_eg(total);
      break;
    case Algorithm::ThompsonBernoulli:
      policy.state = make_beta(total);
      break;
    case Algorithm::Exp3:
      policy.state = make_exp3(total);
      break;
    case Algorithm::CascadeTS:
      policy.state = make_cascade(total);
      break;
    case Algorithm::LinearTS:
    case Algorithm::LinearEG:
    case Algorithm::LinearIGW:
      if (config.arm_space.slotted()) {
        LinearFeatureMap map(d, config.arm_space.as_slotted());
        if (binary) {
          policy.state = make_logistic(map.dim(), pv);
        } else {
          policy.state = make_gaussian(map.dim(), pv);
        }
      } else if (binary) {
        policy.state = make_blr_state(total, d, pv);
      } else {
        policy.state = make_rls_state(total, d, pv);
      }
      break;
    case Algorithm::MultiObjectiveGGI: {
      const std::size_t k = config.reward_spec.objectives;
      if (config.arm_space.slotted()) {
        LinearFeatureMap map(d, config.arm_space.as_slotted());
        MultiSharedState state;
        state.objectives.assign(k, make_gaussian(map.dim(), pv));
        policy.state = std::move(state);
      } else {
        MultiRLSState state;
        state.objectives.assign(k, make_rls_state(total, d, pv));
        policy.state = std::move(state);
      }
      break;
    }
  }
  return policy;
}

SampleOutcome sample_policy(const BanditConfig& config, const PolicyState& policy,
                            const ContextVector& x, Rng& rng) {
  const ArmIndexer indexer(config.arm_space);
  const bool frozen = config.frozen();
  const HyperParams& hp = config.hyperparameters;

  switch (config.algorithm) {
    case Algorithm::EpsilonGreedy: {
      const auto& state = std::get<EGState>(policy.state);
      return one_arm(eg_sample(state, frozen ? 0.0 : hp.epsilon, rng));
    }
    case Algorithm::ThompsonBernoulli: {
      const auto& state = std::get<BetaState>(policy.state);
      if (frozen) return one_arm(argmax_index(beta_means(state.alpha, state.beta)));
      return one_arm(beta_sample(state, rng));
    }
    case Algorithm::Exp3: {
      const auto& state = std::get<Exp3State>(policy.state);
      if (frozen) return one_arm(argmax_index(state.w));
      std::vector<double> dist = exp3_distribution(state, hp.exp3_gamma);
      std::size_t arm = sample_categorical(dist, rng);
      return SampleOutcome{{arm}, dist[arm]};
    }
    case Algorithm::CascadeTS: {
      const auto& state = std::get<CascadeState>(policy.state);
      if (frozen) {
        return SampleOutcome{top_k(beta_means(state.alpha, state.beta), hp.ranking_k), std::nullopt};
      }
      return SampleOutcome{cascade_sample(state, hp.ranking_k, rng), std::nullopt};
    }
    case Algorithm::LinearTS: {
      if (config.arm_space.slotted()) {
        if (std::holds_alternative<LinearLogistic>(policy.state)) {
          const auto& model = std::get<LinearLogistic>(policy.state);
          Eigen::VectorXd w = frozen ? model.m : sample_weights(model, rng);
          return one_arm(search_shared(config, w, x, indexer));
        }
        const auto& model = std::get<LinearGaussian>(policy.state);
        Eigen::VectorXd w = frozen ? model.m : sample_weights(model, rng);
        return one_arm(search_shared(config, w, x, indexer));
      }
      if (std::holds_alternative<BLRState>(policy.state)) {
        const auto& state = std::get<BLRState>(policy.state);
        if (frozen) return one_arm(argmax_index(mean_scores(state, x)));
        return one_arm(linear_ts_sample(state, x, rng));
      }
      const auto& state = std::get<RLSState>(policy.state);
      if (frozen) return one_arm(argmax_index(mean_scores(state, x)));
      return one_arm(linear_ts_sample(state, x, rng));
    }
    case Algorithm::LinearEG: {
      if (!frozen && hp.epsilon > 0.0 && rng.uniform01() < hp.epsilon) {
        if (config.arm_space.slotted()) return one_arm(random_slotted_arm(config, indexer, rng));
        return one_arm(rng.uniform_index(indexer.size()));
      }
      if (config.arm_space.slotted()) {
        if (std::holds_alternative<LinearLogistic>(policy.state)) {
          return one_arm(search_shared(config, std::get<LinearLogistic>(policy.state).m, x, indexer));
        }
        return one_arm(search_shared(config, std::get<LinearGaussian>(policy.state).m, x, indexer));
      }
      if (std::holds_alternative<BLRState>(policy.state)) {
        return one_arm(argmax_index(mean_scores(std::get<BLRState>(policy.state), x)));
      }
      return one_arm(argmax_index(mean_scores(std::get<RLSState>(policy.state), x)));
    }
    case Algorithm::LinearIGW: {
      std::vector<double> scores = std::holds_alternative<BLRState>(policy.state)
                                       ? mean_scores(std::get<BLRState>(policy.state), x)
                                       : mean_scores(std::get<RLSState>(policy.state), x);
      if (frozen) return one_arm(argmax_index(scores));
      std::vector<double> dist = igw_distribution(scores, igw_gamma_t(config, policy.update_batches));
      std::size_t arm = sample_categorical(dist, rng);
      return SampleOutcome{{arm}, dist[arm]};
    }
    case Algorithm::MultiObjectiveGGI: {
      GGIWeights weights = GGIWeights::make(hp.ggi_weights);
      if (config.arm_space.slotted()) {
        const auto& state = std::get<MultiSharedState>(policy.state);
        std::vector<Eigen::VectorXd> ws;
        ws.reserve(state.objectives.size());
        for (const LinearGaussian& model : state.objectives) {
          ws.push_back(frozen ? model.m : sample_weights(model, rng));
        }
        return one_arm(search_shared_ggi(config, ws, x, indexer, weights));
      }
      const auto& state = std::get<MultiRLSState>(policy.state);
      if (frozen) {
        std::size_t n = indexer.size();
        std::vector<double> values(n);
        std::vector<double> scores(state.objectives.size());
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t o = 0; o < state.objectives.size(); ++o) {
            scores[o] = rls_predict(state.objectives[o].arms[a], x);
          }
          values[a] = ggi_scalarize(scores, weights);
        }
        return one_arm(argmax_index(values));
      }
      return one_arm(ggi_ts_sample(state.objectives, x, weights, rng));
    }
  }
  fail(Errc::AlgorithmMismatch, "unhandled algorithm");
}

}  // namespace bandit
