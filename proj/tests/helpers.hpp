#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "bandit/config.hpp"

// Config builders and scratch directories shared by the test binaries.

inline bandit::BanditConfig tabular_config(const std::string& id, std::size_t k,
                                           bandit::Algorithm algo) {
  bandit::BanditConfig c;
  c.bandit_id = id;
  c.algorithm = algo;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back("a" + std::to_string(i));
  c.arm_space.space = bandit::ExplicitArms{std::move(ids)};
  c.reward_spec.kind = algo == bandit::Algorithm::EpsilonGreedy
                           ? bandit::RewardSpec::Kind::Continuous
                           : bandit::RewardSpec::Kind::Binary;
  return c;
}

inline bandit::BanditConfig linear_config(const std::string& id, std::size_t k,
                                          bandit::Algorithm algo,
                                          bandit::RewardSpec::Kind kind) {
  bandit::BanditConfig c = tabular_config(id, k, algo);
  c.reward_spec.kind = kind;
  c.context_schema = {
      bandit::FeatureSpec{"x0", bandit::NumericKind{0.0, 1.0}},
      bandit::FeatureSpec{"x1", bandit::NumericKind{-1.0, 1.0}},
  };
  return c;
}

inline bandit::BanditConfig cascade_config(const std::string& id, std::size_t items,
                                           std::size_t k) {
  bandit::BanditConfig c = tabular_config(id, items, bandit::Algorithm::CascadeTS);
  c.hyperparameters.ranking_k = k;
  return c;
}

inline bandit::BanditConfig ggi_config(const std::string& id, std::size_t k,
                                       std::size_t objectives) {
  bandit::BanditConfig c = tabular_config(id, k, bandit::Algorithm::MultiObjectiveGGI);
  c.reward_spec.kind = bandit::RewardSpec::Kind::MultiObjective;
  c.reward_spec.objectives = objectives;
  c.hyperparameters.ggi_weights.clear();
  for (std::size_t i = 0; i < objectives; ++i) {
    c.hyperparameters.ggi_weights.push_back(static_cast<double>(objectives - i));
  }
  return c;
}

inline bandit::BanditConfig slotted_config(const std::string& id, bandit::Algorithm algo,
                                           bandit::RewardSpec::Kind kind) {
  bandit::BanditConfig c;
  c.bandit_id = id;
  c.algorithm = algo;
  c.arm_space.space = bandit::SlottedArms{{
      bandit::Slot{"hero", {"h0", "h1", "h2"}},
      bandit::Slot{"rail", {"r0", "r1"}},
  }};
  c.reward_spec.kind = kind;
  c.context_schema = {bandit::FeatureSpec{"x0", bandit::NumericKind{0.0, 1.0}}};
  return c;
}

// Fresh directory under the system temp root, removed when the guard dies.
class ScopedDir {
 public:
  explicit ScopedDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = (std::filesystem::temp_directory_path() /
             ("bandit_" + tag + "_" + std::to_string(counter.fetch_add(1)) + "_" +
              std::to_string(static_cast<unsigned long>(::getpid()))))
                .string();
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScopedDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScopedDir(const ScopedDir&) = delete;
  ScopedDir& operator=(const ScopedDir&) = delete;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};
