#pragma once

#include <stdexcept>
#include <string>

namespace bandit {

enum class Errc {
  UnknownFeature,
  MissingFeature,
  OutOfRange,
  SpaceTooLarge,
  EmptyArmSet,
  UnknownArm,
  NonBinaryReward,
  ZeroProbability,
  RewardOutOfRange,
  DimensionMismatch,
  NonFiniteInput,
  EmptyBatch,
  NonBinaryLabel,
  NoConvergence,
  KTooLarge,
  PositionOutOfRange,
  LengthMismatch,
  NonFiniteScore,
  InvalidConfig,
  ImmutableFieldChanged,
  UnknownBandit,
  AlreadyFrozen,
  NotFrozen,
  Conflict,
  InvalidContext,
  Overloaded,
  RefreshFailed,
  SchemaViolation,
  AlgorithmMismatch,
  MalformedRecord,
  IoError,
};

const char* errc_name(Errc code);

class BanditError : public std::runtime_error {
 public:
  BanditError(Errc code, const std::string& message);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace bandit
