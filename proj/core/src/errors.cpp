#include "bandit/errors.hpp"

namespace bandit {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::UnknownFeature: return "UnknownFeature";
    case Errc::MissingFeature: return "MissingFeature";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::SpaceTooLarge: return "SpaceTooLarge";
    case Errc::EmptyArmSet: return "EmptyArmSet";
    case Errc::UnknownArm: return "UnknownArm";
    case Errc::NonBinaryReward: return "NonBinaryReward";
    case Errc::ZeroProbability: return "ZeroProbability";
    case Errc::RewardOutOfRange: return "RewardOutOfRange";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::NonBinaryLabel: return "NonBinaryLabel";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::PositionOutOfRange: return "PositionOutOfRange";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonFiniteScore: return "NonFiniteScore";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ImmutableFieldChanged: return "ImmutableFieldChanged";
    case Errc::UnknownBandit: return "UnknownBandit";
    case Errc::AlreadyFrozen: return "AlreadyFrozen";
    case Errc::NotFrozen: return "NotFrozen";
    case Errc::Conflict: return "Conflict";
    case Errc::InvalidContext: return "InvalidContext";
    case Errc::Overloaded: return "Overloaded";
    case Errc::RefreshFailed: return "RefreshFailed";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::AlgorithmMismatch: return "AlgorithmMismatch";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

BanditError::BanditError(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw BanditError(code, message); }

}  // namespace bandit
