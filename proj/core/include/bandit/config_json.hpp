#pragma once

#include <string>

#include "bandit/config.hpp"

namespace bandit {

// Parses a config document, then runs validate_config and throws InvalidConfig
// (message lists every violation) if anything is off. Unknown top-level or
// hyperparameter keys are SchemaViolation; malformed JSON is MalformedRecord.
BanditConfig config_from_json(const std::string& text);

// Canonical form: sorted keys, every field present including defaults, so two
// equal configs serialize to the same bytes.
std::string config_to_json(const BanditConfig& config);

// Field-wise equality modulo lifecycle status. put_config uses this to decide
// whether an update touches immutable fields.
bool config_equivalent_ignoring_status(const BanditConfig& a, const BanditConfig& b);

}  // namespace bandit
