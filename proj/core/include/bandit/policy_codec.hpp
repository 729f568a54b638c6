#pragma once

#include <string>

#include "bandit/policy.hpp"

namespace bandit {

// Serializes policy state to the parameter-document JSON: per-arm parameter
// objects keyed by arm id, with dimension and arm order recorded for
// integrity checks. Canonical (sorted keys), so equal states produce equal
// bytes.
std::string encode_policy(const BanditConfig& config, const PolicyState& policy);

// Inverse of encode_policy. Throws MalformedRecord for broken JSON,
// AlgorithmMismatch when the document's kind does not fit the config,
// DimensionMismatch when the recorded dim disagrees with the schema, and
// SchemaViolation when arms are missing or extra.
PolicyState decode_policy(const BanditConfig& config, const std::string& text);

}  // namespace bandit
