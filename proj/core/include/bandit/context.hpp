#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "bandit/config.hpp"

namespace bandit {

// Dense encoded context: index 0 is a fixed 1.0 intercept, followed by one
// one-hot block per categorical feature and one min-max-scaled entry per
// numeric feature, in schema order.
using ContextVector = Eigen::VectorXd;

using RawContext = std::map<std::string, double>;

std::size_t context_dimension(const std::vector<FeatureSpec>& schema);

// Pure: identical raw input yields byte-identical output.
// Throws MissingFeature / UnknownFeature / OutOfRange naming the feature.
ContextVector encode_context(const std::vector<FeatureSpec>& schema, const RawContext& raw);

}  // namespace bandit
