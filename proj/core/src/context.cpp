#include "bandit/context.hpp"

#include <cmath>

#include "bandit/errors.hpp"

namespace bandit {

std::size_t context_dimension(const std::vector<FeatureSpec>& schema) {
  std::size_t d = 1;  // intercept
  for (const FeatureSpec& f : schema) {
    if (f.categorical()) {
      d += std::get<CategoricalKind>(f.kind).cardinality;
    } else {
      d += 1;
    }
  }
  return d;
}

ContextVector encode_context(const std::vector<FeatureSpec>& schema, const RawContext& raw) {
  for (const auto& [name, value] : raw) {
    bool known = false;
    for (const FeatureSpec& f : schema) {
      if (f.name == name) {
        known = true;
        break;
      }
    }
    if (!known) fail(Errc::UnknownFeature, "feature '" + name + "' not in schema");
    if (!std::isfinite(value)) fail(Errc::OutOfRange, "feature '" + name + "' is not finite");
  }

  ContextVector x = ContextVector::Zero(static_cast<Eigen::Index>(context_dimension(schema)));
  x[0] = 1.0;
  Eigen::Index at = 1;
  for (const FeatureSpec& f : schema) {
    auto it = raw.find(f.name);
    if (it == raw.end()) fail(Errc::MissingFeature, "feature '" + f.name + "' missing");
    double value = it->second;
    if (f.categorical()) {
      const auto cardinality = std::get<CategoricalKind>(f.kind).cardinality;
      double rounded = std::nearbyint(value);
      if (rounded != value || rounded < 0.0 ||
          rounded >= static_cast<double>(cardinality)) {
        fail(Errc::OutOfRange, "feature '" + f.name + "' must be an integer in [0," +
                                   std::to_string(cardinality) + ")");
      }
      x[at + static_cast<Eigen::Index>(rounded)] = 1.0;
      at += static_cast<Eigen::Index>(cardinality);
    } else {
      const auto& num = std::get<NumericKind>(f.kind);
      if (value < num.lo || value > num.hi) {
        fail(Errc::OutOfRange, "feature '" + f.name + "' outside [" + std::to_string(num.lo) +
                                   "," + std::to_string(num.hi) + "]");
      }
      x[at] = (value - num.lo) / (num.hi - num.lo);
      ++at;
    }
  }
  return x;
}

}  // namespace bandit
