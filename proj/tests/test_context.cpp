#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bandit/context.hpp"
#include "bandit/errors.hpp"

using namespace bandit;

namespace {

std::vector<FeatureSpec> schema() {
  return {
      FeatureSpec{"device", CategoricalKind{3}},
      FeatureSpec{"price", NumericKind{10.0, 20.0}},
      FeatureSpec{"region", CategoricalKind{2}},
  };
}

}  // namespace

TEST_CASE("dimension counts intercept, one-hots, and scalars") {
  CHECK(context_dimension({}) == 1);
  CHECK(context_dimension(schema()) == 1 + 3 + 1 + 2);
}

TEST_CASE("encoding layout") {
  ContextVector x = encode_context(schema(), {{"device", 1.0}, {"price", 15.0}, {"region", 0.0}});
  REQUIRE(x.size() == 7);
  CHECK(x[0] == 1.0);  // intercept
  CHECK(x[1] == 0.0);
  CHECK(x[2] == 1.0);  // device one-hot
  CHECK(x[3] == 0.0);
  CHECK(x[4] == doctest::Approx(0.5));  // (15-10)/(20-10)
  CHECK(x[5] == 1.0);                   // region one-hot
  CHECK(x[6] == 0.0);
}

TEST_CASE("numeric endpoints scale to 0 and 1") {
  auto s = schema();
  ContextVector lo = encode_context(s, {{"device", 0.0}, {"price", 10.0}, {"region", 1.0}});
  ContextVector hi = encode_context(s, {{"device", 0.0}, {"price", 20.0}, {"region", 1.0}});
  CHECK(lo[4] == 0.0);
  CHECK(hi[4] == 1.0);
}

TEST_CASE("empty schema is just the intercept") {
  ContextVector x = encode_context({}, {});
  REQUIRE(x.size() == 1);
  CHECK(x[0] == 1.0);
}

TEST_CASE("identical raw input encodes identically") {
  RawContext raw{{"device", 2.0}, {"price", 13.25}, {"region", 1.0}};
  CHECK(encode_context(schema(), raw) == encode_context(schema(), raw));
}

TEST_CASE("validation failures name the feature") {
  auto s = schema();
  CHECK_THROWS_AS(encode_context(s, {{"device", 1.0}, {"region", 0.0}}), BanditError);
  try {
    encode_context(s, {{"device", 1.0}, {"region", 0.0}});
  } catch (const BanditError& e) {
    CHECK(e.code() == Errc::MissingFeature);
    CHECK(std::string(e.what()).find("price") != std::string::npos);
  }

  try {
    encode_context(s, {{"device", 1.0}, {"price", 15.0}, {"region", 0.0}, {"bogus", 1.0}});
    FAIL("expected UnknownFeature");
  } catch (const BanditError& e) {
    CHECK(e.code() == Errc::UnknownFeature);
  }

  // Categorical values must be integers inside the cardinality.
  try {
    encode_context(s, {{"device", 1.5}, {"price", 15.0}, {"region", 0.0}});
    FAIL("expected OutOfRange");
  } catch (const BanditError& e) {
    CHECK(e.code() == Errc::OutOfRange);
  }
  CHECK_THROWS_AS(encode_context(s, {{"device", 3.0}, {"price", 15.0}, {"region", 0.0}}),
                  BanditError);
  CHECK_THROWS_AS(encode_context(s, {{"device", -1.0}, {"price", 15.0}, {"region", 0.0}}),
                  BanditError);

  // Numerics must land inside [lo, hi].
  CHECK_THROWS_AS(encode_context(s, {{"device", 0.0}, {"price", 9.99}, {"region", 0.0}}),
                  BanditError);
  CHECK_THROWS_AS(encode_context(s, {{"device", 0.0}, {"price", 20.01}, {"region", 0.0}}),
                  BanditError);

  // Non-finite input is rejected before any layout work.
  CHECK_THROWS_AS(
      encode_context(s, {{"device", 0.0}, {"price", std::nan("")}, {"region", 0.0}}),
      BanditError);
}
