#include <catch2/catch_amalgamated.hpp>

#include "moverci/binary.hpp"
#include "moverci/types.hpp"
#include "test_support.hpp"

using namespace moverci;
using Catch::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const MoverError& e) {
    return e.code();
  }
  FAIL("expected a MoverError");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("confidence interval basics") {
  ConfidenceInterval ci{0.2, 0.6, 0.95};
  CHECK(ci.contains(0.2));
  CHECK(ci.contains(0.6));
  CHECK_FALSE(ci.contains(0.61));
  CHECK(ci.width() == Approx(0.4));
}

TEST_CASE("fixed weights normalize and validate") {
  const std::vector<double> raw{2.0, 1.0, 1.0};
  const WeightSpec w = WeightSpec::fixed(raw);
  CHECK(w.scheme == WeightScheme::Fixed);
  CHECK(w.resolved[0] == Approx(0.5));
  CHECK(w.resolved[1] == Approx(0.25));

  const std::vector<double> bad{1.0, -0.5};
  CHECK(code_of([&] { (void)WeightSpec::fixed(bad); }) ==
        ErrorCode::InvariantViolation);
}

TEST_CASE("weight normalization property") {
  testsup::Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> raw(rng.uniform_int(1, 8));
    for (double& v : raw) v = rng.uniform(1e-6, 10.0);
    const WeightSpec w = WeightSpec::fixed(raw);
    double total = 0.0;
    for (double v : w.resolved) total += v;
    CHECK(std::fabs(total - 1.0) < kWeightSumTol);
  }
}

TEST_CASE("method and scale vocabulary") {
  for (MethodId m : {MethodId::Av, MethodId::Ac, MethodId::Ac2, MethodId::Avl,
                     MethodId::Acl, MethodId::Wald, MethodId::Asy, MethodId::Dc,
                     MethodId::Ys}) {
    CHECK(method_from_name(method_name(m)) == m);
  }
  // ratio accepts {AV, AVL, AC, ACL, AC2, ASY, DC}
  CHECK(method_valid_for(MethodId::Av, Scale::Ratio));
  CHECK(method_valid_for(MethodId::Asy, Scale::Ratio));
  CHECK(method_valid_for(MethodId::Dc, Scale::Ratio));
  CHECK_FALSE(method_valid_for(MethodId::Wald, Scale::Ratio));
  CHECK_FALSE(method_valid_for(MethodId::Ys, Scale::Ratio));
  // difference accepts {AV, AC, AC2, WALD, DC, YS}
  CHECK(method_valid_for(MethodId::Ys, Scale::Difference));
  CHECK(method_valid_for(MethodId::Wald, Scale::Difference));
  CHECK_FALSE(method_valid_for(MethodId::Avl, Scale::Difference));
  CHECK_FALSE(method_valid_for(MethodId::Acl, Scale::Difference));
  CHECK_FALSE(method_valid_for(MethodId::Asy, Scale::Difference));
  CHECK(methods_for_scale(Scale::Difference).size() == 6);
  CHECK(methods_for_scale(Scale::Ratio).size() == 7);
}

TEST_CASE("validate_inputs accepts the bioassay bundle") {
  const SummaryMatrix summaries = binary_summaries(testsup::bioassay(), 0.95);
  const WeightSpec weights = resolve_weights(testsup::bioassay(), WeightScheme::Mh);
  const ValidatedBundle bundle = validate_inputs(summaries, weights);
  CHECK(bundle.summaries.size() == 4);
}

TEST_CASE("validate_inputs accepts a degenerate single stratum") {
  SummaryMatrix m(1);
  m[0].g0 = {0.3, 0.01, {0.1, 0.5, 0.95}, 10};
  m[0].g1 = {0.5, 0.01, {0.3, 0.7, 0.95}, 10};
  const std::vector<double> one{1.0};
  CHECK_NOTHROW(validate_inputs(m, WeightSpec::fixed(one)));
}

TEST_CASE("validate_inputs error taxonomy") {
  SummaryMatrix m(1);
  m[0].g0 = {0.3, 0.01, {0.1, 0.5, 0.95}, 10};
  m[0].g1 = {0.5, 0.01, {0.3, 0.7, 0.95}, 10};
  const std::vector<double> one{1.0};
  WeightSpec w1 = WeightSpec::fixed(one);

  CHECK(code_of([&] { validate_inputs({}, w1); }) == ErrorCode::EmptyStrata);

  WeightSpec mr = w1;
  mr.scheme = WeightScheme::Mr;
  CHECK(code_of([&] { validate_inputs(m, mr); }) == ErrorCode::MrStrataCount);

  SummaryMatrix bad = m;
  bad[0].g1.estimate = 0.9;  // outside [0.3, 0.7]
  CHECK(code_of([&] { validate_inputs(bad, w1); }) == ErrorCode::MalformedInterval);

  bad = m;
  bad[0].g0.variance = -1e-9;
  CHECK(code_of([&] { validate_inputs(bad, w1); }) == ErrorCode::InvariantViolation);

  bad = m;
  bad[0].g0.ci.level = 1.2;
  CHECK(code_of([&] { validate_inputs(bad, w1); }) == ErrorCode::InvariantViolation);

  const std::vector<double> two{0.5, 0.5};
  CHECK(code_of([&] { validate_inputs(m, WeightSpec::fixed(two)); }) ==
        ErrorCode::DimensionMismatch);

  WeightSpec unnorm = w1;
  unnorm.resolved = {0.8};
  CHECK(code_of([&] { validate_inputs(m, unnorm); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("zero weights are accepted and the stratum is kept") {
  SummaryMatrix m(2);
  m[0].g0 = {0.3, 0.01, {0.1, 0.5, 0.95}, 10};
  m[0].g1 = {0.5, 0.01, {0.3, 0.7, 0.95}, 10};
  m[1] = m[0];
  WeightSpec w;
  w.scheme = WeightScheme::Fixed;
  w.resolved = {1.0, 0.0};
  const ValidatedBundle bundle = validate_inputs(m, w);
  CHECK(bundle.weights.resolved.size() == 2);
}

TEST_CASE("make_effect_result enforces containment") {
  WeightSpec w;
  w.resolved = {1.0};
  CHECK_NOTHROW(make_effect_result(MethodId::Av, Scale::Difference, 0.5,
                                   {0.1, 0.9, 0.95}, w));
  // an infinite upper ratio limit is a legal distinguished value
  CHECK_NOTHROW(make_effect_result(MethodId::Av, Scale::Ratio, 2.0,
                                   {0.5, kInfinity, 0.95}, w));
  CHECK(code_of([&] {
          make_effect_result(MethodId::Av, Scale::Difference, 1.5, {0.1, 0.9, 0.95}, w);
        }) == ErrorCode::InvariantViolation);
  // method/scale mismatch is rejected at construction
  CHECK(code_of([&] {
          make_effect_result(MethodId::Ys, Scale::Ratio, 1.0, {0.5, 2.0, 0.95}, w);
        }) == ErrorCode::InvalidArgument);
}
