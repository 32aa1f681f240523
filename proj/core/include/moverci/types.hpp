#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moverci/errors.hpp"

namespace moverci {

/// Distinguished unbounded upper ratio limit. Serializes as the string "inf".
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Two-sided interval at confidence `level` = 1 - alpha. Levels are always
/// stored as 1 - alpha (0.95, never 0.05).
struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;

  bool contains(double x) const { return lower <= x && x <= upper; }
  double width() const { return upper - lower; }
};

/// One stratum x group cell: the universal engine input. `n` is absent for
/// externally injected summaries whose sample size is unknown.
struct StratumGroupSummary {
  double estimate = 0.0;
  double variance = 0.0;
  ConfidenceInterval ci;
  std::optional<int> n;
};

/// Both groups of one stratum (group 0 = control, group 1 = treated).
struct StratumPair {
  StratumGroupSummary g0;
  StratumGroupSummary g1;
};

using SummaryMatrix = std::vector<StratumPair>;

enum class WeightScheme { Mh, Inv, Mr, Fixed };

/// Resolved stratum weights, normalized to sum 1 within 1e-12.
struct WeightSpec {
  WeightScheme scheme = WeightScheme::Mh;
  std::vector<double> resolved;

  static WeightSpec fixed(std::span<const double> raw);
  std::size_t strata() const { return resolved.size(); }
};

enum class MethodId { Av, Ac, Ac2, Avl, Acl, Wald, Asy, Dc, Ys };
enum class Scale { Difference, Ratio };

const char* method_name(MethodId method);
MethodId method_from_name(const std::string& name);
const char* scale_name(Scale scale);
const char* scheme_name(WeightScheme scheme);
WeightScheme scheme_from_name(const std::string& name);

/// Ratio-scale requests accept {AV, AVL, AC, ACL, AC2, ASY, DC};
/// difference-scale requests accept {AV, AC, AC2, WALD, DC, YS}.
bool method_valid_for(MethodId method, Scale scale);
std::vector<MethodId> methods_for_scale(Scale scale);

/// One interval estimate with its provenance. `gamma0`/`gamma1` hold the
/// adjusted per-stratum tail levels of the AC-family constructions (one per
/// group; AC2 carries its single gamma in both slots); absent for AV/Wald/
/// ASY/DC. `corrections` records every applied adjustment (continuity
/// widening, boundary clamps, approximate refits); limits are never adjusted
/// silently.
struct EffectResult {
  MethodId method = MethodId::Av;
  Scale scale = Scale::Difference;
  double estimate = 0.0;
  ConfidenceInterval ci;
  WeightSpec weights;
  std::optional<double> gamma0;
  std::optional<double> gamma1;
  std::vector<std::string> corrections;
};

/// Builds an EffectResult and enforces the containment invariant
/// ci.lower <= estimate <= ci.upper (an infinite upper limit is fine).
EffectResult make_effect_result(MethodId method, Scale scale, double estimate,
                                ConfidenceInterval ci, WeightSpec weights,
                                std::optional<double> gamma0 = std::nullopt,
                                std::optional<double> gamma1 = std::nullopt,
                                std::vector<std::string> corrections = {});

/// A method that could not be computed on this data; batch analyses collect
/// these instead of aborting.
struct MethodFailure {
  MethodId method;
  Scale scale;
  ErrorCode code;
  std::string message;
};

struct ValidatedBundle {
  SummaryMatrix summaries;
  WeightSpec weights;
};

/// Checks every type invariant of the bundle and returns it unchanged.
/// Throws EmptyStrata, InvariantViolation (naming the first failing field),
/// MrStrataCount, or DimensionMismatch.
ValidatedBundle validate_inputs(SummaryMatrix summaries, WeightSpec weights);

/// Sum-to-one tolerance for resolved weights.
inline constexpr double kWeightSumTol = 1e-12;

}  // namespace moverci
