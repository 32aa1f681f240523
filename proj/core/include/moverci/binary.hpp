#pragma once

#include <set>
#include <span>
#include <vector>

#include "moverci/engine.hpp"
#include "moverci/types.hpp"

namespace moverci {

/// One stratum of a two-group binomial comparison.
struct BinaryStratum {
  int x0 = 0;  // control events
  int n0 = 0;  // control size
  int x1 = 0;  // treated events
  int n1 = 0;  // treated size
};

/// HalfEvent replaces p = 0 by 0.5/n and p = 1 by 1 - 0.5/n, but only inside
/// the INV/MR weight formulas; point estimates and method variances always use
/// the raw proportions.
enum class ZeroCellPolicy { None, HalfEvent };

/// Wilson score interval for a binomial proportion. Limits are always within
/// [0,1]; x = 0 gives lower = 0 exactly and x = n gives upper = 1 exactly.
ConfidenceInterval wilson_ci(int x, int n, double level);

/// Resolves normalized stratum weights.
///   MH:  w ~ n1*n0/(n1+n0)                           (fixed given sizes)
///   INV: w ~ 1/V with V = p1(1-p1)/n1 + p0(1-p0)/n0  (policy-adjusted p)
///   MR:  minimum-risk weights, the minimizer of sum w^2 V + (sum (w-f) d)^2
///        subject to sum w = 1, with f_s the stratum share of the total size
///        (closed form for two strata; needs S >= 2)
///   Fixed: `fixed` normalized.
WeightSpec resolve_weights(const std::vector<BinaryStratum>& data, WeightScheme scheme,
                           ZeroCellPolicy policy = ZeroCellPolicy::None,
                           std::span<const double> fixed = {});

/// Continuity correction for MR-weighted difference CIs:
///   c = (3/16) / sum_s n_s1 n_s0 / (n_s1 + n_s0).
/// Every MR-weighted difference CI (L, U) widens to (L - c, U + c).
double mr_continuity(const std::vector<BinaryStratum>& data);

/// Wald CI for the weighted risk difference (delta variance, large strata).
EffectResult wald_rd_ci(const std::vector<BinaryStratum>& data,
                        const WeightSpec& weights, double level);

/// Exponentiated log-scale Wald CI for the weighted risk ratio.
EffectResult asy_rr_ci(const std::vector<BinaryStratum>& data,
                       const WeightSpec& weights, double level);

/// MH risk difference with Sato's dually consistent variance (valid under both
/// large-strata and sparse-data asymptotics). MH weights only.
EffectResult dc_rd_ci(const std::vector<BinaryStratum>& data, double level);

/// MH risk ratio with the Greenland-Robins dually consistent variance.
EffectResult dc_rr_ci(const std::vector<BinaryStratum>& data, double level);

/// Yan-Su MOVER comparator: tau -+ z * sqrt(lambda_1 L1(1-L1) + lambda_0 U0(1-U0))
/// with lambda_g = sum_s w_s^2 / n_sg and (L_g, U_g) the gamma-refit pooled
/// limits of the AC construction.
EffectResult ys_rd_ci(const std::vector<BinaryStratum>& data,
                      const WeightSpec& weights, double level);

/// Expected bias of the unstratified risk-difference estimate in a two-stratum
/// design with a common difference:
///   n10*n20*(r1 - r2)*(p10 - p20) / ((n10*r1 + n20*r2)(n10 + n20)).
/// `delta`, the common difference, cancels and is accepted only for symmetry
/// with the expectation formula.
double unstratified_bias(double p10, double p20, double n10, double n20, double r1,
                         double r2, double delta = 0.0);

/// Summaries (p-hat, delta variance, Wilson CI, n) ready for the engine.
SummaryMatrix binary_summaries(const std::vector<BinaryStratum>& data, double level);

/// Wilson refit provider for the AC-family constructions.
CiProvider wilson_provider(std::vector<BinaryStratum> data);

struct BinaryAnalysis {
  std::vector<EffectResult> results;
  std::vector<MethodFailure> failures;
  double mr_correction = 0.0;  // c, when the MR scheme was requested
};

/// Runs every requested method on every requested scale. Unsupported
/// method x scale pairs (and DC outside the MH scheme) are skipped; per-method
/// computation errors are collected in `failures` without aborting the batch.
/// Under the MR scheme every difference CI is widened by the continuity
/// correction and the adjustment is recorded in `corrections`.
BinaryAnalysis analyze_binary(const std::vector<BinaryStratum>& data,
                              WeightScheme scheme, const std::set<MethodId>& methods,
                              const std::vector<Scale>& scales, double level,
                              ZeroCellPolicy policy = ZeroCellPolicy::None,
                              std::span<const double> fixed = {});

}  // namespace moverci
