#pragma once

#include <functional>
#include <span>

#include "moverci/types.hpp"

namespace moverci {

/// Weighted per-group pooled estimate and limits: tau_g = sum_s w_s d_sg with
/// (L, U) the weighted sums of the stratum limits refit at level 1 - gamma.
struct GroupPooled {
  double tau_hat = 0.0;
  double L = 0.0;
  double U = 0.0;
  double gamma = 0.0;
};

/// Quadratic coefficients of the Fieller inversion a*phi^2 - 2*b*phi + c = 0,
/// split into the lower-limit pair (a_l, c_l) and upper-limit pair (a_u, c_u).
struct FiellerCoefficients {
  double b = 0.0;
  double a_l = 0.0;
  double c_l = 0.0;
  double a_u = 0.0;
  double c_u = 0.0;
};

/// Produces the CI for one stratum x group cell at an arbitrary confidence
/// level. Implementations throw RefitUnavailable when they cannot re-level
/// (e.g. survival summaries supplied as bare numbers).
using CiProvider =
    std::function<ConfidenceInterval(std::size_t stratum, int group, double level)>;

/// Produces the CI for the stratum-level difference d_s1 - phi * d_s0 at an
/// arbitrary confidence level.
using DiffCiProvider =
    std::function<ConfidenceInterval(std::size_t stratum, double phi, double level)>;

/// Which per-stratum sigma feeds the gamma computation: the endpoint-supplied
/// delta variance (default) or the variance recovered from the CI width,
/// (u - l)^2 / (4 z^2), for summaries lacking a variance.
enum class GammaVarianceSource { DeltaVariance, CiRecovered };

/// Unstratified MOVER combiner for tau1 - tau0 from two one-sample CIs:
///   [d - sqrt((l1-t1)^2 + (u0-t0)^2), d + sqrt((u1-t1)^2 + (l0-t0)^2)].
/// Reduces to [l1, u1] when group 0 is the point 0.
ConfidenceInterval mover_diff_unstratified(double est1, const ConfidenceInterval& ci1,
                                           double est0, const ConfidenceInterval& ci0);

/// Adjusted per-stratum tail level: gamma = 2 Phi(-z_{gamma/2}) with
///   z_{gamma/2} = sqrt(sum w^2 sigma^2) / (sum w sigma) * z_{alpha/2}.
/// Always >= alpha (Cauchy-Schwarz). Throws AllZeroVariances when every
/// weighted sigma vanishes.
double gamma_level(const WeightSpec& weights, std::span<const double> sigmas,
                   double alpha);

/// Builds the group-g pooled (tau, L, U) from stratum CIs refit at the
/// group-specific 1 - gamma level. When every weighted sigma of the group is
/// zero, gamma degenerates to the equal-sigma limit 2 Phi(-sqrt(sum w^2) z)
/// and the refit level is immaterial for the zero-width CIs this happens with.
GroupPooled pooled_group_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                            int group, double alpha, const CiProvider& refit,
                            GammaVarianceSource source = GammaVarianceSource::DeltaVariance);

/// Default AC2 stratum provider: the unstratified MOVER combiner applied
/// within each stratum to `refit`-supplied CIs, with the phi^2 scaling on the
/// group-0 recovered squares.
DiffCiProvider make_mover_diff_provider(const SummaryMatrix& summaries,
                                        CiProvider refit);

// ---- difference scale -------------------------------------------------------

/// Additive-variance CI: tau +- sqrt(sum w^2 [(l/u - d)^2 + phi^2 (u/l - d)^2]).
/// phi = 1 for plain differences.
EffectResult av_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                        double phi, double alpha);

/// Endpoint-agnostic Wald CI from the summaries' delta variances:
/// tau +- z * sqrt(sum w^2 [v1 + phi^2 v0]).
EffectResult wald_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                          double phi, double alpha);

/// Additive-CI construction: per-group gamma refit, pooled (L_g, U_g), then the
/// MOVER combiner on the two pooled intervals.
EffectResult ac_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                        double phi, double alpha, const CiProvider& refit,
                        GammaVarianceSource source = GammaVarianceSource::DeltaVariance);

/// Additive CI of per-stratum differences: single gamma from the stratum
/// difference sigmas, stratum CIs at 1 - gamma, weighted-sum limits.
/// `diff` overrides the default MOVER-within-stratum provider.
EffectResult ac2_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                         double phi, double alpha, const CiProvider& refit,
                         const DiffCiProvider& diff = {},
                         GammaVarianceSource source = GammaVarianceSource::DeltaVariance);

// ---- ratio scale ------------------------------------------------------------

/// Fieller CI from the AC pooled limits. An unbounded upper limit is returned
/// as +inf; boundary clamps are recorded in `corrections`.
EffectResult fieller_ac_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                              double alpha, const CiProvider& refit,
                              GammaVarianceSource source = GammaVarianceSource::DeltaVariance);

/// Log-ratio CI from the AC pooled limits, exponentiated.
EffectResult acl_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                       double alpha, const CiProvider& refit,
                       GammaVarianceSource source = GammaVarianceSource::DeltaVariance);

/// Fieller CI with per-stratum recovered squares in place of the pooled ones.
EffectResult fieller_av_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                              double alpha);

/// Log-ratio CI with per-stratum recovered squares (lower pairs l_s1 with u_s0,
/// mirroring the AV convention).
EffectResult avl_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                       double alpha);

/// Each ratio limit solves "the AC2 difference CI for tau1 - phi*tau0 touches
/// 0", found by bisection bracketed around the AC Fieller limit (relative
/// tolerance 1e-10, max 200 iterations, geometric bracket expansion by 2 up to
/// 60 doublings). Special cases: tau1 = 0 -> lower 0; tau0 = 0 -> upper +inf.
EffectResult ac2_ratio_bisection(const SummaryMatrix& summaries, const WeightSpec& weights,
                                 double alpha, const CiProvider& refit,
                                 const DiffCiProvider& diff = {},
                                 GammaVarianceSource source = GammaVarianceSource::DeltaVariance);

// ---- shared internals (exposed for the binary backend and tests) ------------

double weighted_estimate(const SummaryMatrix& summaries, const WeightSpec& weights,
                         int group);

/// Per-stratum sigmas for the gamma computation of one group.
std::vector<double> group_sigmas(const SummaryMatrix& summaries, int group,
                                 double alpha, GammaVarianceSource source);

/// Solves the Fieller quadratic for both limits, applying the boundary rules
/// (a_u <= 0 ==> +inf; negative lower root ==> clamp to 0) and recording every
/// clamp in the returned notes.
std::pair<ConfidenceInterval, std::vector<std::string>> solve_fieller(
    const FiellerCoefficients& k, double level);

}  // namespace moverci
