#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "moverci/engine.hpp"
#include "moverci/types.hpp"

namespace moverci {

/// One subject row. Times share a unit across the dataset; ties are allowed.
struct SurvivalRecord {
  double time = 0.0;
  bool event = false;  // false = censored
  int group = 0;       // 0 or 1
  int stratum = 0;
};

/// Product-limit fit for one stratum x group cell. Vectors are indexed by the
/// distinct event times. `cum_hazard_var` holds sum d/(n(n-d)) up to each
/// event time (the squared standard error of log(-log S) before scaling);
/// it is +inf once the risk set is exhausted by events.
struct KMCurve {
  std::vector<double> event_times;
  std::vector<double> survival;
  std::vector<double> greenwood_var;
  std::vector<double> cum_hazard_var;
  std::vector<int> at_risk;
  std::vector<int> events;
  int n = 0;
  double max_time = 0.0;

  /// Step value at t (1 before the first event; no interpolation).
  double survival_at(double t) const;
  /// Greenwood variance at t (the value at the last event time <= t).
  double greenwood_at(double t) const;
  double cum_hazard_var_at(double t) const;
};

/// Kaplan-Meier fit with Greenwood variances. At tied times events precede
/// censorings. Throws EmptyGroup on empty input.
KMCurve km_fit(std::span<const SurvivalRecord> records);

/// KM survival probability at time t with a complementary-log-log default CI.
/// Throws BeyondFollowUp when t exceeds the last observed time.
StratumGroupSummary milestone(const KMCurve& curve, double t, double level = 0.95);

/// Restricted mean survival time over [0, horizon] by exact step integration,
/// with variance sum_{t_i <= L} A_i^2 d_i / (n_i (n_i - d_i)), A_i the area
/// under the curve from t_i to L. Default CI is Wald on the plain scale.
StratumGroupSummary rmst(const KMCurve& curve, double horizon, double level = 0.95);

enum class SurvivalMeasure { Milestone, Rmst };

/// Externally supplied one-sample CI for one stratum x group cell. `variance`
/// and `n` are optional; a missing variance is recovered from the CI width.
struct ExternalCi {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::optional<double> variance;
  std::optional<int> n;
};

/// Cells indexed [stratum][group].
struct ExternalCis {
  std::vector<std::array<ExternalCi, 2>> cells;
};

struct SurvivalSummaries {
  SummaryMatrix summaries;
  CiProvider refit;
  std::vector<int> stratum_ids;  // original ids, first-appearance order
  std::vector<std::string> notes;
};

/// Builds the engine-ready summary matrix. Default path: KM fits per cell and
/// exact re-leveling in `refit`. External path: the supplied estimates/CIs are
/// used verbatim and `refit` rescales half-widths by z_{gamma/2}/z_{alpha/2}
/// (flagged as approximate in `notes`); records, when also given, must agree
/// on the stratum count and contribute the sample sizes.
SurvivalSummaries make_summaries(const std::vector<SurvivalRecord>& records,
                                 SurvivalMeasure measure, double timepoint,
                                 double level,
                                 const std::optional<ExternalCis>& external = std::nullopt);

/// MOVER CI for the difference of two independent stratum differences,
/// (d11 - d10) - (d21 - d20): the treatment-by-stratum interaction.
/// Requires exactly two strata.
ConfidenceInterval interaction_ci(
    std::span<const std::pair<double, ConfidenceInterval>> stratum_diffs);

/// Log-scale variant for ratio effect measures: the combiner applied to the
/// log ratios, exponentiated back.
ConfidenceInterval interaction_ratio_ci(
    std::span<const std::pair<double, ConfidenceInterval>> stratum_ratios);

/// MH (needs sample sizes) or INV (1/(v1 + v0)) weights from the summaries.
/// MR weights are a binary-endpoint construction and are rejected here.
WeightSpec resolve_weights_survival(const SummaryMatrix& summaries, WeightScheme scheme,
                                    std::span<const double> fixed = {});

struct SurvivalAnalysis {
  std::vector<EffectResult> results;
  std::vector<MethodFailure> failures;
  std::vector<std::string> notes;
};

/// Difference methods {AV, AC, AC2, WALD} and ratio methods
/// {AV, AVL, AC, ACL, AC2}. Binary-only comparators (DC, ASY, YS) yield
/// per-method failures rather than aborting the batch.
SurvivalAnalysis analyze_survival(const SurvivalSummaries& input,
                                  const WeightSpec& weights,
                                  const std::set<MethodId>& methods,
                                  const std::vector<Scale>& scales, double level);

}  // namespace moverci
