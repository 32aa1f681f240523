#include "moverci/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "moverci/stats.hpp"

namespace moverci {

namespace {

double sq(double x) { return x * x; }

/// Index of the last event time <= t, or -1 when t precedes every event.
int step_index(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<int>(it - times.begin()) - 1;
}

}  // namespace

double KMCurve::survival_at(double t) const {
  const int i = step_index(event_times, t);
  return i < 0 ? 1.0 : survival[i];
}

double KMCurve::greenwood_at(double t) const {
  const int i = step_index(event_times, t);
  return i < 0 ? 0.0 : greenwood_var[i];
}

double KMCurve::cum_hazard_var_at(double t) const {
  const int i = step_index(event_times, t);
  return i < 0 ? 0.0 : cum_hazard_var[i];
}

KMCurve km_fit(std::span<const SurvivalRecord> records) {
  require(!records.empty(), ErrorCode::EmptyGroup, "no subjects in this cell");
  std::vector<std::pair<double, bool>> rows;  // (time, event)
  rows.reserve(records.size());
  for (const SurvivalRecord& r : records) {
    require(r.time >= 0.0, ErrorCode::InvariantViolation, "negative survival time");
    rows.emplace_back(r.time, r.event);
  }
  // Events sort before censorings at tied times.
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second && !b.second;
  });

  KMCurve curve;
  curve.n = static_cast<int>(rows.size());
  curve.max_time = rows.back().first;

  double s = 1.0;
  double cum = 0.0;
  int at_risk = curve.n;
  std::size_t i = 0;
  while (i < rows.size()) {
    const double t = rows[i].first;
    int d = 0, removed = 0;
    while (i < rows.size() && rows[i].first == t) {
      if (rows[i].second) ++d;
      ++removed;
      ++i;
    }
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / at_risk;
      if (at_risk > d) {
        cum += static_cast<double>(d) / (static_cast<double>(at_risk) * (at_risk - d));
      } else {
        // Risk set exhausted by events: S = 0, Greenwood degenerate.
        s = 0.0;
        cum = kInfinity;
      }
      curve.event_times.push_back(t);
      curve.survival.push_back(s);
      curve.cum_hazard_var.push_back(cum);
      curve.greenwood_var.push_back(s > 0.0 ? s * s * cum : 0.0);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(d);
    }
    at_risk -= removed;
  }
  return curve;
}

StratumGroupSummary milestone(const KMCurve& curve, double t, double level) {
  require(t >= 0.0, ErrorCode::InvalidArgument, "milestone time must be nonnegative");
  require(t <= curve.max_time, ErrorCode::BeyondFollowUp,
          "milestone time " + std::to_string(t) + " exceeds follow-up " +
              std::to_string(curve.max_time));
  StratumGroupSummary out;
  out.n = curve.n;
  out.estimate = curve.survival_at(t);
  out.variance = curve.greenwood_at(t);
  if (out.estimate >= 1.0) {
    out.ci = {1.0, 1.0, level};
  } else if (out.estimate <= 0.0) {
    out.ci = {0.0, 0.0, level};
  } else {
    // Complementary-log-log interval: S^exp(+-z * se(log(-log S))).
    const double se = std::sqrt(curve.cum_hazard_var_at(t)) /
                      std::fabs(std::log(out.estimate));
    const double z = z_for_level(level);
    out.ci = {std::pow(out.estimate, std::exp(z * se)),
              std::pow(out.estimate, std::exp(-z * se)), level};
  }
  return out;
}

StratumGroupSummary rmst(const KMCurve& curve, double horizon, double level) {
  require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
  require(horizon <= curve.max_time, ErrorCode::BeyondFollowUp,
          "horizon " + std::to_string(horizon) + " exceeds follow-up " +
              std::to_string(curve.max_time));
  double area = 0.0;
  double prev_t = 0.0, prev_s = 1.0;
  std::vector<double> tail_area(curve.event_times.size() + 1, 0.0);
  std::size_t k = 0;
  for (; k < curve.event_times.size() && curve.event_times[k] <= horizon; ++k) {
    area += prev_s * (curve.event_times[k] - prev_t);
    prev_t = curve.event_times[k];
    prev_s = curve.survival[k];
  }
  area += prev_s * (horizon - prev_t);

  StratumGroupSummary out;
  out.n = curve.n;
  out.estimate = area;
  // A_i = integral of S over [t_i, horizon]; accumulate from the last event
  // time backwards.
  double var = 0.0;
  {
    double acc = prev_s * (horizon - prev_t);  // area beyond the last event <= horizon
    for (std::size_t j = k; j-- > 0;) {
      const int n_j = curve.at_risk[j];
      const int d_j = curve.events[j];
      if (n_j > d_j) {
        var += acc * acc * static_cast<double>(d_j) /
               (static_cast<double>(n_j) * (n_j - d_j));
      }
      // extend the tail area across [t_{j-1}, t_j]
      const double left = j == 0 ? 0.0 : curve.event_times[j - 1];
      const double s_left = j == 0 ? 1.0 : curve.survival[j - 1];
      acc += s_left * (curve.event_times[j] - left);
    }
  }
  out.variance = var;
  const double half = z_for_level(level) * std::sqrt(var);
  out.ci = {area - half, area + half, level};
  return out;
}

namespace {

struct CellRecords {
  std::vector<SurvivalRecord> g0, g1;
};

/// Groups records by stratum (first-appearance order) and group.
std::pair<std::vector<CellRecords>, std::vector<int>> split_cells(
    const std::vector<SurvivalRecord>& records) {
  std::vector<int> ids;
  std::vector<CellRecords> cells;
  std::map<int, std::size_t> index;
  for (const SurvivalRecord& r : records) {
    require(r.group == 0 || r.group == 1, ErrorCode::InvariantViolation,
            "group must be 0 or 1");
    auto [it, inserted] = index.try_emplace(r.stratum, cells.size());
    if (inserted) {
      cells.emplace_back();
      ids.push_back(r.stratum);
    }
    (r.group == 0 ? cells[it->second].g0 : cells[it->second].g1).push_back(r);
  }
  for (std::size_t s = 0; s < cells.size(); ++s) {
    require(!cells[s].g0.empty() && !cells[s].g1.empty(), ErrorCode::GroupMissing,
            "stratum " + std::to_string(ids[s]) + " lacks one of the two groups");
  }
  return {std::move(cells), std::move(ids)};
}

}  // namespace

SurvivalSummaries make_summaries(const std::vector<SurvivalRecord>& records,
                                 SurvivalMeasure measure, double timepoint,
                                 double level,
                                 const std::optional<ExternalCis>& external) {
  SurvivalSummaries out;
  const double z = z_for_level(level);

  if (!external) {
    require(!records.empty(), ErrorCode::EmptyStrata, "no survival records supplied");
    auto [cells, ids] = split_cells(records);
    out.stratum_ids = ids;
    auto curves = std::make_shared<std::vector<std::array<KMCurve, 2>>>();
    curves->reserve(cells.size());
    for (const CellRecords& cell : cells)
      curves->push_back({km_fit(cell.g0), km_fit(cell.g1)});
    out.summaries.resize(cells.size());
    for (std::size_t s = 0; s < cells.size(); ++s) {
      auto summarize = [&](const KMCurve& c) {
        return measure == SurvivalMeasure::Milestone ? milestone(c, timepoint, level)
                                                     : rmst(c, timepoint, level);
      };
      out.summaries[s].g0 = summarize((*curves)[s][0]);
      out.summaries[s].g1 = summarize((*curves)[s][1]);
    }
    out.refit = [curves, measure, timepoint](std::size_t s, int group,
                                             double refit_level) {
      require(s < curves->size(), ErrorCode::InvalidArgument, "stratum out of range");
      const KMCurve& c = (*curves)[s][group];
      const StratumGroupSummary cell =
          measure == SurvivalMeasure::Milestone ? milestone(c, timepoint, refit_level)
                                                : rmst(c, timepoint, refit_level);
      return cell.ci;
    };
    return out;
  }

  // External injection path.
  const ExternalCis& ext = *external;
  require(!ext.cells.empty(), ErrorCode::EmptyStrata, "external CI list is empty");
  std::vector<std::array<int, 2>> sizes;
  if (!records.empty()) {
    auto [cells, ids] = split_cells(records);
    require(cells.size() == ext.cells.size(), ErrorCode::DimensionMismatch,
            "external CIs cover " + std::to_string(ext.cells.size()) +
                " strata but the records cover " + std::to_string(cells.size()));
    out.stratum_ids = ids;
    for (const CellRecords& cell : cells)
      sizes.push_back({static_cast<int>(cell.g0.size()),
                       static_cast<int>(cell.g1.size())});
  } else {
    for (std::size_t s = 0; s < ext.cells.size(); ++s)
      out.stratum_ids.push_back(static_cast<int>(s + 1));
  }

  bool recovered_any = false;
  out.summaries.resize(ext.cells.size());
  for (std::size_t s = 0; s < ext.cells.size(); ++s) {
    for (int g : {0, 1}) {
      const ExternalCi& e = ext.cells[s][g];
      require(std::fabs(e.level - level) < 1e-6, ErrorCode::InvalidArgument,
              "external CI level " + std::to_string(e.level) +
                  " does not match the requested level " + std::to_string(level));
      require(e.lower <= e.estimate && e.estimate <= e.upper,
              ErrorCode::MalformedInterval,
              "external estimate outside its CI (stratum " + std::to_string(s + 1) +
                  " group " + std::to_string(g) + ")");
      StratumGroupSummary cell;
      cell.estimate = e.estimate;
      cell.ci = {e.lower, e.upper, e.level};
      if (e.variance) {
        cell.variance = *e.variance;
      } else {
        cell.variance = sq((e.upper - e.lower) / (2.0 * z));
        recovered_any = true;
      }
      if (e.n)
        cell.n = *e.n;
      else if (!sizes.empty())
        cell.n = sizes[s][g];
      (g == 0 ? out.summaries[s].g0 : out.summaries[s].g1) = cell;
    }
  }
  if (recovered_any)
    out.notes.push_back("variance recovered from CI width for external summaries");
  out.notes.push_back(
      "external CIs are re-leveled by z-ratio scaling of the half-widths (approximate)");
  const SummaryMatrix base = out.summaries;
  out.refit = [base, level](std::size_t s, int group, double refit_level) {
    require(s < base.size(), ErrorCode::InvalidArgument, "stratum out of range");
    const StratumGroupSummary& cell = group == 0 ? base[s].g0 : base[s].g1;
    const double scale = z_for_level(refit_level) / z_for_level(level);
    return ConfidenceInterval{
        cell.estimate - (cell.estimate - cell.ci.lower) * scale,
        cell.estimate + (cell.ci.upper - cell.estimate) * scale, refit_level};
  };
  return out;
}

ConfidenceInterval interaction_ci(
    std::span<const std::pair<double, ConfidenceInterval>> stratum_diffs) {
  require(stratum_diffs.size() == 2, ErrorCode::StrataCount,
          "the interaction contrast needs exactly two strata");
  return mover_diff_unstratified(stratum_diffs[0].first, stratum_diffs[0].second,
                                 stratum_diffs[1].first, stratum_diffs[1].second);
}

ConfidenceInterval interaction_ratio_ci(
    std::span<const std::pair<double, ConfidenceInterval>> stratum_ratios) {
  require(stratum_ratios.size() == 2, ErrorCode::StrataCount,
          "the interaction contrast needs exactly two strata");
  for (const auto& [est, ci] : stratum_ratios) {
    require(est > 0.0 && ci.lower > 0.0, ErrorCode::NonpositiveEstimate,
            "log-scale interaction needs positive ratios and limits");
  }
  auto log_ci = [](const std::pair<double, ConfidenceInterval>& r) {
    return std::pair<double, ConfidenceInterval>{
        std::log(r.first),
        {std::log(r.second.lower), std::log(r.second.upper), r.second.level}};
  };
  const auto a = log_ci(stratum_ratios[0]);
  const auto b = log_ci(stratum_ratios[1]);
  const ConfidenceInterval log_iv =
      mover_diff_unstratified(a.first, a.second, b.first, b.second);
  return {std::exp(log_iv.lower), std::exp(log_iv.upper), log_iv.level};
}

WeightSpec resolve_weights_survival(const SummaryMatrix& summaries, WeightScheme scheme,
                                    std::span<const double> fixed) {
  require(!summaries.empty(), ErrorCode::EmptyStrata, "no strata supplied");
  WeightSpec spec;
  spec.scheme = scheme;
  switch (scheme) {
    case WeightScheme::Fixed:
      require(fixed.size() == summaries.size(), ErrorCode::DimensionMismatch,
              "fixed weights must list one entry per stratum");
      return WeightSpec::fixed(fixed);
    case WeightScheme::Mh: {
      std::vector<double> w(summaries.size());
      for (std::size_t s = 0; s < summaries.size(); ++s) {
        require(summaries[s].g0.n && summaries[s].g1.n, ErrorCode::InvariantViolation,
                "MH weights need the per-cell sample sizes");
        const double n0 = *summaries[s].g0.n, n1 = *summaries[s].g1.n;
        w[s] = n1 * n0 / (n1 + n0);
      }
      double total = 0.0;
      for (double v : w) total += v;
      for (double& v : w) v /= total;
      spec.resolved = std::move(w);
      return spec;
    }
    case WeightScheme::Inv: {
      std::vector<double> w(summaries.size());
      double total = 0.0;
      for (std::size_t s = 0; s < summaries.size(); ++s) {
        const double v = summaries[s].g0.variance + summaries[s].g1.variance;
        require(v > 0.0, ErrorCode::DegenerateVariance,
                "stratum " + std::to_string(s + 1) + " difference variance is zero");
        w[s] = 1.0 / v;
        total += w[s];
      }
      for (double& v : w) v /= total;
      spec.resolved = std::move(w);
      return spec;
    }
    case WeightScheme::Mr:
      fail(ErrorCode::InvalidArgument,
           "minimum-risk weights are a binary-endpoint construction");
  }
  fail(ErrorCode::InvalidArgument, "unknown weight scheme");
}

SurvivalAnalysis analyze_survival(const SurvivalSummaries& input,
                                  const WeightSpec& weights,
                                  const std::set<MethodId>& methods,
                                  const std::vector<Scale>& scales, double level) {
  const double alpha = 1.0 - level;
  SurvivalAnalysis out;
  out.notes = input.notes;

  auto compute = [&](MethodId m, Scale scale) -> EffectResult {
    if (scale == Scale::Difference) {
      switch (m) {
        case MethodId::Av: return av_diff_ci(input.summaries, weights, 1.0, alpha);
        case MethodId::Wald: return wald_diff_ci(input.summaries, weights, 1.0, alpha);
        case MethodId::Ac:
          return ac_diff_ci(input.summaries, weights, 1.0, alpha, input.refit);
        case MethodId::Ac2:
          return ac2_diff_ci(input.summaries, weights, 1.0, alpha, input.refit);
        default: break;
      }
    } else {
      switch (m) {
        case MethodId::Av: return fieller_av_ratio(input.summaries, weights, alpha);
        case MethodId::Avl: return avl_ratio(input.summaries, weights, alpha);
        case MethodId::Ac:
          return fieller_ac_ratio(input.summaries, weights, alpha, input.refit);
        case MethodId::Acl: return acl_ratio(input.summaries, weights, alpha, input.refit);
        case MethodId::Ac2:
          return ac2_ratio_bisection(input.summaries, weights, alpha, input.refit);
        default: break;
      }
    }
    fail(ErrorCode::InvalidArgument,
         std::string(method_name(m)) + " is a binary-endpoint comparator; "
         "survival analyses support AV/AC/AC2/WALD (difference) and "
         "AV/AVL/AC/ACL/AC2 (ratio)");
  };

  for (Scale scale : scales) {
    for (MethodId m : methods) {
      if (!method_valid_for(m, scale)) continue;
      try {
        out.results.push_back(compute(m, scale));
      } catch (const MoverError& e) {
        out.failures.push_back(MethodFailure{m, scale, e.code(), e.what()});
      }
    }
  }
  return out;
}

}  // namespace moverci
