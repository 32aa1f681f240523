#include "moverci/binary.hpp"

#include <algorithm>
#include <cmath>

#include "moverci/stats.hpp"

namespace moverci {

namespace {

double sq(double x) { return x * x; }

void check_data(const std::vector<BinaryStratum>& data) {
  require(!data.empty(), ErrorCode::EmptyStrata, "no strata supplied");
  for (std::size_t s = 0; s < data.size(); ++s) {
    const BinaryStratum& b = data[s];
    const std::string where = "stratum " + std::to_string(s + 1);
    require(b.n0 > 0 && b.n1 > 0, ErrorCode::InvariantViolation,
            where + ": group sizes must be positive");
    require(b.x0 >= 0 && b.x0 <= b.n0, ErrorCode::InvariantViolation,
            where + ": x0 outside [0, n0]");
    require(b.x1 >= 0 && b.x1 <= b.n1, ErrorCode::InvariantViolation,
            where + ": x1 outside [0, n1]");
  }
}

double phat(int x, int n) { return static_cast<double>(x) / n; }

/// Zero-cell adjusted proportion, used only inside weight formulas.
double phat_adj(int x, int n, ZeroCellPolicy policy) {
  if (policy == ZeroCellPolicy::HalfEvent) {
    if (x == 0) return 0.5 / n;
    if (x == n) return 1.0 - 0.5 / n;
  }
  return phat(x, n);
}

double diff_variance(const BinaryStratum& b, ZeroCellPolicy policy) {
  const double p1 = phat_adj(b.x1, b.n1, policy);
  const double p0 = phat_adj(b.x0, b.n0, policy);
  return p1 * (1.0 - p1) / b.n1 + p0 * (1.0 - p0) / b.n0;
}

std::vector<double> normalized(std::vector<double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  require(total > 0.0, ErrorCode::DegenerateVariance, "weights sum to zero");
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

ConfidenceInterval wilson_ci(int x, int n, double level) {
  require(n >= 1, ErrorCode::InvalidArgument, "wilson_ci needs n >= 1");
  require(x >= 0 && x <= n, ErrorCode::InvalidArgument, "wilson_ci needs 0 <= x <= n");
  const double z = z_for_level(level);
  const double z2 = z * z;
  const double p = phat(x, n);
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  ConfidenceInterval ci{center - half, center + half, level};
  // Zero numerator forces the boundary limits exactly.
  if (x == 0) ci.lower = 0.0;
  if (x == n) ci.upper = 1.0;
  ci.lower = std::clamp(ci.lower, 0.0, 1.0);
  ci.upper = std::clamp(ci.upper, 0.0, 1.0);
  return ci;
}

WeightSpec resolve_weights(const std::vector<BinaryStratum>& data, WeightScheme scheme,
                           ZeroCellPolicy policy, std::span<const double> fixed) {
  check_data(data);
  const std::size_t S = data.size();
  WeightSpec spec;
  spec.scheme = scheme;
  switch (scheme) {
    case WeightScheme::Fixed: {
      require(fixed.size() == S, ErrorCode::DimensionMismatch,
              "fixed weights must list one entry per stratum");
      spec = WeightSpec::fixed(fixed);
      return spec;
    }
    case WeightScheme::Mh: {
      std::vector<double> w(S);
      for (std::size_t s = 0; s < S; ++s)
        w[s] = static_cast<double>(data[s].n1) * data[s].n0 / (data[s].n1 + data[s].n0);
      spec.resolved = normalized(std::move(w));
      return spec;
    }
    case WeightScheme::Inv: {
      std::vector<double> v(S);
      std::size_t zeros = 0;
      for (std::size_t s = 0; s < S; ++s) {
        v[s] = diff_variance(data[s], policy);
        if (v[s] == 0.0) ++zeros;
      }
      require(zeros < S, ErrorCode::DegenerateVariance,
              "every stratum variance is zero; INV weights undefined "
              "(consider the half-event zero-cell policy)");
      std::vector<double> w(S, 0.0);
      if (zeros > 0) {
        // Limit of 1/V normalization: zero-variance strata absorb all weight.
        for (std::size_t s = 0; s < S; ++s)
          if (v[s] == 0.0) w[s] = 1.0;
      } else {
        for (std::size_t s = 0; s < S; ++s) w[s] = 1.0 / v[s];
      }
      spec.resolved = normalized(std::move(w));
      return spec;
    }
    case WeightScheme::Mr: {
      require(S >= 2, ErrorCode::MrStrataCount,
              "minimum-risk weights need at least two strata");
      double n_total = 0.0;
      for (const BinaryStratum& b : data) n_total += b.n0 + b.n1;
      std::vector<double> v(S), d(S), f(S);
      for (std::size_t s = 0; s < S; ++s) {
        v[s] = diff_variance(data[s], policy);
        require(v[s] > 0.0, ErrorCode::DegenerateVariance,
                "stratum " + std::to_string(s + 1) +
                    " has zero variance; MR weights undefined "
                    "(consider the half-event zero-cell policy)");
        d[s] = phat_adj(data[s].x1, data[s].n1, policy) -
               phat_adj(data[s].x0, data[s].n0, policy);
        f[s] = (data[s].n0 + data[s].n1) / n_total;
      }
      // Minimize sum w^2 V + (sum (w - f) d)^2 s.t. sum w = 1. The stationary
      // weights are w_s = (a - c d_s) / V_s with (a, c) from the 2x2 system
      //   a S1 - c Sd  = 1
      //   a Sd - c (1 + Sdd) = sum f d.
      double s1 = 0.0, sd = 0.0, sdd = 0.0, dbar = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        s1 += 1.0 / v[s];
        sd += d[s] / v[s];
        sdd += d[s] * d[s] / v[s];
        dbar += f[s] * d[s];
      }
      const double det = -s1 * (1.0 + sdd) + sd * sd;
      require(std::fabs(det) > 0.0, ErrorCode::DegenerateVariance,
              "singular minimum-risk system");
      const double a = (-(1.0 + sdd) + sd * dbar) / det;
      const double c = (s1 * dbar - sd) / det;
      std::vector<double> w(S);
      for (std::size_t s = 0; s < S; ++s) w[s] = (a - c * d[s]) / v[s];
      // The minimizer sums to 1 by construction; renormalize the rounding away.
      spec.resolved = normalized(std::move(w));
      for (double ws : spec.resolved)
        require(ws >= -1e-12, ErrorCode::DegenerateVariance,
                "minimum-risk weight is negative");
      for (double& ws : spec.resolved) ws = std::max(ws, 0.0);
      return spec;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown weight scheme");
}

double mr_continuity(const std::vector<BinaryStratum>& data) {
  check_data(data);
  double denom = 0.0;
  for (const BinaryStratum& b : data)
    denom += static_cast<double>(b.n1) * b.n0 / (b.n1 + b.n0);
  return (3.0 / 16.0) / denom;
}

EffectResult wald_rd_ci(const std::vector<BinaryStratum>& data,
                        const WeightSpec& weights, double level) {
  check_data(data);
  require(weights.resolved.size() == data.size(), ErrorCode::DimensionMismatch,
          "weights/strata mismatch");
  double tau = 0.0, var = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double w = weights.resolved[s];
    tau += w * (phat(data[s].x1, data[s].n1) - phat(data[s].x0, data[s].n0));
    var += w * w * diff_variance(data[s], ZeroCellPolicy::None);
  }
  const double half = z_for_level(level) * std::sqrt(var);
  return make_effect_result(MethodId::Wald, Scale::Difference, tau,
                            {tau - half, tau + half, level}, weights);
}

EffectResult asy_rr_ci(const std::vector<BinaryStratum>& data,
                       const WeightSpec& weights, double level) {
  check_data(data);
  require(weights.resolved.size() == data.size(), ErrorCode::DimensionMismatch,
          "weights/strata mismatch");
  double t1 = 0.0, t0 = 0.0, v1 = 0.0, v0 = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double w = weights.resolved[s];
    const double p1 = phat(data[s].x1, data[s].n1);
    const double p0 = phat(data[s].x0, data[s].n0);
    t1 += w * p1;
    t0 += w * p0;
    v1 += w * w * p1 * (1.0 - p1) / data[s].n1;
    v0 += w * w * p0 * (1.0 - p0) / data[s].n0;
  }
  require(t1 > 0.0 && t0 > 0.0, ErrorCode::ZeroPooledRate,
          "pooled rate is zero in one group; log-RR undefined");
  const double se = std::sqrt(v1 / sq(t1) + v0 / sq(t0));
  const double half = z_for_level(level) * se;
  const double rr = t1 / t0;
  return make_effect_result(MethodId::Asy, Scale::Ratio, rr,
                            {rr * std::exp(-half), rr * std::exp(half), level}, weights);
}

EffectResult dc_rd_ci(const std::vector<BinaryStratum>& data, double level) {
  check_data(data);
  long long events = 0;
  for (const BinaryStratum& b : data) events += b.x0 + b.x1;
  require(events > 0, ErrorCode::Incomputable,
          "dually consistent RD variance needs at least one event in the study");
  const WeightSpec mh = resolve_weights(data, WeightScheme::Mh);
  double tau = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s)
    tau += mh.resolved[s] * (phat(data[s].x1, data[s].n1) - phat(data[s].x0, data[s].n0));
  // Sato's estimator via the constant-RD substitution at delta = tau:
  //   p1(1-p1)/n1 -> [(p0+d)(1-p1) + p1(1-p0-d)] / (2 n1)
  //   p0(1-p0)/n0 -> [(p1-d)(1-p0) + p0(1-p1+d)] / (2 n0)
  double var = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double w = mh.resolved[s];
    const double p1 = phat(data[s].x1, data[s].n1);
    const double p0 = phat(data[s].x0, data[s].n0);
    const double t1 = ((p0 + tau) * (1.0 - p1) + p1 * (1.0 - p0 - tau)) / (2.0 * data[s].n1);
    const double t0 = ((p1 - tau) * (1.0 - p0) + p0 * (1.0 - p1 + tau)) / (2.0 * data[s].n0);
    var += w * w * (t1 + t0);
  }
  require(var >= 0.0, ErrorCode::Incomputable, "negative dually consistent variance");
  const double half = z_for_level(level) * std::sqrt(var);
  return make_effect_result(MethodId::Dc, Scale::Difference, tau,
                            {tau - half, tau + half, level}, mh);
}

EffectResult dc_rr_ci(const std::vector<BinaryStratum>& data, double level) {
  check_data(data);
  long long e0 = 0, e1 = 0;
  for (const BinaryStratum& b : data) {
    e0 += b.x0;
    e1 += b.x1;
  }
  require(e0 > 0 && e1 > 0, ErrorCode::Incomputable,
          "dually consistent RR variance needs at least one event per group");
  // Greenland-Robins variance on the unnormalized MH weight scale.
  double t1 = 0.0, t0 = 0.0, num = 0.0;
  for (const BinaryStratum& b : data) {
    const double w = static_cast<double>(b.n1) * b.n0 / (b.n1 + b.n0);
    const double p1 = phat(b.x1, b.n1);
    const double p0 = phat(b.x0, b.n0);
    const double pbar = (b.n0 * p0 + b.n1 * p1) / (b.n0 + b.n1);
    t1 += w * p1;
    t0 += w * p0;
    num += w * (pbar - p0 * p1);
  }
  const double var = num / (t1 * t0);
  const double half = z_for_level(level) * std::sqrt(var);
  const double rr = t1 / t0;
  const WeightSpec mh = resolve_weights(data, WeightScheme::Mh);
  return make_effect_result(MethodId::Dc, Scale::Ratio, rr,
                            {rr * std::exp(-half), rr * std::exp(half), level}, mh);
}

EffectResult ys_rd_ci(const std::vector<BinaryStratum>& data,
                      const WeightSpec& weights, double level) {
  check_data(data);
  const double alpha = 1.0 - level;
  const SummaryMatrix summaries = binary_summaries(data, level);
  const CiProvider refit = wilson_provider(data);
  const GroupPooled g1 = pooled_group_ci(summaries, weights, 1, alpha, refit);
  const GroupPooled g0 = pooled_group_ci(summaries, weights, 0, alpha, refit);
  double lam1 = 0.0, lam0 = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double w2 = sq(weights.resolved[s]);
    lam1 += w2 / data[s].n1;
    lam0 += w2 / data[s].n0;
  }
  require(g1.L >= 0.0 && g1.U <= 1.0 && g0.L >= 0.0 && g0.U <= 1.0,
          ErrorCode::InvariantViolation, "pooled limits left [0,1]");
  const double tau = g1.tau_hat - g0.tau_hat;
  const double z = z_for_level(level);
  const double s_lo = lam1 * g1.L * (1.0 - g1.L) + lam0 * g0.U * (1.0 - g0.U);
  const double s_hi = lam1 * g1.U * (1.0 - g1.U) + lam0 * g0.L * (1.0 - g0.L);
  return make_effect_result(MethodId::Ys, Scale::Difference, tau,
                            {tau - z * std::sqrt(s_lo), tau + z * std::sqrt(s_hi), level},
                            weights, g0.gamma, g1.gamma);
}

double unstratified_bias(double p10, double p20, double n10, double n20, double r1,
                         double r2, double /*delta*/) {
  require(p10 >= 0.0 && p10 <= 1.0 && p20 >= 0.0 && p20 <= 1.0,
          ErrorCode::InvalidArgument, "rates must lie in [0,1]");
  require(n10 > 0.0 && n20 > 0.0 && r1 > 0.0 && r2 > 0.0, ErrorCode::InvalidArgument,
          "sizes and allocation ratios must be positive");
  return n10 * n20 * (r1 - r2) * (p10 - p20) /
         ((n10 * r1 + n20 * r2) * (n10 + n20));
}

SummaryMatrix binary_summaries(const std::vector<BinaryStratum>& data, double level) {
  check_data(data);
  SummaryMatrix out(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    const BinaryStratum& b = data[s];
    auto make = [&](int x, int n) {
      StratumGroupSummary cell;
      cell.estimate = phat(x, n);
      cell.variance = cell.estimate * (1.0 - cell.estimate) / n;
      cell.ci = wilson_ci(x, n, level);
      cell.n = n;
      return cell;
    };
    out[s].g0 = make(b.x0, b.n0);
    out[s].g1 = make(b.x1, b.n1);
  }
  return out;
}

CiProvider wilson_provider(std::vector<BinaryStratum> data) {
  return [data = std::move(data)](std::size_t s, int group, double level) {
    require(s < data.size(), ErrorCode::InvalidArgument, "stratum index out of range");
    const BinaryStratum& b = data[s];
    return group == 0 ? wilson_ci(b.x0, b.n0, level) : wilson_ci(b.x1, b.n1, level);
  };
}

BinaryAnalysis analyze_binary(const std::vector<BinaryStratum>& data,
                              WeightScheme scheme, const std::set<MethodId>& methods,
                              const std::vector<Scale>& scales, double level,
                              ZeroCellPolicy policy, std::span<const double> fixed) {
  check_data(data);
  const double alpha = 1.0 - level;
  const WeightSpec weights = resolve_weights(data, scheme, policy, fixed);
  const SummaryMatrix summaries = binary_summaries(data, level);
  const CiProvider refit = wilson_provider(data);

  BinaryAnalysis out;
  if (scheme == WeightScheme::Mr) out.mr_correction = mr_continuity(data);

  auto compute = [&](MethodId m, Scale scale) -> EffectResult {
    if (scale == Scale::Difference) {
      switch (m) {
        case MethodId::Wald: return wald_rd_ci(data, weights, level);
        case MethodId::Dc: return dc_rd_ci(data, level);
        case MethodId::Ys: return ys_rd_ci(data, weights, level);
        case MethodId::Av: return av_diff_ci(summaries, weights, 1.0, alpha);
        case MethodId::Ac: return ac_diff_ci(summaries, weights, 1.0, alpha, refit);
        case MethodId::Ac2: return ac2_diff_ci(summaries, weights, 1.0, alpha, refit);
        default: break;
      }
    } else {
      switch (m) {
        case MethodId::Asy: return asy_rr_ci(data, weights, level);
        case MethodId::Dc: return dc_rr_ci(data, level);
        case MethodId::Av: return fieller_av_ratio(summaries, weights, alpha);
        case MethodId::Avl: return avl_ratio(summaries, weights, alpha);
        case MethodId::Ac: return fieller_ac_ratio(summaries, weights, alpha, refit);
        case MethodId::Acl: return acl_ratio(summaries, weights, alpha, refit);
        case MethodId::Ac2: return ac2_ratio_bisection(summaries, weights, alpha, refit);
        default: break;
      }
    }
    fail(ErrorCode::InvalidArgument, "unreachable method/scale pair");
  };

  for (Scale scale : scales) {
    for (MethodId m : methods) {
      if (!method_valid_for(m, scale)) continue;  // no invented combinations
      if (m == MethodId::Dc && scheme != WeightScheme::Mh) continue;  // DC is MH-only
      try {
        EffectResult r = compute(m, scale);
        if (scheme == WeightScheme::Mr && scale == Scale::Difference) {
          r.ci.lower -= out.mr_correction;
          r.ci.upper += out.mr_correction;
          char note[64];
          std::snprintf(note, sizeof note, "mr-continuity widening c=%.6g",
                        out.mr_correction);
          r.corrections.emplace_back(note);
        }
        out.results.push_back(std::move(r));
      } catch (const MoverError& e) {
        out.failures.push_back(MethodFailure{m, scale, e.code(), e.what()});
      }
    }
  }
  return out;
}

}  // namespace moverci
