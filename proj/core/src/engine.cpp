#include "moverci/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "moverci/stats.hpp"

namespace moverci {

namespace {

void check_pair_intervals(const SummaryMatrix& summaries) {
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    for (int g : {0, 1}) {
      const StratumGroupSummary& cell = g == 0 ? summaries[s].g0 : summaries[s].g1;
      require(cell.ci.lower <= cell.estimate && cell.estimate <= cell.ci.upper,
              ErrorCode::MalformedInterval,
              "stratum " + std::to_string(s + 1) + " group " + std::to_string(g) +
                  ": estimate outside its CI");
    }
  }
}

void check_bundle(const SummaryMatrix& summaries, const WeightSpec& weights) {
  require(!summaries.empty(), ErrorCode::EmptyStrata, "no strata supplied");
  require(weights.resolved.size() == summaries.size(), ErrorCode::DimensionMismatch,
          "weights/summaries strata count mismatch");
  check_pair_intervals(summaries);
}

const StratumGroupSummary& cell_of(const SummaryMatrix& m, std::size_t s, int g) {
  return g == 0 ? m[s].g0 : m[s].g1;
}

double sq(double x) { return x * x; }

/// Degenerate-group fallback: the equal-sigma limit of the Lemma-2 ratio.
double degenerate_gamma(const WeightSpec& weights, double alpha) {
  double wsq = 0.0;
  for (double w : weights.resolved) wsq += w * w;
  return 2.0 * normal_cdf(-std::sqrt(wsq) * z_for_level(1.0 - alpha));
}

struct Ac2Interval {
  double lower;
  double upper;
  double gamma;
};

Ac2Interval ac2_interval_at(const SummaryMatrix& summaries, const WeightSpec& weights,
                            double phi, double alpha, const DiffCiProvider& diff,
                            GammaVarianceSource source) {
  const std::size_t S = summaries.size();
  const double z = z_for_level(1.0 - alpha);
  std::vector<double> sig(S);
  for (std::size_t s = 0; s < S; ++s) {
    double v1, v0;
    if (source == GammaVarianceSource::DeltaVariance) {
      v1 = summaries[s].g1.variance;
      v0 = summaries[s].g0.variance;
    } else {
      v1 = sq(summaries[s].g1.ci.width() / (2.0 * z));
      v0 = sq(summaries[s].g0.ci.width() / (2.0 * z));
    }
    sig[s] = std::sqrt(v1 + phi * phi * v0);
  }
  double den = 0.0;
  for (std::size_t s = 0; s < S; ++s) den += weights.resolved[s] * sig[s];
  const double gamma =
      den > 0.0 ? gamma_level(weights, sig, alpha) : degenerate_gamma(weights, alpha);
  const double level = 1.0 - gamma;
  double lo = 0.0, hi = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    ConfidenceInterval ci = diff(s, phi, level);
    lo += weights.resolved[s] * ci.lower;
    hi += weights.resolved[s] * ci.upper;
  }
  return {lo, hi, gamma};
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

double weighted_estimate(const SummaryMatrix& summaries, const WeightSpec& weights,
                         int group) {
  double tau = 0.0;
  for (std::size_t s = 0; s < summaries.size(); ++s)
    tau += weights.resolved[s] * cell_of(summaries, s, group).estimate;
  return tau;
}

std::vector<double> group_sigmas(const SummaryMatrix& summaries, int group,
                                 double alpha, GammaVarianceSource source) {
  const double z = z_for_level(1.0 - alpha);
  std::vector<double> sig(summaries.size());
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    const StratumGroupSummary& cell = cell_of(summaries, s, group);
    sig[s] = source == GammaVarianceSource::DeltaVariance
                 ? std::sqrt(cell.variance)
                 : cell.ci.width() / (2.0 * z);
  }
  return sig;
}

ConfidenceInterval mover_diff_unstratified(double est1, const ConfidenceInterval& ci1,
                                           double est0, const ConfidenceInterval& ci0) {
  require(ci1.contains(est1), ErrorCode::MalformedInterval,
          "group 1 estimate outside its CI");
  require(ci0.contains(est0), ErrorCode::MalformedInterval,
          "group 0 estimate outside its CI");
  require(std::fabs(ci1.level - ci0.level) < 1e-9, ErrorCode::InvalidArgument,
          "the two one-sample CIs must share a confidence level");
  const double d = est1 - est0;
  const double lo = d - std::sqrt(sq(ci1.lower - est1) + sq(ci0.upper - est0));
  const double hi = d + std::sqrt(sq(ci1.upper - est1) + sq(ci0.lower - est0));
  return {lo, hi, ci1.level};
}

double gamma_level(const WeightSpec& weights, std::span<const double> sigmas,
                   double alpha) {
  require(sigmas.size() == weights.resolved.size(), ErrorCode::DimensionMismatch,
          "sigmas/weights length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    require(sigmas[s] >= 0.0, ErrorCode::InvalidArgument, "negative sigma");
    num += sq(weights.resolved[s] * sigmas[s]);
    den += weights.resolved[s] * sigmas[s];
  }
  require(den > 0.0, ErrorCode::AllZeroVariances,
          "every weighted sigma is zero; gamma undefined");
  const double z_gamma = std::sqrt(num) / den * z_for_level(1.0 - alpha);
  return 2.0 * normal_cdf(-z_gamma);
}

GroupPooled pooled_group_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                            int group, double alpha, const CiProvider& refit,
                            GammaVarianceSource source) {
  check_bundle(summaries, weights);
  require(static_cast<bool>(refit), ErrorCode::RefitUnavailable,
          "no per-stratum CI provider supplied");
  const std::vector<double> sig = group_sigmas(summaries, group, alpha, source);
  double den = 0.0;
  for (std::size_t s = 0; s < sig.size(); ++s) den += weights.resolved[s] * sig[s];
  GroupPooled out;
  out.gamma = den > 0.0 ? gamma_level(weights, sig, alpha)
                        : degenerate_gamma(weights, alpha);
  const double level = 1.0 - out.gamma;
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    ConfidenceInterval ci = refit(s, group, level);
    require(ci.lower <= ci.upper, ErrorCode::MalformedInterval,
            "refit produced an inverted interval");
    out.L += weights.resolved[s] * ci.lower;
    out.U += weights.resolved[s] * ci.upper;
    out.tau_hat += weights.resolved[s] * cell_of(summaries, s, group).estimate;
  }
  return out;
}

DiffCiProvider make_mover_diff_provider(const SummaryMatrix& summaries,
                                        CiProvider refit) {
  require(static_cast<bool>(refit), ErrorCode::RefitUnavailable,
          "no per-stratum CI provider supplied");
  return [summaries, refit = std::move(refit)](std::size_t s, double phi,
                                               double level) {
    const ConfidenceInterval ci1 = refit(s, 1, level);
    const ConfidenceInterval ci0 = refit(s, 0, level);
    const double d1 = summaries[s].g1.estimate;
    const double d0 = summaries[s].g0.estimate;
    const double d = d1 - phi * d0;
    const double lo = d - std::sqrt(sq(ci1.lower - d1) + sq(phi) * sq(ci0.upper - d0));
    const double hi = d + std::sqrt(sq(ci1.upper - d1) + sq(phi) * sq(ci0.lower - d0));
    return ConfidenceInterval{lo, hi, level};
  };
}

EffectResult av_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                        double phi, double alpha) {
  check_bundle(summaries, weights);
  const double level = 1.0 - alpha;
  double tau = 0.0, var_lo = 0.0, var_hi = 0.0;
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    const double w2 = sq(weights.resolved[s]);
    const StratumGroupSummary& g1 = summaries[s].g1;
    const StratumGroupSummary& g0 = summaries[s].g0;
    tau += weights.resolved[s] * (g1.estimate - phi * g0.estimate);
    var_lo += w2 * (sq(g1.ci.lower - g1.estimate) + sq(phi) * sq(g0.ci.upper - g0.estimate));
    var_hi += w2 * (sq(g1.ci.upper - g1.estimate) + sq(phi) * sq(g0.ci.lower - g0.estimate));
  }
  ConfidenceInterval ci{tau - std::sqrt(var_lo), tau + std::sqrt(var_hi), level};
  return make_effect_result(MethodId::Av, Scale::Difference, tau, ci, weights);
}

EffectResult wald_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                          double phi, double alpha) {
  check_bundle(summaries, weights);
  double tau = 0.0, var = 0.0;
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    const double w = weights.resolved[s];
    tau += w * (summaries[s].g1.estimate - phi * summaries[s].g0.estimate);
    var += w * w * (summaries[s].g1.variance + sq(phi) * summaries[s].g0.variance);
  }
  const double half = z_for_level(1.0 - alpha) * std::sqrt(var);
  return make_effect_result(MethodId::Wald, Scale::Difference, tau,
                            {tau - half, tau + half, 1.0 - alpha}, weights);
}

EffectResult ac_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                        double phi, double alpha, const CiProvider& refit,
                        GammaVarianceSource source) {
  const GroupPooled g1 = pooled_group_ci(summaries, weights, 1, alpha, refit, source);
  const GroupPooled g0 = pooled_group_ci(summaries, weights, 0, alpha, refit, source);
  const double tau = g1.tau_hat - phi * g0.tau_hat;
  const double lo = tau - std::sqrt(sq(g1.L - g1.tau_hat) + sq(phi) * sq(g0.U - g0.tau_hat));
  const double hi = tau + std::sqrt(sq(g1.U - g1.tau_hat) + sq(phi) * sq(g0.L - g0.tau_hat));
  return make_effect_result(MethodId::Ac, Scale::Difference, tau,
                            {lo, hi, 1.0 - alpha}, weights, g0.gamma, g1.gamma);
}

EffectResult ac2_diff_ci(const SummaryMatrix& summaries, const WeightSpec& weights,
                         double phi, double alpha, const CiProvider& refit,
                         const DiffCiProvider& diff, GammaVarianceSource source) {
  check_bundle(summaries, weights);
  const DiffCiProvider provider =
      diff ? diff : make_mover_diff_provider(summaries, refit);
  const Ac2Interval iv = ac2_interval_at(summaries, weights, phi, alpha, provider, source);
  double tau = 0.0;
  for (std::size_t s = 0; s < summaries.size(); ++s)
    tau += weights.resolved[s] * (summaries[s].g1.estimate - phi * summaries[s].g0.estimate);
  return make_effect_result(MethodId::Ac2, Scale::Difference, tau,
                            {iv.lower, iv.upper, 1.0 - alpha}, weights, iv.gamma,
                            iv.gamma);
}

std::pair<ConfidenceInterval, std::vector<std::string>> solve_fieller(
    const FiellerCoefficients& k, double level) {
  std::vector<std::string> notes;
  ConfidenceInterval ci{0.0, 0.0, level};

  double disc_l = sq(k.b) - k.a_l * k.c_l;
  if (disc_l < 0.0) {
    notes.push_back("ratio lower limit clamped to 0 (negative discriminant)");
    ci.lower = 0.0;
  } else {
    const double den = k.b + std::sqrt(disc_l);
    if (den <= 0.0) {
      notes.push_back("ratio lower limit clamped to 0 (no positive root)");
      ci.lower = 0.0;
    } else {
      ci.lower = k.c_l / den;  // stable form of (b - sqrt(disc)) / a_l
      if (ci.lower < 0.0) {
        notes.push_back("ratio lower limit clamped to 0 (root below 0)");
        ci.lower = 0.0;
      }
    }
  }

  if (k.a_u <= 0.0) {
    ci.upper = kInfinity;
    notes.push_back("ratio upper limit unbounded (pooled control interval reaches 0)");
  } else {
    double disc_u = sq(k.b) - k.a_u * k.c_u;
    if (disc_u < 0.0) {
      ci.upper = kInfinity;
      notes.push_back("ratio upper limit unbounded (negative discriminant)");
    } else {
      ci.upper = (k.b + std::sqrt(disc_u)) / k.a_u;
    }
  }
  return {ci, notes};
}

namespace {

EffectResult fieller_result(MethodId method, const FiellerCoefficients& k, double tau1,
                            double tau0, double alpha, WeightSpec weights,
                            std::optional<double> gamma0, std::optional<double> gamma1) {
  require(!(tau1 == 0.0 && tau0 == 0.0), ErrorCode::ZeroDenominator,
          "both weighted estimates are zero; the ratio is undefined");
  auto [ci, notes] = solve_fieller(k, 1.0 - alpha);
  const double estimate = tau0 > 0.0 ? tau1 / tau0 : kInfinity;
  return make_effect_result(method, Scale::Ratio, estimate, ci, std::move(weights),
                            gamma0, gamma1, std::move(notes));
}

}  // namespace

EffectResult fieller_ac_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                              double alpha, const CiProvider& refit,
                              GammaVarianceSource source) {
  const GroupPooled g1 = pooled_group_ci(summaries, weights, 1, alpha, refit, source);
  const GroupPooled g0 = pooled_group_ci(summaries, weights, 0, alpha, refit, source);
  FiellerCoefficients k;
  k.b = g1.tau_hat * g0.tau_hat;
  k.a_l = sq(g0.tau_hat) - sq(g0.U - g0.tau_hat);
  k.c_l = sq(g1.tau_hat) - sq(g1.L - g1.tau_hat);
  k.a_u = sq(g0.tau_hat) - sq(g0.L - g0.tau_hat);
  k.c_u = sq(g1.tau_hat) - sq(g1.U - g1.tau_hat);
  return fieller_result(MethodId::Ac, k, g1.tau_hat, g0.tau_hat, alpha, weights,
                        g0.gamma, g1.gamma);
}

EffectResult acl_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                       double alpha, const CiProvider& refit,
                       GammaVarianceSource source) {
  const GroupPooled g1 = pooled_group_ci(summaries, weights, 1, alpha, refit, source);
  const GroupPooled g0 = pooled_group_ci(summaries, weights, 0, alpha, refit, source);
  require(g1.tau_hat > 0.0 && g0.tau_hat > 0.0 && g1.L > 0.0 && g1.U > 0.0 &&
              g0.L > 0.0 && g0.U > 0.0,
          ErrorCode::NonpositiveEstimate,
          "log-ratio CI needs positive estimates and pooled limits");
  const double s_lo =
      std::sqrt(sq(std::log(g1.L / g1.tau_hat)) + sq(std::log(g0.U / g0.tau_hat)));
  const double s_hi =
      std::sqrt(sq(std::log(g1.U / g1.tau_hat)) + sq(std::log(g0.L / g0.tau_hat)));
  const double ratio = g1.tau_hat / g0.tau_hat;
  ConfidenceInterval ci{ratio * std::exp(-s_lo), ratio * std::exp(s_hi), 1.0 - alpha};
  return make_effect_result(MethodId::Acl, Scale::Ratio, ratio, ci, weights, g0.gamma,
                            g1.gamma);
}

namespace {

struct RecoveredSquares {
  double l1 = 0.0, u1 = 0.0, l0 = 0.0, u0 = 0.0;  // sum_s w_s^2 (limit - est)^2
};

RecoveredSquares recovered_squares(const SummaryMatrix& summaries,
                                   const WeightSpec& weights) {
  RecoveredSquares r;
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    const double w2 = sq(weights.resolved[s]);
    const StratumGroupSummary& g1 = summaries[s].g1;
    const StratumGroupSummary& g0 = summaries[s].g0;
    r.l1 += w2 * sq(g1.ci.lower - g1.estimate);
    r.u1 += w2 * sq(g1.ci.upper - g1.estimate);
    r.l0 += w2 * sq(g0.ci.lower - g0.estimate);
    r.u0 += w2 * sq(g0.ci.upper - g0.estimate);
  }
  return r;
}

}  // namespace

EffectResult fieller_av_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                              double alpha) {
  check_bundle(summaries, weights);
  const double tau1 = weighted_estimate(summaries, weights, 1);
  const double tau0 = weighted_estimate(summaries, weights, 0);
  const RecoveredSquares r = recovered_squares(summaries, weights);
  FiellerCoefficients k;
  k.b = tau1 * tau0;
  k.a_l = sq(tau0) - r.u0;
  k.c_l = sq(tau1) - r.l1;
  k.a_u = sq(tau0) - r.l0;
  k.c_u = sq(tau1) - r.u1;
  return fieller_result(MethodId::Av, k, tau1, tau0, alpha, weights, std::nullopt,
                        std::nullopt);
}

EffectResult avl_ratio(const SummaryMatrix& summaries, const WeightSpec& weights,
                       double alpha) {
  check_bundle(summaries, weights);
  const double tau1 = weighted_estimate(summaries, weights, 1);
  const double tau0 = weighted_estimate(summaries, weights, 0);
  require(tau1 > 0.0 && tau0 > 0.0, ErrorCode::NonpositiveEstimate,
          "log-ratio CI needs positive weighted estimates");
  const RecoveredSquares r = recovered_squares(summaries, weights);
  // Lower limit pairs the group-1 lower with the group-0 upper recovered
  // squares, mirroring the additive-variance convention.
  const double s_lo = std::sqrt(r.l1 / sq(tau1) + r.u0 / sq(tau0));
  const double s_hi = std::sqrt(r.u1 / sq(tau1) + r.l0 / sq(tau0));
  const double ratio = tau1 / tau0;
  ConfidenceInterval ci{ratio * std::exp(-s_lo), ratio * std::exp(s_hi), 1.0 - alpha};
  return make_effect_result(MethodId::Avl, Scale::Ratio, ratio, ci, weights);
}

namespace {

/// Root of a strictly decreasing endpoint function. Returns 0 when the
/// function is nonpositive at the origin (boundary lower limit) and +inf when
/// it stays positive through every bracket expansion (boundary upper limit).
double decreasing_root(const std::function<double(double)>& f, double start,
                       std::vector<std::string>& notes, const char* what) {
  constexpr int kMaxDoublings = 60;
  constexpr int kMaxIterations = 200;
  constexpr double kRelTol = 1e-10;

  double guide = (std::isfinite(start) && start > 0.0) ? start : 1.0;
  double a = guide / 2.0, b = guide * 2.0;
  double fa = f(a), fb = f(b);
  require(std::isfinite(fa) && std::isfinite(fb), ErrorCode::NoConvergence,
          std::string(what) + ": endpoint function not finite near bracket [" +
              fmt(a) + ", " + fmt(b) + "]");

  int tries = 0;
  while (fa < 0.0 && tries++ < kMaxDoublings) {
    a /= 2.0;
    fa = f(a);
  }
  if (fa < 0.0) {
    // Already nonpositive arbitrarily close to 0: the root sits at the boundary.
    notes.push_back(std::string(what) + " at boundary 0");
    return 0.0;
  }
  tries = 0;
  while (fb > 0.0 && tries++ < kMaxDoublings) {
    b *= 2.0;
    fb = f(b);
  }
  if (fb > 0.0) {
    notes.push_back(std::string(what) + " unbounded (no root below " + fmt(b) + ")");
    return kInfinity;
  }

  int iters = 0;
  while ((b - a) > kRelTol * std::max(1.0, b) && iters++ < kMaxIterations) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    require(std::isfinite(fm), ErrorCode::NoConvergence,
            std::string(what) + ": endpoint function not finite at " + fmt(m) +
                " (bracket [" + fmt(a) + ", " + fmt(b) + "], residual " + fmt(fm) + ")");
    if (fm > 0.0)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

EffectResult ac2_ratio_bisection(const SummaryMatrix& summaries, const WeightSpec& weights,
                                 double alpha, const CiProvider& refit,
                                 const DiffCiProvider& diff, GammaVarianceSource source) {
  check_bundle(summaries, weights);
  const double tau1 = weighted_estimate(summaries, weights, 1);
  const double tau0 = weighted_estimate(summaries, weights, 0);
  require(!(tau1 == 0.0 && tau0 == 0.0), ErrorCode::ZeroDenominator,
          "both weighted estimates are zero; the ratio is undefined");

  const DiffCiProvider provider =
      diff ? diff : make_mover_diff_provider(summaries, refit);
  std::vector<std::string> notes;
  ConfidenceInterval ci{0.0, 0.0, 1.0 - alpha};
  std::optional<double> gamma;

  // The AC Fieller limits seed the brackets.
  const EffectResult ac = fieller_ac_ratio(summaries, weights, alpha, refit, source);

  if (tau1 == 0.0) {
    ci.lower = 0.0;
  } else {
    auto lower_endpoint = [&](double phi) {
      return ac2_interval_at(summaries, weights, phi, alpha, provider, source).lower;
    };
    ci.lower = decreasing_root(lower_endpoint, ac.ci.lower, notes, "ratio lower limit");
  }

  if (tau0 == 0.0) {
    ci.upper = kInfinity;
    notes.push_back("ratio upper limit unbounded (control estimate is 0)");
  } else {
    auto upper_endpoint = [&](double phi) {
      return ac2_interval_at(summaries, weights, phi, alpha, provider, source).upper;
    };
    const double seed = std::isfinite(ac.ci.upper) ? ac.ci.upper : tau1 / tau0;
    ci.upper = decreasing_root(upper_endpoint, seed, notes, "ratio upper limit");
  }

  // gamma varies with phi; report it at the point estimate.
  const double estimate = tau0 > 0.0 ? tau1 / tau0 : kInfinity;
  const double gamma_at =
      std::isfinite(estimate) ? estimate : (ci.lower > 0.0 ? ci.lower : 1.0);
  gamma = ac2_interval_at(summaries, weights, gamma_at, alpha, provider, source).gamma;
  const double g = gamma.value_or(alpha);
  return make_effect_result(MethodId::Ac2, Scale::Ratio, estimate, ci, weights, g, g,
                            std::move(notes));
}

}  // namespace moverci
