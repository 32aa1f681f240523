#include "moverci/types.hpp"

#include <cmath>
#include <numeric>

namespace moverci {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyStrata: return "EmptyStrata";
    case ErrorCode::GroupMissing: return "GroupMissing";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MrStrataCount: return "MrStrataCount";
    case ErrorCode::MalformedInterval: return "MalformedInterval";
    case ErrorCode::AllZeroVariances: return "AllZeroVariances";
    case ErrorCode::RefitUnavailable: return "RefitUnavailable";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::NonpositiveEstimate: return "NonpositiveEstimate";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::ZeroPooledRate: return "ZeroPooledRate";
    case ErrorCode::Incomputable: return "Incomputable";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::BeyondFollowUp: return "BeyondFollowUp";
    case ErrorCode::StrataCount: return "StrataCount";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::RegenerationLimit: return "RegenerationLimit";
    case ErrorCode::UnknownExample: return "UnknownExample";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

const char* method_name(MethodId method) {
  switch (method) {
    case MethodId::Av: return "AV";
    case MethodId::Ac: return "AC";
    case MethodId::Ac2: return "AC2";
    case MethodId::Avl: return "AVL";
    case MethodId::Acl: return "ACL";
    case MethodId::Wald: return "WALD";
    case MethodId::Asy: return "ASY";
    case MethodId::Dc: return "DC";
    case MethodId::Ys: return "YS";
  }
  return "?";
}

MethodId method_from_name(const std::string& name) {
  std::string u;
  u.reserve(name.size());
  for (char c : name) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "AV") return MethodId::Av;
  if (u == "AC") return MethodId::Ac;
  if (u == "AC2") return MethodId::Ac2;
  if (u == "AVL") return MethodId::Avl;
  if (u == "ACL") return MethodId::Acl;
  if (u == "WALD") return MethodId::Wald;
  if (u == "ASY") return MethodId::Asy;
  if (u == "DC") return MethodId::Dc;
  if (u == "YS") return MethodId::Ys;
  fail(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

const char* scale_name(Scale scale) {
  return scale == Scale::Difference ? "difference" : "ratio";
}

const char* scheme_name(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::Mh: return "mh";
    case WeightScheme::Inv: return "inv";
    case WeightScheme::Mr: return "mr";
    case WeightScheme::Fixed: return "fixed";
  }
  return "?";
}

WeightScheme scheme_from_name(const std::string& name) {
  std::string l;
  l.reserve(name.size());
  for (char c : name) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (l == "mh") return WeightScheme::Mh;
  if (l == "inv") return WeightScheme::Inv;
  if (l == "mr") return WeightScheme::Mr;
  if (l == "fixed") return WeightScheme::Fixed;
  fail(ErrorCode::InvalidArgument, "unknown weight scheme '" + name + "'");
}

bool method_valid_for(MethodId method, Scale scale) {
  switch (method) {
    case MethodId::Av:
    case MethodId::Ac:
    case MethodId::Ac2:
    case MethodId::Dc:
      return true;
    case MethodId::Wald:
    case MethodId::Ys:
      return scale == Scale::Difference;
    case MethodId::Avl:
    case MethodId::Acl:
    case MethodId::Asy:
      return scale == Scale::Ratio;
  }
  return false;
}

std::vector<MethodId> methods_for_scale(Scale scale) {
  std::vector<MethodId> out;
  for (MethodId m : {MethodId::Av, MethodId::Ac, MethodId::Ac2, MethodId::Avl,
                     MethodId::Acl, MethodId::Wald, MethodId::Asy, MethodId::Dc,
                     MethodId::Ys}) {
    if (method_valid_for(m, scale)) out.push_back(m);
  }
  return out;
}

WeightSpec WeightSpec::fixed(std::span<const double> raw) {
  require(!raw.empty(), ErrorCode::EmptyStrata, "fixed weights: empty list");
  double total = 0.0;
  for (double w : raw) {
    require(w >= 0.0, ErrorCode::InvariantViolation,
            "fixed weights: negative entry " + std::to_string(w));
    total += w;
  }
  require(total > 0.0, ErrorCode::InvariantViolation, "fixed weights: zero total");
  WeightSpec spec;
  spec.scheme = WeightScheme::Fixed;
  spec.resolved.assign(raw.begin(), raw.end());
  for (double& w : spec.resolved) w /= total;
  return spec;
}

namespace {

void validate_summary(const StratumGroupSummary& s, std::size_t stratum, int group) {
  const std::string where =
      "stratum " + std::to_string(stratum + 1) + " group " + std::to_string(group);
  require(std::isfinite(s.estimate), ErrorCode::InvariantViolation,
          where + ": estimate is not finite");
  require(s.variance >= 0.0, ErrorCode::InvariantViolation,
          where + ": variance " + std::to_string(s.variance) + " < 0");
  require(s.ci.level > 0.0 && s.ci.level < 1.0, ErrorCode::InvariantViolation,
          where + ": ci.level " + std::to_string(s.ci.level) + " outside (0,1)");
  require(s.ci.lower <= s.ci.upper, ErrorCode::InvariantViolation,
          where + ": ci.lower > ci.upper");
  require(s.ci.contains(s.estimate), ErrorCode::MalformedInterval,
          where + ": estimate " + std::to_string(s.estimate) +
              " outside its CI [" + std::to_string(s.ci.lower) + ", " +
              std::to_string(s.ci.upper) + "]");
  if (s.n) {
    require(*s.n > 0, ErrorCode::InvariantViolation,
            where + ": n " + std::to_string(*s.n) + " is not positive");
  }
}

}  // namespace

EffectResult make_effect_result(MethodId method, Scale scale, double estimate,
                                ConfidenceInterval ci, WeightSpec weights,
                                std::optional<double> gamma0,
                                std::optional<double> gamma1,
                                std::vector<std::string> corrections) {
  require(method_valid_for(method, scale), ErrorCode::InvalidArgument,
          std::string(method_name(method)) + " is not defined on the " +
              scale_name(scale) + " scale");
  require(ci.lower <= ci.upper, ErrorCode::InvariantViolation,
          std::string(method_name(method)) + ": lower > upper");
  require(ci.lower <= estimate && (estimate <= ci.upper || ci.upper == kInfinity),
          ErrorCode::InvariantViolation,
          std::string(method_name(method)) + ": estimate " +
              std::to_string(estimate) + " outside CI");
  EffectResult r;
  r.method = method;
  r.scale = scale;
  r.estimate = estimate;
  r.ci = ci;
  r.weights = std::move(weights);
  r.gamma0 = gamma0;
  r.gamma1 = gamma1;
  r.corrections = std::move(corrections);
  return r;
}

ValidatedBundle validate_inputs(SummaryMatrix summaries, WeightSpec weights) {
  require(!summaries.empty(), ErrorCode::EmptyStrata, "no strata supplied");
  require(weights.resolved.size() == summaries.size(), ErrorCode::DimensionMismatch,
          "weights cover " + std::to_string(weights.resolved.size()) +
              " strata but summaries cover " + std::to_string(summaries.size()));
  if (weights.scheme == WeightScheme::Mr) {
    require(summaries.size() >= 2, ErrorCode::MrStrataCount,
            "MR weights need at least two strata");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < weights.resolved.size(); ++s) {
    require(weights.resolved[s] >= 0.0, ErrorCode::InvariantViolation,
            "weight for stratum " + std::to_string(s + 1) + " is negative");
    total += weights.resolved[s];
  }
  require(std::fabs(total - 1.0) < kWeightSumTol, ErrorCode::InvariantViolation,
          "weights sum to " + std::to_string(total) + ", expected 1");
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    validate_summary(summaries[s].g0, s, 0);
    validate_summary(summaries[s].g1, s, 1);
  }
  return ValidatedBundle{std::move(summaries), std::move(weights)};
}

}  // namespace moverci
