#pragma once

#include <boost/math/distributions/normal.hpp>

#include "moverci/errors.hpp"

namespace moverci {

inline double normal_cdf(double x) {
  static const boost::math::normal_distribution<double> std_normal;
  return boost::math::cdf(std_normal, x);
}

inline double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> std_normal;
  require(p > 0.0 && p < 1.0, ErrorCode::InvalidArgument,
          "normal quantile requires p in (0,1), got p=" + std::to_string(p));
  return boost::math::quantile(std_normal, p);
}

/// z_{alpha/2} for a two-sided interval at confidence `level` = 1 - alpha.
inline double z_for_level(double level) {
  require(level > 0.0 && level < 1.0, ErrorCode::InvalidArgument,
          "confidence level must lie in (0,1), got " + std::to_string(level));
  return normal_quantile(1.0 - (1.0 - level) / 2.0);
}

}  // namespace moverci
