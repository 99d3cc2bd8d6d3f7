#pragma once

#include <cmath>
#include <limits>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "svo/common.hpp"

namespace svo::eval {

struct PairedTest {
  double mean_difference = 0.0;
  double t = 0.0;
  double p_value = 1.0;  ///< one-sided, H1: mean(treatment - control) > 0
  int n = 0;
};

/// One-sided paired t-test of treatment against control on matched samples.
inline PairedTest paired_t_test(std::span<const double> treatment, std::span<const double> control) {
  if (treatment.size() != control.size()) throw Error("paired_t_test: sample sizes differ");
  if (treatment.size() < 2) throw Error("paired_t_test: need at least two pairs");
  PairedTest out;
  out.n = static_cast<int>(treatment.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < treatment.size(); ++i) sum += treatment[i] - control[i];
  out.mean_difference = sum / out.n;
  double ss = 0.0;
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    const double e = treatment[i] - control[i] - out.mean_difference;
    ss += e * e;
  }
  const double se = std::sqrt(ss / (out.n - 1) / out.n);
  if (se == 0.0) {
    // Identical differences: the sign alone decides.
    out.t = out.mean_difference > 0.0 ? std::numeric_limits<double>::infinity()
                                       : (out.mean_difference < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
    out.p_value = out.mean_difference > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.t = out.mean_difference / se;
  const boost::math::students_t dist(out.n - 1);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

}  // namespace svo::eval
