#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "brwskel/core/error.hpp"
#include "brwskel/core/time.hpp"
#include "brwskel/treegen/offspring_law.hpp"

namespace brwskel::limitlaw {

/// Kolmogorov asymptotic P(T_m != empty) ~ 2/(gamma m).
inline double survival_tail_gw(std::int64_t m, double gamma) {
  if (m < 1) throw RangeError("survival tail needs m >= 1");
  return 2.0 / (gamma * static_cast<double>(m));
}

/// Exact P(T_m != empty) = 1/(m+1) for geometric-half offspring.
inline Rational exact_survival_geometric(std::int64_t m) {
  if (m < 0) throw RangeError("survival needs m >= 0");
  return Rational(1, m + 1);
}

/// Expected number of ordered pairs (a in T_k1, b in T_k2) whose most
/// recent common ancestor is in generation m: E|T_m| E[Y(Y-1)] = gamma.
inline double pair_mrca_expectation(const treegen::OffspringLaw& law, std::int64_t m, std::int64_t k1,
                                    std::int64_t k2) {
  if (m < 0 || m >= std::min(k1, k2)) throw RangeError("need 0 <= m < k1 ^ k2");
  return law.factorial_moment2();
}

/// Conditioned (s = 1) single-vertex lifetime tail, 1/(2t) for t > 1.
inline double lifetime_tail_limit(double t) {
  if (!(t > 1.0)) throw RangeError("lifetime tail oracle only covers t > 1");
  return 1.0 / (2.0 * t);
}

/// Lebesgue measure of [a,b] intersected with (0, t1 ^ t2): the pairwise
/// branch-time moment measure of the limit.
inline double branch_time_limit_measure(double t1, double t2, double a, double b) {
  if (a < 0.0 || b < a) throw RangeError("need 0 <= a <= b");
  const double hi = std::min({b, t1, t2});
  return std::max(0.0, hi - a);
}

}  // namespace brwskel::limitlaw
