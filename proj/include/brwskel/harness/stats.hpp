#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "brwskel/core/error.hpp"

namespace brwskel::harness {

/// Running sums for mean and standard error. Merging is exact given a fixed
/// merge order, which the block runner guarantees.
struct Moments {
  std::uint64_t count = 0;
  long double sum = 0;
  long double sumsq = 0;

  void add(double x) {
    ++count;
    sum += x;
    sumsq += static_cast<long double>(x) * x;
  }
  void merge(const Moments& o) {
    count += o.count;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return count ? static_cast<double>(sum / count) : NAN; }
  double variance() const {
    if (count < 2) return NAN;
    const long double m = sum / count;
    return static_cast<double>(std::max<long double>(0, (sumsq - count * m * m) / (count - 1)));
  }
  double se() const { return count ? std::sqrt(variance() / static_cast<double>(count)) : NAN; }
};

/// Standard error of a binomial proportion.
inline double proportion_se(double p, std::uint64_t n) { return n ? std::sqrt(p * (1 - p) / n) : NAN; }

/// Sorted sample with ECDF, quantiles and KS distance.
class EmpiricalSummary {
 public:
  explicit EmpiricalSummary(std::vector<double> values) : v_(std::move(values)) {
    std::sort(v_.begin(), v_.end());
  }

  std::size_t size() const { return v_.size(); }
  const std::vector<double>& sorted() const { return v_; }

  /// Fraction of the sample <= x (right-continuous).
  double ecdf(double x) const {
    require();
    return static_cast<double>(std::upper_bound(v_.begin(), v_.end(), x) - v_.begin()) / v_.size();
  }

  /// Type-7 quantile: linear interpolation between order statistics at
  /// position (N-1)p.
  double quantile(double p) const {
    require();
    if (p <= 0) return v_.front();
    if (p >= 1) return v_.back();
    const double h = (v_.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v_.size() - 1);
    return v_[lo] + (h - lo) * (v_[hi] - v_[lo]);
  }

  /// Standard error of the p-quantile: half the spread of the quantiles at
  /// p +- sqrt(p(1-p)/N), the normal approximation to the binomial count
  /// below the quantile.
  double quantile_se(double p) const {
    require();
    const double s = std::sqrt(p * (1 - p) / static_cast<double>(v_.size()));
    return (quantile(std::min(1.0, p + s)) - quantile(std::max(0.0, p - s))) / 2.0;
  }

  /// sup_x |F_N(x) - F(x)|, checked on both sides of every jump.
  double ks_distance(const std::function<double(double)>& cdf) const {
    require();
    double d = 0.0;
    const double n = static_cast<double>(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (i + 1 < v_.size() && v_[i + 1] == v_[i]) continue;
      const double f = cdf(v_[i]);
      const double below = static_cast<double>(std::lower_bound(v_.begin(), v_.end(), v_[i]) - v_.begin()) / n;
      const double above = static_cast<double>(i + 1) / n;
      d = std::max(d, std::abs(above - f));
      // left limit of the reference at the jump
      const double fl = cdf(std::nextafter(v_[i], -INFINITY));
      d = std::max(d, std::abs(fl - below));
    }
    return d;
  }

 private:
  void require() const {
    if (v_.empty()) throw EmptySample();
  }
  std::vector<double> v_;
};

/// Asymptotic 1% critical value of the KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sided sign test of H1 "first tends to be smaller". Ties are dropped.
inline TestResult sign_test_less(const std::vector<double>& first, const std::vector<double>& second) {
  std::uint64_t less = 0, greater = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] < second[i]) ++less;
    if (first[i] > second[i]) ++greater;
  }
  const std::uint64_t n = less + greater;
  if (n == 0) return {0.0, 1.0};
  boost::math::binomial_distribution<double> b(static_cast<double>(n), 0.5);
  // P(X >= less)
  const double p = less == 0 ? 1.0 : boost::math::cdf(boost::math::complement(b, static_cast<double>(less - 1)));
  return {static_cast<double>(less), p};
}

/// One-sided Welch z-test of H1 "mean a > mean b".
inline TestResult welch_greater(const Moments& a, const Moments& b) {
  const double se = std::sqrt(a.variance() / a.count + b.variance() / b.count);
  const double z = (a.mean() - b.mean()) / se;
  if (!std::isfinite(z)) return {z, a.mean() > b.mean() ? 0.0 : 1.0};
  boost::math::normal_distribution<double> nd;
  return {z, boost::math::cdf(boost::math::complement(nd, z))};
}

/// One-sided two-proportion z-test of H1 "p_a > p_b".
inline TestResult proportion_greater(std::uint64_t hits_a, std::uint64_t n_a, std::uint64_t hits_b, std::uint64_t n_b) {
  const double pa = static_cast<double>(hits_a) / n_a, pb = static_cast<double>(hits_b) / n_b;
  const double pool = static_cast<double>(hits_a + hits_b) / (n_a + n_b);
  const double se = std::sqrt(pool * (1 - pool) * (1.0 / n_a + 1.0 / n_b));
  const double z = se > 0 ? (pa - pb) / se : 0.0;
  boost::math::normal_distribution<double> nd;
  return {z, boost::math::cdf(boost::math::complement(nd, z))};
}

/// Pearson goodness of fit against the given cell probabilities.
inline TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs) {
  double total = 0.0;
  for (double o : observed) total += o;
  double x2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    x2 += (observed[i] - e) * (observed[i] - e) / e;
  }
  if (observed.size() < 2) return {0.0, 1.0};
  boost::math::chi_squared_distribution<double> chi(static_cast<double>(observed.size() - 1));
  return {x2, boost::math::cdf(boost::math::complement(chi, x2))};
}

/// Pearson test of homogeneity for two count vectors over the same cells.
inline TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0, nb = 0;
  for (double x : a) na += x;
  for (double x : b) nb += x;
  double x2 = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = a[i] + b[i];
    if (col == 0) continue;
    ++cells;
    const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    x2 += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  if (cells < 2) return {0.0, 1.0};
  boost::math::chi_squared_distribution<double> chi(cells - 1);
  return {x2, boost::math::cdf(boost::math::complement(chi, x2))};
}

}  // namespace brwskel::harness
