#pragma once

// Genealogical paths. A DiscretePath is a lattice step path w(u) =
// points[min(floor(u), m)]; a PolylinePath is a continuous path that is
// linear between breakpoints and constant after the last one.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/time.hpp"

namespace brwskel {

using LatticePoint = std::vector<std::int64_t>;
using RealPoint = std::vector<double>;

struct DiscretePath {
  std::vector<LatticePoint> points;  // points[0] is the origin

  std::int64_t steps() const { return static_cast<std::int64_t>(points.size()) - 1; }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

  /// Value at integer time k (constant after the last index).
  const LatticePoint& at(std::int64_t k) const {
    if (k < 0) throw OutOfRange("negative path time");
    return points[static_cast<std::size_t>(std::min<std::int64_t>(k, steps()))];
  }
  const LatticePoint& at(double u) const { return at(static_cast<std::int64_t>(std::floor(u))); }
};

/// First time after which the path is constant.
inline std::int64_t lifetime(const DiscretePath& w) {
  for (std::int64_t k = w.steps(); k >= 1; --k) {
    if (w.points[k] != w.points[k - 1]) return k;
  }
  return 0;
}

/// tau(w1,w2) = inf{t : w1(t) != w2(t)} ^ L(w1) ^ L(w2) for step paths.
inline std::int64_t branch_time(const DiscretePath& a, const DiscretePath& b) {
  const std::int64_t cap = std::min(lifetime(a), lifetime(b));
  const std::int64_t horizon = std::max(a.steps(), b.steps());
  for (std::int64_t k = 0; k <= std::min(horizon, cap); ++k) {
    if (a.at(k) != b.at(k)) return std::min(k, cap);
  }
  return cap;
}

template <class T>
struct PolylinePath {
  std::vector<T> times;            // strictly increasing, times[0] = 0
  std::vector<RealPoint> points;   // same length as times

  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

  /// Index k with times[k] <= t < times[k+1], or the last index.
  std::size_t segment(const T& t, double tol = kTimeTolerance) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin() - 1);
    if constexpr (is_inexact_time_v<T>) {
      if (k + 1 < times.size() && time_eq(times[k + 1], t, tol)) ++k;
    }
    return k;
  }

  RealPoint operator()(const T& t, double tol = kTimeTolerance) const {
    const std::size_t k = segment(t, tol);
    if (k + 1 >= times.size() || time_eq(times[k], t, tol)) return points[k];
    const double frac = to_double(T((t - times[k]) / (times[k + 1] - times[k])));
    RealPoint out(points[k].size());
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c] = points[k][c] + (points[k + 1][c] - points[k][c]) * frac;
    }
    return out;
  }
};

template <class T>
T lifetime(const PolylinePath<T>& w) {
  for (std::size_t k = w.points.size(); k-- > 1;) {
    if (w.points[k] != w.points[k - 1]) return w.times[k];
  }
  return T(0);
}

/// Continuous-path branch time. Both paths are linear between merged
/// breakpoints, so agreement at two consecutive merged breakpoints means
/// agreement on the whole segment between them.
template <class T>
T branch_time(const PolylinePath<T>& a, const PolylinePath<T>& b, double tol = kTimeTolerance) {
  const T cap = std::min(lifetime(a), lifetime(b));
  std::vector<T> merged;
  merged.reserve(a.times.size() + b.times.size());
  std::merge(a.times.begin(), a.times.end(), b.times.begin(), b.times.end(), std::back_inserter(merged));
  merged.erase(std::unique(merged.begin(), merged.end(), [&](const T& x, const T& y) { return time_eq(x, y, tol); }),
               merged.end());
  for (std::size_t k = 0; k < merged.size(); ++k) {
    if (a(merged[k], tol) != b(merged[k], tol)) {
      const T first_split = k == 0 ? T(0) : merged[k - 1];
      return std::min(first_split, cap);
    }
  }
  return cap;
}

/// kappa_n applied to the diffusively rescaled step path rho_n(w): value
/// w(k)/sqrt(n) at time k/n, linear in between.
inline PolylinePath<Rational> interpolate_kappa(const DiscretePath& w, std::int64_t n) {
  if (n < 1) throw OutOfRange("interpolation scale must be >= 1");
  PolylinePath<Rational> out;
  const double root_n = std::sqrt(static_cast<double>(n));
  out.times.reserve(w.points.size());
  out.points.reserve(w.points.size());
  for (std::int64_t k = 0; k <= w.steps(); ++k) {
    out.times.emplace_back(k, n);
    RealPoint p(w.dim());
    for (std::size_t c = 0; c < p.size(); ++c) p[c] = static_cast<double>(w.points[k][c]) / root_n;
    out.points.push_back(std::move(p));
  }
  return out;
}

/// rho_n: time divided by n, space divided by sqrt(n).
template <class T>
PolylinePath<T> rescale_path(const PolylinePath<T>& w, std::int64_t n) {
  if (n < 1) throw OutOfRange("rescaling factor must be >= 1");
  PolylinePath<T> out = w;
  const double root_n = std::sqrt(static_cast<double>(n));
  for (auto& t : out.times) t = t / T(n);
  for (auto& p : out.points) {
    for (auto& x : p) x /= root_n;
  }
  return out;
}

}  // namespace brwskel
