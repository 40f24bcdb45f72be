#pragma once

// Time scalars. Lattice-derived times are exact rationals (or integers);
// times coming from real-valued objects are binary64 and compared with an
// absolute tolerance.

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <type_traits>

namespace brwskel {

using Rational = boost::rational<std::int64_t>;

/// Default absolute tolerance for comparing binary64 times.
inline constexpr double kTimeTolerance = 1e-12;

template <class T>
inline constexpr bool is_inexact_time_v = std::is_floating_point_v<T>;

template <class T>
bool time_eq(const T& a, const T& b, double tol = kTimeTolerance) {
  if constexpr (is_inexact_time_v<T>) {
    return std::abs(a - b) <= tol;
  } else {
    (void)tol;
    return a == b;
  }
}

template <class T>
bool time_lt(const T& a, const T& b, double tol = kTimeTolerance) {
  if constexpr (is_inexact_time_v<T>) {
    return a < b - tol;
  } else {
    (void)tol;
    return a < b;
  }
}

template <class T>
bool time_le(const T& a, const T& b, double tol = kTimeTolerance) {
  return !time_lt(b, a, tol);
}

template <class T>
double to_double(const T& x) {
  if constexpr (std::is_same_v<T, Rational>) {
    return boost::rational_cast<double>(x);
  } else {
    return static_cast<double>(x);
  }
}

template <class T>
T time_from_int(std::int64_t k) {
  return T(k);
}

/// Text form used by the shape/gst serializers: integers as-is, rationals as
/// "p/q" (or "p" when q=1), doubles with round-trip precision.
template <class T>
std::string time_to_string(const T& x) {
  std::ostringstream os;
  if constexpr (std::is_same_v<T, Rational>) {
    os << x.numerator();
    if (x.denominator() != 1) os << '/' << x.denominator();
  } else if constexpr (std::is_floating_point_v<T>) {
    os.precision(17);
    os << x;
  } else {
    os << x;
  }
  return os.str();
}

}  // namespace brwskel
