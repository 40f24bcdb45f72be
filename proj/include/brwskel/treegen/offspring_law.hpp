#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "brwskel/core/error.hpp"

namespace brwskel::treegen {

/// Critical offspring laws with closed-form variance. Every law has mean 1.
///   geometric-half : P(Y=k) = 2^-(k+1), variance 2
///   poisson-one    : Poisson(1),        variance 1
///   binary-half    : Y in {0,2} w.p. 1/2, variance 1
class OffspringLaw {
 public:
  enum class Kind { GeometricHalf, PoissonOne, BinaryHalf };

  constexpr explicit OffspringLaw(Kind kind = Kind::GeometricHalf) : kind_(kind) {}

  constexpr Kind kind() const { return kind_; }

  constexpr double mean() const { return 1.0; }

  constexpr double gamma() const {
    switch (kind_) {
      case Kind::GeometricHalf:
        return 2.0;
      case Kind::PoissonOne:
      case Kind::BinaryHalf:
        return 1.0;
    }
    return 0.0;
  }

  /// E[Y(Y-1)], equal to gamma for mean-one laws.
  constexpr double factorial_moment2() const { return gamma(); }

  std::string name() const {
    switch (kind_) {
      case Kind::GeometricHalf:
        return "geometric-half";
      case Kind::PoissonOne:
        return "poisson-one";
      case Kind::BinaryHalf:
        return "binary-half";
    }
    return "?";
  }

  static OffspringLaw parse(std::string_view s) {
    if (s == "geometric-half") return OffspringLaw(Kind::GeometricHalf);
    if (s == "poisson-one") return OffspringLaw(Kind::PoissonOne);
    if (s == "binary-half") return OffspringLaw(Kind::BinaryHalf);
    throw ConfigError("unknown offspring law '" + std::string(s) + "'");
  }

  /// One offspring count.
  template <class URBG>
  std::uint32_t operator()(URBG& rng) const {
    switch (kind_) {
      case Kind::GeometricHalf:
        return std::geometric_distribution<std::uint32_t>(0.5)(rng);
      case Kind::PoissonOne:
        return std::poisson_distribution<std::uint32_t>(1.0)(rng);
      case Kind::BinaryHalf:
        return (rng() >> 63) ? 2u : 0u;
    }
    return 0;
  }

  /// Total offspring of `parents` independent individuals.
  template <class URBG>
  std::uint64_t sum_of(std::uint64_t parents, URBG& rng) const {
    if (parents == 0) return 0;
    switch (kind_) {
      case Kind::GeometricHalf:
        // failures before `parents` successes at p=1/2
        return std::negative_binomial_distribution<std::uint64_t>(parents, 0.5)(rng);
      case Kind::PoissonOne:
        return std::poisson_distribution<std::uint64_t>(static_cast<double>(parents))(rng);
      case Kind::BinaryHalf:
        return 2 * std::binomial_distribution<std::uint64_t>(parents, 0.5)(rng);
    }
    return 0;
  }

  friend constexpr bool operator==(OffspringLaw a, OffspringLaw b) { return a.kind_ == b.kind_; }

 private:
  Kind kind_;
};

inline constexpr OffspringLaw kGeometricHalf{OffspringLaw::Kind::GeometricHalf};
inline constexpr OffspringLaw kPoissonOne{OffspringLaw::Kind::PoissonOne};
inline constexpr OffspringLaw kBinaryHalf{OffspringLaw::Kind::BinaryHalf};

}  // namespace brwskel::treegen
