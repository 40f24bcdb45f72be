#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace brwskel {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tree growth produced more vertices than the caller's budget allows.
/// The partially grown tree is discarded; the caller decides between a
/// redraw and a larger cap.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(std::size_t cap)
      : Error("vertex budget exceeded (cap=" + std::to_string(cap) + ")"), cap_(cap) {}
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

class UnknownVertex : public Error {
 public:
  explicit UnknownVertex(std::size_t v) : Error("unknown vertex id " + std::to_string(v)) {}
};

class IncompleteTree : public Error {
 public:
  IncompleteTree() : Error("tree was grown with a generation limit and has not died out") {}
};

class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class KTooLarge : public Error {
 public:
  explicit KTooLarge(int k) : Error("shape enumeration refused for K=" + std::to_string(k)) {}
};

class ShapeMismatch : public Error {
 public:
  ShapeMismatch() : Error("graph spatial trees have different shapes") {}
};

class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

class InadmissibleBond : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class InvalidShapeTimes : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  EmptySample() : Error("empty sample") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AcceptanceFloorBreached : public Error {
 public:
  using Error::Error;
};

}  // namespace brwskel
