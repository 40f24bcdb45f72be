#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/paths.hpp"
#include "brwskel/core/time.hpp"
#include "brwskel/treegen/gen_tree.hpp"
#include "brwskel/treegen/spatial_tree.hpp"

namespace brwskel::skeleton {

/// K x K matrix of branch times, lifetimes on the diagonal. Indices are
/// zero-based; matrix index i corresponds to leaf label i+1.
template <class T>
class BranchMatrix {
 public:
  BranchMatrix() = default;
  explicit BranchMatrix(std::size_t k) : k_(k), tau_(k * k, T(0)) {}
  BranchMatrix(std::initializer_list<std::initializer_list<T>> rows) : k_(rows.size()) {
    tau_.reserve(k_ * k_);
    for (const auto& r : rows) {
      if (r.size() != k_) throw InvalidMatrix("matrix is not square");
      tau_.insert(tau_.end(), r.begin(), r.end());
    }
  }

  std::size_t size() const { return k_; }
  T& operator()(std::size_t i, std::size_t j) { return tau_[i * k_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return tau_[i * k_ + j]; }

  friend bool operator==(const BranchMatrix&, const BranchMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<T> tau_;
};

template <class T>
BranchMatrix<T> branch_matrix_of(const std::vector<T>& flat, std::size_t k) {
  BranchMatrix<T> m(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m(i, j) = flat[i * k + j];
  return m;
}

inline BranchMatrix<std::int64_t> branch_matrix(const std::vector<DiscretePath>& paths) {
  BranchMatrix<std::int64_t> m(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    m(i, i) = lifetime(paths[i]);
    for (std::size_t j = i + 1; j < paths.size(); ++j) m(i, j) = m(j, i) = branch_time(paths[i], paths[j]);
  }
  return m;
}

template <class T>
BranchMatrix<T> branch_matrix(const std::vector<PolylinePath<T>>& paths, double tol = kTimeTolerance) {
  BranchMatrix<T> m(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    m(i, i) = lifetime(paths[i]);
    for (std::size_t j = i + 1; j < paths.size(); ++j) m(i, j) = m(j, i) = branch_time(paths[i], paths[j], tol);
  }
  return m;
}

/// tau-hat: MRCA generations off the diagonal, generations on it.
inline BranchMatrix<std::int64_t> genealogical_branch_matrix(const treegen::GenTree& tree,
                                                            const std::vector<treegen::VertexId>& vertices) {
  BranchMatrix<std::int64_t> m(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    m(i, i) = tree.generation(vertices[i]);
    for (std::size_t j = i + 1; j < vertices.size(); ++j) {
      m(i, j) = m(j, i) = treegen::mrca_generation(tree, vertices[i], vertices[j]);
    }
  }
  return m;
}

inline BranchMatrix<std::int64_t> genealogical_branch_matrix(const treegen::SpatialTree& tree,
                                                            const std::vector<treegen::VertexId>& vertices) {
  return genealogical_branch_matrix(tree.base(), vertices);
}

/// Throws InvalidMatrix unless tau is symmetric, non-negative, has
/// tau_ij <= tau_ii ^ tau_jj and tau_ij ^ tau_jk <= tau_ik.
template <class T>
void validate(const BranchMatrix<T>& tau, double tol = kTimeTolerance) {
  const std::size_t k = tau.size();
  auto where = [](std::size_t i, std::size_t j) {
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
  };
  for (std::size_t i = 0; i < k; ++i) {
    if (time_lt(tau(i, i), T(0), tol)) throw InvalidMatrix("negative lifetime at " + where(i, i));
    for (std::size_t j = 0; j < k; ++j) {
      if (!time_eq(tau(i, j), tau(j, i), tol)) throw InvalidMatrix("not symmetric at " + where(i, j));
      if (time_lt(tau(i, j), T(0), tol)) throw InvalidMatrix("negative entry at " + where(i, j));
      if (time_lt(std::min(tau(i, i), tau(j, j)), tau(i, j), tol)) {
        throw InvalidMatrix("entry " + where(i, j) + " exceeds a lifetime");
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l) {
        if (time_lt(tau(i, l), std::min(tau(i, j), tau(j, l)), tol)) {
          throw InvalidMatrix("ultrametric inequality fails for " + where(i, j) + "," + where(j, l));
        }
      }
}

struct Verdict {
  enum class Rule { None, PairBoundary, TripleTie, ZeroLifetime };
  Rule rule = Rule::None;
  std::size_t i = 0, j = 0, k = 0;  // zero-based indices of the offending entries

  bool nondegenerate() const { return rule == Rule::None; }
  explicit operator bool() const { return nondegenerate(); }

  std::string describe() const {
    std::ostringstream os;
    switch (rule) {
      case Rule::None:
        return "nondegenerate";
      case Rule::PairBoundary:
        os << "pair (" << i + 1 << "," << j + 1 << ") does not branch strictly inside both lifetimes";
        break;
      case Rule::TripleTie:
        os << "triple (" << i + 1 << "," << j + 1 << "," << k + 1 << ") branches at a single time";
        break;
      case Rule::ZeroLifetime:
        os << "lifetime of " << i + 1 << " is zero";
        break;
    }
    return os.str();
  }
};

/// Non-degeneracy: 0 < tau_ij < tau_ii ^ tau_jj for i != j, and no triple
/// with tau_ij = tau_ik = tau_jk. For K = 1 the single lifetime must be positive.
template <class T>
Verdict check_nondegenerate(const BranchMatrix<T>& tau, double tol = kTimeTolerance) {
  const std::size_t k = tau.size();
  Verdict v;
  if (k == 1 && time_le(tau(0, 0), T(0), tol)) {
    v.rule = Verdict::Rule::ZeroLifetime;
    return v;
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const T& x = tau(i, j);
      if (!time_lt(T(0), x, tol) || !time_lt(x, std::min(tau(i, i), tau(j, j)), tol)) {
        v.rule = Verdict::Rule::PairBoundary;
        v.i = i;
        v.j = j;
        return v;
      }
    }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      for (std::size_t l = j + 1; l < k; ++l) {
        if (time_eq(tau(i, j), tau(i, l), tol) && time_eq(tau(i, j), tau(j, l), tol)) {
          v.rule = Verdict::Rule::TripleTie;
          v.i = i;
          v.j = j;
          v.k = l;
          return v;
        }
      }
  return v;
}

/// d_tau([i,u],[j,v]) = u+v-2 tau_ij if u^v > tau_ij, |u-v| otherwise.
template <class T>
T tree_metric(const BranchMatrix<T>& tau, std::size_t i, const T& u, std::size_t j, const T& v) {
  if (i >= tau.size() || j >= tau.size()) throw OutOfRange("index outside matrix");
  if (u < T(0) || v < T(0) || tau(i, i) < u || tau(j, j) < v) throw OutOfRange("point beyond lifetime");
  const T& b = tau(i, j);
  if (std::min(u, v) > b) return u + v - b - b;
  return u < v ? v - u : u - v;
}

/// One third of the smallest positive gap between distinct entries
/// (diagonal included, and 0 counted as an entry).
template <class T>
T stability_radius(const BranchMatrix<T>& tau, double tol = kTimeTolerance) {
  std::vector<T> values{T(0)};
  for (std::size_t i = 0; i < tau.size(); ++i)
    for (std::size_t j = i; j < tau.size(); ++j) values.push_back(tau(i, j));
  std::sort(values.begin(), values.end());
  std::optional<T> gap;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (time_eq(values[a], values[a - 1], tol)) continue;
    const T g = values[a] - values[a - 1];
    if (!gap || g < *gap) gap = g;
  }
  if (!gap) return T(0);
  return *gap / T(3);
}

template <class T>
std::string to_string(const BranchMatrix<T>& tau) {
  std::string s = "[";
  for (std::size_t i = 0; i < tau.size(); ++i) {
    s += i ? ",[" : "[";
    for (std::size_t j = 0; j < tau.size(); ++j) {
      if (j) s += ',';
      s += time_to_string(tau(i, j));
    }
    s += ']';
  }
  return s + "]";
}

}  // namespace brwskel::skeleton
