#pragma once

// Random instances for the exact-identity checks: shapes, heights and
// tree-like lattice path families.

#include <algorithm>
#include <random>
#include <vector>

#include "brwskel/core/paths.hpp"
#include "brwskel/core/time.hpp"
#include "brwskel/skeleton/branch_matrix.hpp"
#include "brwskel/skeleton/shape.hpp"

namespace brwskel::harness {

using skeleton::BranchMatrix;
using skeleton::Shape;

/// Uniform random shape by inserting leaf j on a uniform edge.
template <class URBG>
Shape random_shape(int k, URBG& rng) {
  Shape s{1, {-1, 0}};
  for (int j = 2; j <= k; ++j) {
    auto shift = [&](int v) { return v > j - 1 ? v + 1 : v; };
    Shape t{j, std::vector<int>(2 * j, -1)};
    for (int v = 1; v < s.num_vertices(); ++v) t.parent[shift(v)] = shift(s.parent[v]);
    const int c = shift(std::uniform_int_distribution<int>(1, s.num_vertices() - 1)(rng));
    const int b = 2 * j - 1;
    t.parent[b] = t.parent[c];
    t.parent[c] = b;
    t.parent[j] = b;
    s = skeleton::canonicalize(t);
  }
  return s;
}

inline int lca(const Shape& s, int a, int b) {
  auto pa = s.root_path(a);
  auto pb = s.root_path(b);
  int out = 0;
  for (std::size_t i = 0; i < std::min(pa.size(), pb.size()) && pa[i] == pb[i]; ++i) out = pa[i];
  return out;
}

/// Heights from random positive rational edge lengths.
template <class URBG>
std::vector<Rational> random_heights(const Shape& s, URBG& rng) {
  std::uniform_int_distribution<int> num(1, 40), den(1, 7);
  std::vector<Rational> h(s.parent.size(), Rational(0));
  for (int leaf = 1; leaf <= s.k; ++leaf) {
    auto p = s.root_path(leaf);
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (h[p[i]] == Rational(0)) h[p[i]] = h[p[i - 1]] + Rational(num(rng), den(rng));
    }
  }
  return h;
}

/// tau_ij = height of the meeting point of leaves i+1 and j+1.
template <class T>
BranchMatrix<T> matrix_from_heights(const Shape& s, const std::vector<T>& h) {
  BranchMatrix<T> tau(s.k);
  for (int i = 0; i < s.k; ++i)
    for (int j = 0; j < s.k; ++j) tau(i, j) = h[i == j ? i + 1 : lca(s, i + 1, j + 1)];
  return tau;
}

/// K lattice step paths in d=1 with tree-like sharing: path i copies a
/// prefix of an earlier path and continues with random non-zero steps.
template <class URBG>
std::vector<DiscretePath> random_path_family(int k, URBG& rng, int max_len = 24, int L = 2) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> step(1, 2 * L);
  auto draw_step = [&] {
    int s = step(rng) - L - 1;
    return s >= 0 ? s + 1 : s;
  };
  std::vector<DiscretePath> out;
  for (int i = 0; i < k; ++i) {
    DiscretePath w;
    if (i == 0) {
      w.points.push_back({0});
    } else {
      const auto& src = out[std::uniform_int_distribution<int>(0, i - 1)(rng)];
      const int cut = std::uniform_int_distribution<int>(0, static_cast<int>(src.steps()))(rng);
      w.points.assign(src.points.begin(), src.points.begin() + cut + 1);
    }
    const int extra = len(rng);
    for (int e = 0; e < extra; ++e) w.points.push_back({w.points.back()[0] + draw_step()});
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace brwskel::harness
