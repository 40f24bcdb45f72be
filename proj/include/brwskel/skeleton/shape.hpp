#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/time.hpp"
#include "brwskel/skeleton/branch_matrix.hpp"

namespace brwskel::skeleton {

/// Rooted tree with root 0, leaves 1..K and branch vertices K+1..2K-1.
/// parent[0] = -1. Labels are canonical when branch vertices are numbered in
/// the order first met on the walks root->1, root->2, ..., root->K.
struct Shape {
  int k = 0;
  std::vector<int> parent;

  int num_vertices() const { return static_cast<int>(parent.size()); }

  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> c(parent.size());
    for (int v = 1; v < num_vertices(); ++v) c[parent[v]].push_back(v);
    return c;
  }

  /// Vertices from the root down to v, inclusive.
  std::vector<int> root_path(int v) const {
    std::vector<int> p;
    for (; v >= 0; v = parent[v]) p.push_back(v);
    std::reverse(p.begin(), p.end());
    return p;
  }

  friend bool operator==(const Shape&, const Shape&) = default;
  friend auto operator<=>(const Shape&, const Shape&) = default;
};

/// Relabels branch vertices into canonical order. Leaves and root keep their labels.
inline Shape canonicalize(const Shape& s) {
  std::vector<int> relabel(s.parent.size(), -1);
  for (int v = 0; v <= s.k; ++v) relabel[v] = v;
  int next = s.k + 1;
  for (int leaf = 1; leaf <= s.k; ++leaf) {
    for (int v : s.root_path(leaf)) {
      if (relabel[v] < 0) relabel[v] = next++;
    }
  }
  if (next != s.num_vertices()) throw InvalidMatrix("shape has vertices off every leaf path");
  Shape out{s.k, std::vector<int>(s.parent.size(), -1)};
  for (int v = 1; v < s.num_vertices(); ++v) out.parent[relabel[v]] = relabel[s.parent[v]];
  return out;
}

/// Shape with edge lengths. height[v] is the distance from the root, and
/// length[v] = height[v] - height[parent[v]] is the length of the edge above v.
template <class T>
struct MetricShape {
  Shape shape;
  std::vector<T> height;
  std::vector<T> length;
  /// Lexicographically least zero-based pair (i,j) in each vertex's class
  /// <i,j>; (i,i) for leaf i+1, (-1,-1) for the root.
  std::vector<std::pair<int, int>> representative;

  int k() const { return shape.k; }

  friend bool operator==(const MetricShape& a, const MetricShape& b) {
    return a.shape == b.shape && a.length == b.length;
  }
};

/// T(tau): returns nullopt for degenerate input. Vertex <i,j> is the point at
/// height tau_ij on the path to leaf i; two such points coincide when they sit
/// at the same height and that height is at most tau_ik. The parent of <i,j>
/// is the next lower class on the same path (or the root).
template <class T>
std::optional<MetricShape<T>> build_shape(const BranchMatrix<T>& tau, double tol = kTimeTolerance) {
  validate(tau, tol);
  const int k = static_cast<int>(tau.size());
  if (k == 0) throw InvalidMatrix("empty matrix");
  if (!check_nondegenerate(tau, tol)) return std::nullopt;

  MetricShape<T> out;
  out.shape.k = k;
  out.shape.parent.assign(2 * k, -1);
  out.height.assign(2 * k, T(0));
  out.length.assign(2 * k, T(0));
  out.representative.assign(2 * k, {-1, -1});

  // Branch classes keyed by (smallest leaf index on whose path they lie, height);
  // the representative height is tau at that leaf, so exact types stay exact.
  std::vector<std::pair<int, T>> classes;
  auto class_of = [&](int i, const T& h) -> int {
    int lead = i;
    for (int l = 0; l < i; ++l) {
      if (time_le(h, tau(i, l), tol)) {
        lead = l;
        break;
      }
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (classes[c].first == lead && time_eq(classes[c].second, h, tol)) return static_cast<int>(c);
    }
    classes.emplace_back(lead, h);
    return static_cast<int>(classes.size() - 1);
  };

  std::vector<int> label;  // class id -> canonical vertex label
  int next = k + 1;
  for (int i = 0; i < k; ++i) {
    std::vector<T> heights;
    for (int j = 0; j < k; ++j) {
      if (j != i) heights.push_back(tau(i, j));
    }
    std::sort(heights.begin(), heights.end());
    heights.erase(std::unique(heights.begin(), heights.end(), [&](const T& a, const T& b) { return time_eq(a, b, tol); }),
                  heights.end());
    int prev = 0;
    for (const T& h : heights) {
      const int c = class_of(i, h);
      if (c >= static_cast<int>(label.size())) {
        label.push_back(next++);
        const int v = label[c];
        out.shape.parent[v] = prev;
        out.height[v] = h;
        out.length[v] = h - out.height[prev];
      }
      prev = label[c];
    }
    const int leaf = i + 1;
    out.shape.parent[leaf] = prev;
    out.height[leaf] = tau(i, i);
    out.length[leaf] = tau(i, i) - out.height[prev];
    out.representative[leaf] = {i, i};
  }
  if (next != 2 * k) throw InvalidMatrix("matrix does not describe a binary tree");

  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const int v = label[class_of(i, tau(i, j))];
      if (out.representative[v].first < 0) out.representative[v] = {i, j};
    }
  return out;
}

namespace detail {
template <class T>
void write_subtree(const Shape& s, const std::vector<std::vector<int>>& ch, const std::vector<T>* len, int v,
                   std::string& out) {
  if (!ch[v].empty()) {
    out += '(';
    for (std::size_t c = 0; c < ch[v].size(); ++c) {
      if (c) out += ',';
      write_subtree(s, ch, len, ch[v][c], out);
    }
    out += ')';
  }
  out += std::to_string(v);
  if (len && v != 0) out += ':' + time_to_string((*len)[v]);
}

/// Children ordered by the smallest leaf label below them.
inline std::vector<std::vector<int>> ordered_children(const Shape& s) {
  auto ch = s.children();
  std::vector<int> min_leaf(s.parent.size(), s.k + 1);
  for (int leaf = 1; leaf <= s.k; ++leaf) {
    for (int v = leaf; v >= 0; v = s.parent[v]) min_leaf[v] = std::min(min_leaf[v], leaf);
  }
  for (auto& c : ch) {
    std::sort(c.begin(), c.end(), [&](int a, int b) { return min_leaf[a] < min_leaf[b]; });
  }
  return ch;
}
}  // namespace detail

/// Grammar: tree := node ';' ; node := [ '(' node (',' node)* ')' ] label [':' length].
/// The root is labelled 0 and carries no length; siblings appear in order of
/// the smallest leaf label below them. Example: ((1:1,(2:2,3:3)5:3)4:2)0;
inline std::string serialize(const Shape& s) {
  std::string out;
  detail::write_subtree<int>(s, detail::ordered_children(s), nullptr, 0, out);
  return out + ';';
}

template <class T>
std::string serialize(const MetricShape<T>& m) {
  std::string out;
  detail::write_subtree<T>(m.shape, detail::ordered_children(m.shape), &m.length, 0, out);
  return out + ';';
}

/// Distance between [i,u] and [j,v] (zero-based leaves) summed along tree
/// edges: u + v - 2 * (height where the two root paths part).
template <class T>
T path_length_distance(const MetricShape<T>& m, int i, const T& u, int j, const T& v) {
  if (i < 0 || j < 0 || i >= m.k() || j >= m.k()) throw OutOfRange("leaf index out of range");
  if (u < T(0) || v < T(0) || u > m.height[i + 1] || v > m.height[j + 1]) throw OutOfRange("height out of range");
  // lowest vertex on the root path of `leaf` whose height is >= h
  auto bottom = [&](int leaf, const T& h) {
    int x = leaf;
    while (m.shape.parent[x] > 0 && m.height[m.shape.parent[x]] >= h) x = m.shape.parent[x];
    return x;
  };
  const auto pa = m.shape.root_path(bottom(i + 1, u));
  const auto pb = m.shape.root_path(bottom(j + 1, v));
  std::size_t c = 0;
  while (c + 1 < pa.size() && c + 1 < pb.size() && pa[c + 1] == pb[c + 1]) ++c;
  const T meet = std::min({u, v, m.height[pa[c]]});
  return u + v - meet - meet;
}

inline std::string serialize_sentinel(int k) { return "empty_" + std::to_string(k) + ";"; }

/// prod_{j=2}^K (2j-3).
inline std::uint64_t count_shapes(int k) {
  if (k < 1) throw OutOfRange("K must be >= 1");
  std::uint64_t n = 1;
  for (int j = 2; j <= k; ++j) n *= static_cast<std::uint64_t>(2 * j - 3);
  return n;
}

inline constexpr int kMaxEnumerationK = 8;

/// All shapes with K labelled leaves, canonically labelled and sorted.
/// Built by inserting leaf j on each of the 2j-3 edges of every shape with
/// j-1 leaves.
inline std::vector<Shape> enumerate_shapes(int k) {
  if (k < 1) throw OutOfRange("K must be >= 1");
  if (k > kMaxEnumerationK) throw KTooLarge(k);
  // Working form: vertex 0 root, leaves 1..j, branch vertices j+1..2j-1
  // with arbitrary order among branch labels.
  std::vector<Shape> cur{Shape{1, {-1, 0}}};
  for (int j = 2; j <= k; ++j) {
    std::vector<Shape> next;
    next.reserve(cur.size() * (2 * j - 3));
    for (const Shape& s : cur) {
      // Shift branch labels up by one to make room for leaf j.
      auto shift = [&](int v) { return v > j - 1 ? v + 1 : v; };
      const int n_old = s.num_vertices();
      for (int edge_child = 1; edge_child < n_old; ++edge_child) {
        Shape t{j, std::vector<int>(2 * j, -1)};
        for (int v = 1; v < n_old; ++v) t.parent[shift(v)] = shift(s.parent[v]);
        const int b = 2 * j - 1;  // new branch vertex
        const int c = shift(edge_child);
        t.parent[b] = t.parent[c];
        t.parent[c] = b;
        t.parent[j] = b;
        next.push_back(canonicalize(t));
      }
    }
    cur = std::move(next);
  }
  std::sort(cur.begin(), cur.end());
  cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
  return cur;
}

}  // namespace brwskel::skeleton
