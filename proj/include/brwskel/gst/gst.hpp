#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/paths.hpp"
#include "brwskel/core/time.hpp"
#include "brwskel/skeleton/branch_matrix.hpp"
#include "brwskel/skeleton/shape.hpp"

namespace brwskel::gst {

using skeleton::MetricShape;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Graph spatial tree: a metric shape plus, for each non-root vertex v, the
/// embedding of the edge above v as a polyline in the arc-length offset
/// (times run from 0 at the upper end to length[v] at v). A missing tree is
/// the sentinel for degenerate input.
template <class T>
struct Gst {
  int k = 0;
  std::optional<MetricShape<T>> tree;
  std::vector<PolylinePath<T>> edge;  // indexed by vertex label; edge[0] unused

  bool is_sentinel() const { return !tree.has_value(); }

  static Gst sentinel(int k) { return Gst{k, std::nullopt, {}}; }
};

/// A point of a gst: offset along the edge above vertex v.
template <class T>
struct EdgePoint {
  int vertex = 0;
  T offset{};
};

/// sup_e |l(e) - l'(e)| over canonical edges, infinite when shapes differ
/// or either side is the sentinel.
template <class T>
double d1(const Gst<T>& g, const Gst<T>& h) {
  if (g.is_sentinel() || h.is_sentinel()) return kInf;
  if (!(g.tree->shape == h.tree->shape)) return kInf;
  double out = 0.0;
  for (int v = 1; v < g.tree->shape.num_vertices(); ++v) {
    const T diff = g.tree->length[v] - h.tree->length[v];
    out = std::max(out, std::abs(to_double(diff)));
  }
  return out;
}

/// Upsilon: offset a on edge e of g goes to a * l'(e) / l(e) on e of h.
template <class T>
EdgePoint<T> upsilon(const Gst<T>& g, const Gst<T>& h, const EdgePoint<T>& x) {
  if (g.is_sentinel() || h.is_sentinel() || !(g.tree->shape == h.tree->shape)) throw ShapeMismatch();
  const int v = x.vertex;
  if (v < 1 || v >= g.tree->shape.num_vertices()) throw OutOfRange("no edge above vertex " + std::to_string(v));
  return {v, T(x.offset * h.tree->length[v] / g.tree->length[v])};
}

namespace detail {
inline double distance(const RealPoint& a, const RealPoint& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}
}  // namespace detail

/// sup_x |phi(x) - phi'(Upsilon x)|. Both sides are piecewise linear in the
/// normalized position offset/length, so the sup is attained on the merged
/// set of normalized breakpoints.
template <class T>
double d2(const Gst<T>& g, const Gst<T>& h, double tol = kTimeTolerance) {
  if (g.is_sentinel() || h.is_sentinel()) return kInf;
  if (!(g.tree->shape == h.tree->shape)) return kInf;
  double out = 0.0;
  for (int v = 1; v < g.tree->shape.num_vertices(); ++v) {
    const T lg = g.tree->length[v];
    const T lh = h.tree->length[v];
    std::vector<T> s;
    for (const T& t : g.edge[v].times) s.push_back(T(t / lg));
    for (const T& t : h.edge[v].times) s.push_back(T(t / lh));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end(), [&](const T& a, const T& b) { return time_eq(a, b, tol); }), s.end());
    for (const T& f : s) {
      out = std::max(out, detail::distance(g.edge[v](T(f * lg), tol), h.edge[v](T(f * lh), tol)));
    }
  }
  return out;
}

/// D = (d1 + d2) ^ 1; D(g, empty) = 1 and D(empty, empty) = 0.
template <class T>
double big_D(const Gst<T>& g, const Gst<T>& h, double tol = kTimeTolerance) {
  if (g.is_sentinel() && h.is_sentinel()) return 0.0;
  if (g.is_sentinel() || h.is_sentinel()) return 1.0;
  const double a = d1(g, h);
  if (a == kInf) return 1.0;
  return std::min(a + d2(g, h, tol), 1.0);
}

/// B_K(w): shape and lengths from T(tau(w)); the edge above v is embedded
/// through the path of the smallest leaf below v, sampled at that path's own
/// breakpoints plus the two edge ends.
template <class T>
Gst<T> gst_of_paths(const std::vector<PolylinePath<T>>& paths, double tol = kTimeTolerance) {
  const int k = static_cast<int>(paths.size());
  const auto tau = skeleton::branch_matrix(paths, tol);
  auto ms = skeleton::build_shape(tau, tol);
  if (!ms) return Gst<T>::sentinel(k);

  Gst<T> g{k, std::move(ms), {}};
  const auto& shape = g.tree->shape;
  std::vector<int> min_leaf(shape.parent.size(), k + 1);
  for (int leaf = 1; leaf <= k; ++leaf)
    for (int v = leaf; v >= 0; v = shape.parent[v]) min_leaf[v] = std::min(min_leaf[v], leaf);

  g.edge.resize(shape.parent.size());
  for (int v = 1; v < shape.num_vertices(); ++v) {
    const auto& w = paths[min_leaf[v] - 1];
    const T top = g.tree->height[shape.parent[v]];
    const T bottom = g.tree->height[v];
    auto& e = g.edge[v];
    e.times.push_back(T(0));
    e.points.push_back(w(top, tol));
    for (const T& t : w.times) {
      if (time_lt(top, t, tol) && time_lt(t, bottom, tol)) {
        e.times.push_back(T(t - top));
        e.points.push_back(w(t, tol));
      }
    }
    e.times.push_back(T(bottom - top));
    e.points.push_back(w(bottom, tol));
  }
  return g;
}

/// B_{n,K}: lengths and offsets divided by n, points by sqrt(n).
template <class T>
Gst<T> rescale(const Gst<T>& g, std::int64_t n) {
  if (n < 1) throw OutOfRange("rescaling factor must be >= 1");
  if (g.is_sentinel()) return g;
  Gst<T> out = g;
  for (auto& h : out.tree->height) h = h / T(n);
  for (auto& l : out.tree->length) l = l / T(n);
  for (std::size_t v = 1; v < out.edge.size(); ++v) out.edge[v] = rescale_path(out.edge[v], n);
  return out;
}

/// Shape text form followed by one breakpoint list per edge:
///   <shape>  e<v>=[offset@x1,x2,...;offset@...]
template <class T>
std::string serialize(const Gst<T>& g) {
  if (g.is_sentinel()) return skeleton::serialize_sentinel(g.k);
  std::string out = skeleton::serialize(*g.tree);
  for (int v = 1; v < g.tree->shape.num_vertices(); ++v) {
    out += " e" + std::to_string(v) + "=[";
    const auto& e = g.edge[v];
    for (std::size_t a = 0; a < e.times.size(); ++a) {
      if (a) out += ';';
      out += time_to_string(e.times[a]) + '@';
      for (std::size_t c = 0; c < e.points[a].size(); ++c) {
        if (c) out += ',';
        out += time_to_string(e.points[a][c]);
      }
    }
    out += ']';
  }
  return out;
}

}  // namespace brwskel::gst
