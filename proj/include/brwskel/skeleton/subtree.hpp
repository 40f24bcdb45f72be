#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/skeleton/shape.hpp"
#include "brwskel/treegen/spatial_tree.hpp"

namespace brwskel::skeleton {

using treegen::VertexId;

/// T^V (union of root paths to the sampled vertices) and its reduction T_V
/// after erasing degree-2 vertices.
struct SkeletonSubtree {
  std::vector<VertexId> sampled;        // V_1..V_K
  std::vector<VertexId> vertices;       // T^V, ascending (so parents first)
  std::vector<VertexId> kept;           // vertices of T_V, ascending
  std::vector<VertexId> kept_parent;    // parent in T_V, kNoParent for the root
  std::vector<std::int64_t> kept_length;  // graph length of the edge above

  std::size_t edge_count() const { return vertices.empty() ? 0 : vertices.size() - 1; }

  std::int64_t reduced_length_sum() const {
    std::int64_t s = 0;
    for (auto l : kept_length) s += l;
    return s;
  }
};

namespace detail {
inline std::vector<VertexId> root_path_union(const treegen::GenTree& tree, const std::vector<VertexId>& sampled) {
  std::vector<char> mark(tree.size(), 0);
  for (VertexId v : sampled) {
    if (!tree.contains(v)) throw UnknownVertex(v);
    for (VertexId x = v; x != treegen::kNoParent && !mark[x]; x = tree.parent(x)) mark[x] = 1;
  }
  std::vector<VertexId> out;
  for (VertexId v = 0; v < tree.size(); ++v)
    if (mark[v]) out.push_back(v);
  return out;
}
}  // namespace detail

/// Builds T^V and erases its degree-2 vertices (one parent, one child, not
/// sampled, not the root) in the order given by `order_rng`, or by
/// ascending id when it is null.
template <class URBG = std::mt19937_64>
SkeletonSubtree minimal_subtree(const treegen::GenTree& tree, const std::vector<VertexId>& sampled,
                                URBG* order_rng = nullptr) {
  SkeletonSubtree out;
  out.sampled = sampled;
  out.vertices = detail::root_path_union(tree, sampled);
  if (out.vertices.empty()) return out;

  const std::size_t n = out.vertices.size();
  std::unordered_map<VertexId, std::size_t> index;
  index.reserve(n);
  for (std::size_t a = 0; a < n; ++a) index.emplace(out.vertices[a], a);

  std::vector<std::size_t> up(n, SIZE_MAX);
  std::vector<std::int64_t> len(n, 0);
  std::vector<std::size_t> nchild(n, 0);
  std::vector<std::size_t> only_child(n, SIZE_MAX);
  std::vector<char> is_sampled(n, 0);
  for (VertexId v : sampled) is_sampled[index.at(v)] = 1;
  for (std::size_t a = 1; a < n; ++a) {
    const std::size_t p = index.at(tree.parent(out.vertices[a]));
    up[a] = p;
    len[a] = 1;
    ++nchild[p];
    only_child[p] = a;
  }

  std::vector<std::size_t> erase;
  for (std::size_t a = 1; a < n; ++a) {
    if (nchild[a] == 1 && !is_sampled[a]) erase.push_back(a);
  }
  if (order_rng) std::shuffle(erase.begin(), erase.end(), *order_rng);

  // Erasing x splices its unique child c onto x's current parent. Degrees of
  // other vertices do not change, so the candidate set is fixed up front.
  std::vector<char> gone(n, 0);
  std::vector<std::size_t> down = only_child;  // current unique child of an erasable vertex
  for (std::size_t x : erase) {
    const std::size_t c = down[x];
    const std::size_t p = up[x];
    up[c] = p;
    len[c] += len[x];
    if (down[p] == x) down[p] = c;
    gone[x] = 1;
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (gone[a]) continue;
    out.kept.push_back(out.vertices[a]);
    out.kept_parent.push_back(up[a] == SIZE_MAX ? treegen::kNoParent : out.vertices[up[a]]);
    out.kept_length.push_back(len[a]);
  }
  return out;
}

/// Reads T_V as a labelled metric shape (root 0, V_i as leaf i). Returns
/// nullopt unless it is one: distinct sampled vertices, none an ancestor of
/// another or the root, a root of degree 1 and binary branch vertices.
inline std::optional<MetricShape<std::int64_t>> reduced_shape(const SkeletonSubtree& sub) {
  const int k = static_cast<int>(sub.sampled.size());
  if (k == 0 || sub.kept.empty()) return std::nullopt;
  std::unordered_map<VertexId, int> label;
  for (int i = 0; i < k; ++i) {
    if (sub.sampled[i] == sub.kept.front()) return std::nullopt;
    if (!label.emplace(sub.sampled[i], i + 1).second) return std::nullopt;
  }
  if (static_cast<int>(sub.kept.size()) != 2 * k) return std::nullopt;
  label.emplace(sub.kept.front(), 0);
  int next = k + 1;
  for (VertexId v : sub.kept) {
    if (!label.count(v)) label.emplace(v, next++);
  }
  Shape s{k, std::vector<int>(2 * k, -1)};
  std::vector<std::int64_t> length(2 * k, 0);
  std::vector<int> nchild(2 * k, 0);
  for (std::size_t a = 1; a < sub.kept.size(); ++a) {
    const int v = label.at(sub.kept[a]);
    s.parent[v] = label.at(sub.kept_parent[a]);
    length[v] = sub.kept_length[a];
    ++nchild[s.parent[v]];
  }
  if (nchild[0] != 1) return std::nullopt;
  for (int v = 1; v <= k; ++v)
    if (nchild[v] != 0) return std::nullopt;
  for (int v = k + 1; v < 2 * k; ++v)
    if (nchild[v] != 2) return std::nullopt;

  // Relabel branch vertices canonically, carrying lengths along.
  Shape c = canonicalize(s);
  std::vector<int> map(2 * k, -1);
  for (int v = 0; v <= k; ++v) map[v] = v;
  for (int leaf = 1; leaf <= k; ++leaf) {
    auto ps = s.root_path(leaf);
    auto pc = c.root_path(leaf);
    for (std::size_t a = 0; a < ps.size(); ++a) map[ps[a]] = pc[a];
  }
  MetricShape<std::int64_t> m;
  m.shape = c;
  m.length.assign(2 * k, 0);
  m.height.assign(2 * k, 0);
  for (int v = 1; v < 2 * k; ++v) m.length[map[v]] = length[v];
  for (int leaf = 1; leaf <= k; ++leaf) {
    std::int64_t h = 0;
    for (int v : c.root_path(leaf)) {
      h += m.length[v];
      m.height[v] = h;
    }
  }
  return m;
}

struct Projection {
  std::vector<VertexId> ancestor;        // pi_K(x)
  std::vector<std::uint32_t> graph_distance;
  std::vector<double> euclidean_distance;
  std::uint32_t max_graph = 0;
  double max_euclidean = 0.0;
};

/// pi_K(x): most recent ancestor of x in T^V. One breadth-first pass, since
/// a parent's projection is known before its children are visited.
inline Projection skeleton_projection(const treegen::SpatialTree& tree, const SkeletonSubtree& sub) {
  const auto& base = tree.base();
  const std::size_t n = base.size();
  std::vector<char> in_sub(n, 0);
  for (VertexId v : sub.vertices) in_sub[v] = 1;
  Projection p;
  p.ancestor.resize(n);
  p.graph_distance.resize(n);
  p.euclidean_distance.resize(n);
  const int d = tree.dim();
  for (VertexId x = 0; x < n; ++x) {
    if (in_sub[x] || x == 0) {
      p.ancestor[x] = x;
      p.graph_distance[x] = 0;
      p.euclidean_distance[x] = 0.0;
      continue;
    }
    const VertexId par = base.parent(x);
    const VertexId a = p.ancestor[par];
    p.ancestor[x] = a;
    p.graph_distance[x] = p.graph_distance[par] + 1;
    auto px = tree.position(x);
    auto pa = tree.position(a);
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = static_cast<double>(px[c]) - pa[c];
      s += diff * diff;
    }
    p.euclidean_distance[x] = std::sqrt(s);
    p.max_graph = std::max(p.max_graph, p.graph_distance[x]);
    p.max_euclidean = std::max(p.max_euclidean, p.euclidean_distance[x]);
  }
  return p;
}

}  // namespace brwskel::skeleton
