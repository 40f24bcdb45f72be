#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/paths.hpp"
#include "brwskel/treegen/gen_tree.hpp"

namespace brwskel::treegen {

/// Number of admissible steps |[-L,L]^d \ {o}|.
inline std::uint64_t step_count(int d, int L) {
  if (d < 1 || L < 1) throw OutOfRange("need d >= 1 and L >= 1");
  std::uint64_t side = 2 * static_cast<std::uint64_t>(L) + 1;
  std::uint64_t total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  return total - 1;
}

/// Decodes step index in [0, step_count) to a displacement, skipping o.
inline void decode_step(std::uint64_t index, int d, int L, std::int32_t* out) {
  const std::uint64_t side = 2 * static_cast<std::uint64_t>(L) + 1;
  const std::uint64_t origin = (step_count(d, L)) / 2;
  if (index >= origin) ++index;
  for (int c = 0; c < d; ++c) {
    out[c] = static_cast<std::int32_t>(index % side) - L;
    index /= side;
  }
}

/// Branching random walk: a GenTree plus one lattice position per vertex.
class SpatialTree {
 public:
  SpatialTree() = default;
  SpatialTree(GenTree base, int d, int L, std::vector<std::int32_t> positions)
      : base_(std::move(base)), d_(d), L_(L), pos_(std::move(positions)) {}

  const GenTree& base() const { return base_; }
  int dim() const { return d_; }
  int range() const { return L_; }
  std::size_t size() const { return base_.size(); }

  std::span<const std::int32_t> position(VertexId v) const {
    if (!base_.contains(v)) throw UnknownVertex(v);
    return {pos_.data() + static_cast<std::size_t>(v) * d_, static_cast<std::size_t>(d_)};
  }

  /// Displacement of v from its parent (zero vector for the root).
  std::vector<std::int32_t> displacement(VertexId v) const {
    std::vector<std::int32_t> out(d_, 0);
    const VertexId p = base_.parent(v);
    if (p == kNoParent) return out;
    auto a = position(v);
    auto b = position(p);
    for (int c = 0; c < d_; ++c) out[c] = a[c] - b[c];
    return out;
  }

  std::span<const std::int32_t> positions() const { return pos_; }

 private:
  GenTree base_;
  int d_ = 1;
  int L_ = 1;
  std::vector<std::int32_t> pos_;
};

/// I.i.d. uniform steps on [-L,L]^d \ {o} for every non-root vertex.
/// Parents precede children in breadth-first order, so one pass suffices.
template <class URBG>
SpatialTree attach_displacements(GenTree tree, int d, int L, URBG& rng) {
  std::uniform_int_distribution<std::uint64_t> pick(0, step_count(d, L) - 1);
  std::vector<std::int32_t> pos(tree.size() * static_cast<std::size_t>(d), 0);
  std::vector<std::int32_t> step(d);
  for (VertexId v = 1; v < tree.size(); ++v) {
    decode_step(pick(rng), d, L, step.data());
    const std::size_t p = static_cast<std::size_t>(tree.parent(v)) * d;
    const std::size_t q = static_cast<std::size_t>(v) * d;
    for (int c = 0; c < d; ++c) pos[q + c] = pos[p + c] + step[c];
  }
  return SpatialTree(std::move(tree), d, L, std::move(pos));
}

/// w(., v): positions of v's ancestors at generations 0..|v|.
inline DiscretePath path_to_root(const SpatialTree& tree, VertexId v) {
  if (!tree.base().contains(v)) throw UnknownVertex(v);
  DiscretePath w;
  w.points.resize(tree.base().generation(v) + 1);
  for (std::size_t k = w.points.size(); k-- > 0;) {
    auto p = tree.position(v);
    w.points[k].assign(p.begin(), p.end());
    v = tree.base().parent(v);
  }
  return w;
}

}  // namespace brwskel::treegen
