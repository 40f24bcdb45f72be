#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/treegen/offspring_law.hpp"

namespace brwskel::treegen {

using VertexId = std::uint32_t;
inline constexpr VertexId kNoParent = std::numeric_limits<VertexId>::max();
inline constexpr std::uint32_t kNoGenerationLimit = std::numeric_limits<std::uint32_t>::max();

/// Default vertex budget for a single tree.
inline constexpr std::size_t kDefaultVertexCap = 50'000'000;

/// Rooted ordered Galton-Watson tree. Ids are dense and breadth-first, so
/// generation m is the contiguous id range [level_begin(m), level_end(m)) and
/// the children of v are [first_child(v), first_child(v+1)).
class GenTree {
 public:
  GenTree() = default;

  std::size_t size() const { return parent_.size(); }

  /// Number of non-empty generations.
  std::uint32_t num_generations() const { return static_cast<std::uint32_t>(level_start_.size() - 1); }

  /// False when growth was stopped by a generation limit while the last
  /// grown generation was still alive.
  bool complete() const { return complete_; }

  bool contains(VertexId v) const { return v < size(); }

  VertexId parent(VertexId v) const {
    check(v);
    return parent_[v];
  }

  std::uint32_t generation(VertexId v) const {
    check(v);
    auto it = std::upper_bound(level_start_.begin(), level_start_.end(), v);
    return static_cast<std::uint32_t>(it - level_start_.begin() - 1);
  }

  std::span<const VertexId> parents() const { return parent_; }

  VertexId first_child(VertexId v) const { return first_child_[v]; }
  std::uint32_t child_count(VertexId v) const {
    check(v);
    return first_child_[v + 1] - first_child_[v];
  }

  /// |T_m|; zero past the last generation.
  std::size_t generation_size(std::uint32_t m) const {
    if (m >= num_generations()) return 0;
    return level_start_[m + 1] - level_start_[m];
  }
  VertexId level_begin(std::uint32_t m) const { return level_start_[std::min<std::size_t>(m, level_start_.size() - 1)]; }
  VertexId level_end(std::uint32_t m) const {
    return level_start_[std::min<std::size_t>(static_cast<std::size_t>(m) + 1, level_start_.size() - 1)];
  }

  template <class Sampler, class URBG>
  friend class TreeBuilder;

 private:
  void check(VertexId v) const {
    if (v >= size()) throw UnknownVertex(v);
  }

  std::vector<VertexId> parent_;
  std::vector<VertexId> first_child_;   // size()+1 entries once finished
  std::vector<VertexId> level_start_;   // num_generations()+1 entries
  bool complete_ = true;
};

/// Breadth-first growth that can be paused at a generation and resumed.
template <class Sampler, class URBG>
class TreeBuilder {
 public:
  TreeBuilder(const Sampler& law, std::size_t cap, URBG& rng) : law_(law), cap_(cap), rng_(rng) {
    tree_.parent_.push_back(kNoParent);
    tree_.level_start_ = {0, 1};
  }

  /// Grows until generation `limit` exists (or extinction).
  void advance(std::uint32_t limit) {
    auto& t = tree_;
    while (generation_ < limit) {
      const VertexId begin = t.level_start_[generation_];
      const VertexId end = t.level_start_[generation_ + 1];
      if (begin == end) break;
      for (VertexId v = begin; v < end; ++v) {
        t.first_child_.push_back(static_cast<VertexId>(t.parent_.size()));
        const std::uint32_t y = law_(rng_);
        if (t.parent_.size() + y > cap_) throw BudgetExceeded(cap_);
        t.parent_.insert(t.parent_.end(), y, v);
      }
      t.level_start_.push_back(static_cast<VertexId>(t.parent_.size()));
      ++generation_;
    }
  }

  bool alive_at(std::uint32_t m) const {
    const auto& ls = tree_.level_start_;
    return static_cast<std::size_t>(m) + 1 < ls.size() && ls[m] < ls[m + 1];
  }

  GenTree finish() && {
    auto& t = tree_;
    while (t.level_start_.size() > 2 && t.level_start_[t.level_start_.size() - 1] == t.level_start_[t.level_start_.size() - 2]) {
      t.level_start_.pop_back();
    }
    t.complete_ = t.first_child_.size() == t.parent_.size();
    while (t.first_child_.size() < t.parent_.size()) {
      t.first_child_.push_back(static_cast<VertexId>(t.parent_.size()));
    }
    t.first_child_.push_back(static_cast<VertexId>(t.parent_.size()));
    return std::move(t);
  }

 private:
  const Sampler& law_;
  std::size_t cap_;
  URBG& rng_;
  GenTree tree_;
  std::uint32_t generation_ = 0;
};

/// Grows a GW tree. `law` is any callable returning an offspring count from
/// the generator. With a generation limit the tree stops at that generation
/// (its vertices get no offspring drawn) and complete() reports whether it
/// died out before the limit.
template <class Sampler, class URBG>
GenTree grow_tree(const Sampler& law, std::size_t cap, URBG& rng,
                  std::uint32_t max_generation = kNoGenerationLimit) {
  if (cap < 1) throw BudgetExceeded(cap);
  TreeBuilder<Sampler, URBG> b(law, cap, rng);
  b.advance(max_generation);
  return std::move(b).finish();
}

struct ConditionedTree {
  GenTree tree;
  std::uint64_t rejections = 0;
};

/// Rejection sampler for the event T_m != empty. Each attempt grows only up
/// to generation m; an accepted attempt is then continued to the full tree
/// (or to max_generation), which gives exactly the conditional law.
template <class Sampler, class URBG>
ConditionedTree grow_conditioned(const Sampler& law, std::uint32_t m, std::size_t cap, URBG& rng,
                                 std::uint32_t max_generation = kNoGenerationLimit) {
  if (cap < 1) throw BudgetExceeded(cap);
  ConditionedTree out;
  for (;;) {
    TreeBuilder<Sampler, URBG> b(law, cap, rng);
    b.advance(std::min(m, max_generation));
    if (!b.alive_at(m)) {
      ++out.rejections;
      continue;
    }
    b.advance(max_generation);
    out.tree = std::move(b).finish();
    return out;
  }
}

/// Population sizes Z_0 = 1, Z_1, ... of the GW process, stopped at
/// extinction (last entry non-zero) or after generation max_generation.
template <class URBG>
std::vector<std::uint64_t> generation_sizes(const OffspringLaw& law, std::uint32_t max_generation, URBG& rng) {
  std::vector<std::uint64_t> z{1};
  while (z.size() <= max_generation) {
    const std::uint64_t next = law.sum_of(z.back(), rng);
    if (next == 0) break;
    z.push_back(next);
  }
  return z;
}

struct ConditionedSizes {
  std::vector<std::uint64_t> sizes;
  std::uint64_t rejections = 0;
};

/// Population sizes conditioned on Z_m > 0, by rejection.
template <class URBG>
ConditionedSizes generation_sizes_conditioned(const OffspringLaw& law, std::uint32_t m, std::uint32_t max_generation,
                                              URBG& rng) {
  ConditionedSizes out;
  for (;;) {
    std::vector<std::uint64_t> z{1};
    while (z.size() <= m) {
      const std::uint64_t next = law.sum_of(z.back(), rng);
      if (next == 0) break;
      z.push_back(next);
    }
    if (z.size() <= m) {
      ++out.rejections;
      continue;
    }
    while (z.size() <= max_generation) {
      const std::uint64_t next = law.sum_of(z.back(), rng);
      if (next == 0) break;
      z.push_back(next);
    }
    out.sizes = std::move(z);
    return out;
  }
}

/// min{m >= 1 : T_m empty}.
inline std::uint32_t survival_time(const GenTree& tree) {
  if (!tree.complete()) throw IncompleteTree();
  return tree.num_generations();
}

inline std::uint32_t mrca_generation(const GenTree& tree, VertexId u, VertexId v) {
  std::uint32_t gu = tree.generation(u);
  std::uint32_t gv = tree.generation(v);
  while (gu > gv) {
    u = tree.parent(u);
    --gu;
  }
  while (gv > gu) {
    v = tree.parent(v);
    --gv;
  }
  while (u != v) {
    u = tree.parent(u);
    v = tree.parent(v);
    --gu;
  }
  return gu;
}

/// K i.i.d. uniform vertices. Consumes the stream sequentially, so the first
/// K' draws do not depend on K.
template <class URBG>
std::vector<VertexId> uniform_vertices(const GenTree& tree, std::size_t k, URBG& rng) {
  std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(tree.size() - 1));
  std::vector<VertexId> out(k);
  for (auto& v : out) v = pick(rng);
  return out;
}

}  // namespace brwskel::treegen
