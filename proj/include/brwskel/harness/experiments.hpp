#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/paths.hpp"
#include "brwskel/core/random.hpp"
#include "brwskel/gst/gst.hpp"
#include "brwskel/harness/config.hpp"
#include "brwskel/harness/instances.hpp"
#include "brwskel/harness/parallel.hpp"
#include "brwskel/harness/record.hpp"
#include "brwskel/harness/stats.hpp"
#include "brwskel/lattice/lattice_tree.hpp"
#include "brwskel/limitlaw/oracles.hpp"
#include "brwskel/skeleton/branch_matrix.hpp"
#include "brwskel/skeleton/shape.hpp"
#include "brwskel/skeleton/subtree.hpp"
#include "brwskel/treegen/gen_tree.hpp"
#include "brwskel/treegen/spatial_tree.hpp"

namespace brwskel::harness {

using treegen::VertexId;

/// Redraws allowed per replica before a budget failure is passed on.
inline constexpr int kMaxRedraws = 1000;

// Stream tags, one per experiment part.
enum : std::uint64_t {
  kTagSurvival = 1,
  kTagPairExact = 2,
  kTagPairTower = 3,
  kTagPairDirect = 4,
  kTagLifetime = 5,
  kTagSkeleton = 6,
  kTagBoundary = 7,
  kTagShapes = 8,
  kTagLattice = 9,
  kTagGst = 10,
  kTagGridStride = 1000,  // added per n-grid index
};

struct Counters {
  std::uint64_t accepted = 0;
  std::uint64_t rejections = 0;
  std::uint64_t redraws = 0;
  void merge(const Counters& o) {
    accepted += o.accepted;
    rejections += o.rejections;
    redraws += o.redraws;
  }
};

/// Runs attempt() until it returns without BudgetExceeded. With
/// on_budget=fail the first failure propagates.
template <class F>
auto with_budget(const ExperimentConfig& c, Counters& k, F&& attempt) -> decltype(attempt()) {
  for (int tries = 0;; ++tries) {
    try {
      return attempt();
    } catch (const BudgetExceeded&) {
      if (c.on_budget == "fail" || tries >= kMaxRedraws) throw;
      ++k.redraws;
    }
  }
}

namespace detail {

inline std::int64_t floor_scaled(double x, std::int64_t n) {
  return static_cast<std::int64_t>(std::floor(x * static_cast<double>(n) + 1e-9));
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

inline ExperimentRecord begin(const ExperimentConfig& c) {
  validate(c);
  ExperimentRecord r;
  r.experiment = c.experiment;
  r.config = to_pairs(c);
  return r;
}

inline void finish(ExperimentRecord& r, const ExperimentConfig& c, const Counters& k,
                   std::chrono::steady_clock::time_point start) {
  r.metadata.threads = c.threads;
  r.metadata.accepted = k.accepted;
  r.metadata.rejections = k.rejections;
  r.metadata.redraws = k.redraws;
  r.metadata.acceptance_rate =
      k.accepted + k.rejections ? static_cast<double>(k.accepted) / static_cast<double>(k.accepted + k.rejections) : 1.0;
  r.metadata.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  seal(r);
}

inline void add_test(ExperimentRecord& r, std::string name, double stat, double p, bool passed, std::string detail) {
  r.tests.push_back({std::move(name), stat, p, passed, std::move(detail)});
}

/// |estimate - oracle| <= 4 se (equality when se is zero).
inline bool within_4se(const Estimate& e) { return std::abs(e.estimate - *e.oracle) <= 4 * e.se; }

inline bool within_rel(const Estimate& e, double rel) {
  return std::abs(e.estimate - *e.oracle) <= rel * std::abs(*e.oracle);
}

inline std::string site_string(const lattice::Site& s) {
  std::string out;
  for (std::size_t c = 0; c < s.size(); ++c) out += (c ? "," : "") + std::to_string(s[c]);
  return out;
}

inline Rational parse_rational(const std::string& text) {
  try {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(text));
    return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  } catch (const std::exception&) {
    throw ConfigError("bad rational '" + text + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------- survival

struct SurvivalAcc {
  std::vector<std::uint64_t> alive;
  std::vector<Moments> size, size_sq;
  void merge(const SurvivalAcc& o) {
    for (std::size_t i = 0; i < alive.size(); ++i) {
      alive[i] += o.alive[i];
      size[i].merge(o.size[i]);
      size_sq[i].merge(o.size_sq[i]);
    }
  }
};

/// m P(T_m != empty) against 2/gamma, the exact geometric survival 1/(m+1),
/// and the moments E|T_m| = 1, E|T_m|^2 = 1 + gamma m.
inline ExperimentRecord run_survival(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  const auto& grid = c.n_grid;
  const auto max_m = static_cast<std::uint32_t>(*std::max_element(grid.begin(), grid.end()));
  const std::size_t G = grid.size();
  SurvivalAcc init{std::vector<std::uint64_t>(G, 0), std::vector<Moments>(G), std::vector<Moments>(G)};
  auto acc = run_replicas(c.replicas, c.threads, init, [&](std::uint64_t r, SurvivalAcc& a) {
    Rng rng = replica_stream(c.seed, r, kTagSurvival);
    const auto z = treegen::generation_sizes(c.law, max_m, rng);
    for (std::size_t i = 0; i < G; ++i) {
      const auto m = static_cast<std::size_t>(grid[i]);
      const double x = m < z.size() ? static_cast<double>(z[m]) : 0.0;
      a.alive[i] += x > 0;
      a.size[i].add(x);
      a.size_sq[i].add(x * x);
    }
  });

  const double gamma = c.law.gamma();
  const auto N = c.replicas;
  std::vector<std::pair<std::int64_t, const Estimate*>> products;
  for (std::size_t i = 0; i < G; ++i) {
    const std::int64_t m = grid[i];
    const double p = static_cast<double>(acc.alive[i]) / N;
    Estimate e{"survival_probability", m, {}, {}, {}, {}, {}, p, proportion_se(p, N), {}, N, ""};
    if (m == 0) e.oracle = 1.0;
    else if (c.law == treegen::kGeometricHalf) e.oracle = boost::rational_cast<double>(limitlaw::exact_survival_geometric(m));
    rec.estimates.push_back(e);
    if (e.oracle) {
      detail::add_test(rec, "survival_exact_m" + std::to_string(m), e.estimate, NAN, detail::within_4se(e),
                       "|P - oracle| <= 4 SE");
    }
    if (m >= 1) {
      rec.estimates.push_back({"kolmogorov_product", m, {}, {}, {}, {}, {}, m * p, m * e.se,
                               limitlaw::survival_tail_gw(m, gamma) * m, N, ""});
    }
    rec.estimates.push_back(
        {"mean_size", m, {}, {}, {}, {}, {}, acc.size[i].mean(), acc.size[i].se(), 1.0, N, ""});
    rec.estimates.push_back({"second_moment", m, {}, {}, {}, {}, {}, acc.size_sq[i].mean(), acc.size_sq[i].se(),
                             1.0 + gamma * m, N, ""});
  }
  for (const auto& e : rec.estimates) {
    if (e.statistic == "kolmogorov_product") products.emplace_back(*e.n, &e);
    if (e.statistic == "mean_size" || e.statistic == "second_moment") {
      detail::add_test(rec, e.statistic + "_m" + std::to_string(*e.n), e.estimate, NAN, detail::within_4se(e),
                       "|estimate - oracle| <= 4 SE");
    }
  }
  if (!products.empty()) {
    std::sort(products.begin(), products.end());
    const Estimate& last = *products.back().second;
    detail::add_test(rec, "kolmogorov_m" + std::to_string(*last.n), last.estimate, NAN, detail::within_rel(last, 0.10),
                     "m P within 10% of 2/gamma at the largest m");
    bool monotone = true;
    for (std::size_t i = 1; i < products.size(); ++i) {
      const auto& a = *products[i - 1].second;
      const auto& b = *products[i].second;
      monotone = monotone && b.estimate >= a.estimate - 2 * std::hypot(a.se, b.se);
    }
    detail::add_test(rec, "kolmogorov_monotone", NAN, NAN, monotone, "m P non-decreasing in m within 2 SE");
  }
  Counters k;
  k.accepted = N;
  detail::finish(rec, c, k, start);
  return rec;
}

// ---------------------------------------------------------------- pair MRCA

namespace detail {

/// desc[v] = number of descendants of v in generation k (v itself if k is
/// its own generation). Ids are breadth-first, so one reverse pass suffices.
inline std::vector<double> descendants_at(const treegen::GenTree& t, std::uint32_t k) {
  std::vector<double> desc(t.size(), 0.0);
  for (VertexId v = t.level_begin(k); v < t.level_end(k); ++v) desc[v] = 1.0;
  for (VertexId v = static_cast<VertexId>(t.size()); v-- > 1;) desc[t.parent(v)] += desc[v];
  return desc;
}

/// Ordered pairs (a in T_k1, b in T_k2) whose MRCA is v: pairs below two
/// different children of v.
inline double pairs_below(const treegen::GenTree& t, VertexId v, const std::vector<double>& d1,
                          const std::vector<double>& d2) {
  double s1 = 0, s2 = 0, same = 0;
  for (VertexId c = t.first_child(v); c < t.first_child(v) + t.child_count(v); ++c) {
    s1 += d1[c];
    s2 += d2[c];
    same += d1[c] * d2[c];
  }
  return s1 * s2 - same;
}

}  // namespace detail

struct MomentsAcc {
  std::vector<Moments> m;
  void merge(const MomentsAcc& o) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i].merge(o.m[i]);
  }
};

/// Pairs counted by MRCA generation. The aggregate over the rescaled window
/// [a, b) uses E[sum_{v in T_m} Y_v (Y_v - 1)] = gamma per generation: the
/// offspring of v are drawn individually inside the window, and the
/// population before the window is advanced with sum_of.
inline ExperimentRecord run_pair_mrca(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  Counters counters;
  const double gamma = c.law.gamma();

  // exact generations k1, k2
  {
    const int mk = std::min(c.k1, c.k2);
    const auto depth = static_cast<std::uint32_t>(std::max(c.k1, c.k2));
    MomentsAcc init{std::vector<Moments>(mk)};
    auto acc = run_replicas(c.replicas, c.threads, init, [&](std::uint64_t r, MomentsAcc& a) {
      Rng rng = replica_stream(c.seed, r, kTagPairExact);
      Counters unused;
      auto t = with_budget(c, unused, [&] { return treegen::grow_tree(c.law, c.cap, rng, depth); });
      const auto d1 = detail::descendants_at(t, c.k1);
      const auto d2 = detail::descendants_at(t, c.k2);
      for (int m = 0; m < mk; ++m) {
        double s = 0;
        for (VertexId v = t.level_begin(m); v < t.level_end(m); ++v) s += detail::pairs_below(t, v, d1, d2);
        a.m[m].add(s);
      }
    });
    for (int m = 0; m < mk; ++m) {
      Estimate e{"pairs_mrca_at_m", {}, {}, m, {}, {}, {}, acc.m[m].mean(), acc.m[m].se(),
                 limitlaw::pair_mrca_expectation(c.law, m, c.k1, c.k2), c.replicas,
                 "k1=" + std::to_string(c.k1) + " k2=" + std::to_string(c.k2)};
      rec.estimates.push_back(e);
      detail::add_test(rec, "pair_mrca_m" + std::to_string(m), e.estimate, NAN, detail::within_4se(e),
                       "|estimate - gamma| <= 4 SE");
    }
  }

  for (std::size_t gi = 0; gi < c.n_grid.size(); ++gi) {
    const std::int64_t n = c.n_grid[gi];
    if (n < 1) continue;
    const std::int64_t g1 = detail::floor_scaled(c.u1, n), g2 = detail::floor_scaled(c.u2, n);
    const auto lo = static_cast<std::int64_t>(std::ceil(c.window_a * n - 1e-9));
    const auto hi = std::min({static_cast<std::int64_t>(std::ceil(c.window_b * n - 1e-9)), g1, g2});
    const double oracle = limitlaw::branch_time_limit_measure(c.u1, c.u2, c.window_a, c.window_b);
    const double scale = 1.0 / (gamma * static_cast<double>(n));
    const std::string window = "window=[" + std::to_string(lo) + "," + std::to_string(hi) + ")";

    MomentsAcc init{std::vector<Moments>(1)};
    auto tower = run_replicas(c.replicas, c.threads, init, [&](std::uint64_t r, MomentsAcc& a) {
      Rng rng = replica_stream(c.seed, r, kTagPairTower + kTagGridStride * gi);
      std::uint64_t z = 1;
      for (std::int64_t g = 0; g < lo && z > 0; ++g) z = c.law.sum_of(z, rng);
      double s = 0;
      for (std::int64_t m = lo; m < hi && z > 0; ++m) {
        std::uint64_t next = 0;
        for (std::uint64_t i = 0; i < z; ++i) {
          const double y = c.law(rng);
          s += y * (y - 1);
          next += static_cast<std::uint64_t>(y);
        }
        z = next;
      }
      a.m[0].add(s * scale);
    });
    Estimate e{"aggregate_pairs", n, {}, {}, {}, {}, {}, tower.m[0].mean(), tower.m[0].se(), oracle, c.replicas,
               window + " estimator=offspring-factorial"};
    rec.estimates.push_back(e);
    detail::add_test(rec, "aggregate_n" + std::to_string(n), e.estimate, NAN, detail::within_rel(e, 0.10),
                     "within 10% of the limit measure");

    if (c.direct_replicas > 0) {
      auto direct = run_replicas(c.direct_replicas, c.threads, init, [&](std::uint64_t r, MomentsAcc& a) {
        Rng rng = replica_stream(c.seed, r, kTagPairDirect + kTagGridStride * gi);
        Counters unused;
        auto t = with_budget(c, unused, [&] {
          return treegen::grow_tree(c.law, c.cap, rng, static_cast<std::uint32_t>(std::max(g1, g2)));
        });
        const auto d1 = detail::descendants_at(t, static_cast<std::uint32_t>(g1));
        const auto d2 = detail::descendants_at(t, static_cast<std::uint32_t>(g2));
        double s = 0;
        for (std::int64_t m = lo; m < hi; ++m)
          for (VertexId v = t.level_begin(m); v < t.level_end(m); ++v) s += detail::pairs_below(t, v, d1, d2);
        a.m[0].add(s * scale);
      });
      Estimate f{"aggregate_pairs_direct", n, {}, {}, {}, {}, {}, direct.m[0].mean(), direct.m[0].se(), oracle,
                 c.direct_replicas, window + " estimator=pair-count"};
      rec.estimates.push_back(f);
      detail::add_test(rec, "aggregate_direct_n" + std::to_string(n), f.estimate, NAN,
                       std::abs(f.estimate - oracle) <= std::max(0.10 * oracle, 4 * f.se),
                       "within 10% of the limit measure or 4 SE");
    }
  }
  counters.accepted = c.replicas;
  detail::finish(rec, c, counters, start);
  return rec;
}

// ---------------------------------------------------------------- lifetime

struct LifetimeAcc {
  std::vector<double> lifetime;  // replica order
  std::vector<std::uint64_t> hits;
  std::vector<Moments> rao_blackwell;
  Counters counters;
  void merge(const LifetimeAcc& o) {
    lifetime.insert(lifetime.end(), o.lifetime.begin(), o.lifetime.end());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      hits[i] += o.hits[i];
      rao_blackwell[i].merge(o.rao_blackwell[i]);
    }
    counters.merge(o.counters);
  }
};

/// One uniform vertex per conditioned tree. Its generation has law
/// Z_g / sum Z given the population profile, so only the profile is
/// simulated. The profile is followed to extinction or max_generation,
/// which acts as the budget.
inline ExperimentRecord run_lifetime_tail(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  Counters total;
  const auto step_total = treegen::step_count(c.d, c.L);
  for (std::size_t gi = 0; gi < c.n_grid.size(); ++gi) {
    const std::int64_t n = c.n_grid[gi];
    if (n < 1) throw ConfigError("lifetime needs n >= 1");
    const auto horizon = static_cast<std::uint32_t>(detail::floor_scaled(c.s, n));
    const std::size_t T = c.t_grid.size();
    LifetimeAcc init{{}, std::vector<std::uint64_t>(T, 0), std::vector<Moments>(T), {}};
    auto acc = run_replicas(c.replicas, c.threads, init, [&](std::uint64_t r, LifetimeAcc& a) {
      Rng rng = replica_stream(c.seed, r, kTagLifetime + kTagGridStride * gi);
      auto sizes = with_budget(c, a.counters, [&] {
        auto cs = treegen::generation_sizes_conditioned(c.law, horizon, c.max_generation, rng);
        a.counters.rejections += cs.rejections;
        if (cs.sizes.size() > c.max_generation) throw BudgetExceeded(c.max_generation);
        return std::move(cs.sizes);
      });
      ++a.counters.accepted;
      std::uint64_t total_size = 0;
      for (auto z : sizes) total_size += z;
      std::uint64_t u = std::uniform_int_distribution<std::uint64_t>(0, total_size - 1)(rng);
      std::size_t g = 0;
      while (u >= sizes[g]) u -= sizes[g++];

      // the sampled vertex's path: g i.i.d. non-zero steps
      DiscretePath w;
      w.points.reserve(g + 1);
      w.points.emplace_back(c.d, 0);
      std::vector<std::int32_t> step(c.d);
      std::uniform_int_distribution<std::uint64_t> pick(0, step_total - 1);
      for (std::size_t k = 0; k < g; ++k) {
        treegen::decode_step(pick(rng), c.d, c.L, step.data());
        LatticePoint p = w.points.back();
        for (int i = 0; i < c.d; ++i) p[i] += step[i];
        w.points.push_back(std::move(p));
      }
      if (lifetime(w) != static_cast<std::int64_t>(g)) throw std::logic_error("path lifetime differs from generation");

      a.lifetime.push_back(static_cast<double>(g) / static_cast<double>(n));
      for (std::size_t i = 0; i < T; ++i) {
        const double cut = c.t_grid[i] * static_cast<double>(n) + 1e-9;
        a.hits[i] += static_cast<double>(g) > cut;
        std::uint64_t above = 0;
        for (std::size_t h = 0; h < sizes.size(); ++h)
          if (static_cast<double>(h) > cut) above += sizes[h];
        a.rao_blackwell[i].add(static_cast<double>(above) / static_cast<double>(total_size));
      }
    });
    total.merge(acc.counters);

    const auto N = c.replicas;
    std::vector<std::pair<double, double>> tail;
    for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
      const double t = c.t_grid[i];
      const double p = static_cast<double>(acc.hits[i]) / N;
      Estimate e{"lifetime_tail", n, {}, {}, {}, {}, t, p, proportion_se(p, N), {}, N, ""};
      try {
        e.oracle = limitlaw::lifetime_tail_limit(t);
      } catch (const RangeError& err) {
        e.note = std::string("oracle refused: ") + err.what();
      }
      rec.estimates.push_back(e);
      Estimate rb{"lifetime_tail_rb", n, {}, {}, {}, {}, t, acc.rao_blackwell[i].mean(), acc.rao_blackwell[i].se(),
                  e.oracle, N, "conditional expectation given the population profile"};
      rec.estimates.push_back(rb);
      if (e.oracle) {
        detail::add_test(rec, "tail_t" + detail::fmt(t) + "_n" + std::to_string(n), e.estimate, NAN,
                         detail::within_rel(e, 0.15), "within 15% of 1/(2t)");
      }
      tail.emplace_back(t, p);
    }
    std::sort(tail.begin(), tail.end());
    bool monotone = true;
    for (std::size_t i = 1; i < tail.size(); ++i) monotone = monotone && tail[i].second <= tail[i - 1].second;
    detail::add_test(rec, "tail_monotone_n" + std::to_string(n), NAN, NAN, monotone, "tail non-increasing in t");

    // given L > 1 the limit law is P(L <= x | L > 1) = 1 - 1/x on [1, inf)
    std::vector<double> beyond;
    for (double x : acc.lifetime)
      if (x > 1.0 + 1e-12) beyond.push_back(x);
    if (!beyond.empty()) {
      EmpiricalSummary s(beyond);
      rec.ks.push_back({"lifetime_given_above_1", n, s.ks_distance([](double x) { return x <= 1 ? 0.0 : 1 - 1 / x; }),
                        ks_critical_1pct(s.size()), s.size()});
    }
  }
  detail::finish(rec, c, total, start);
  return rec;
}

// ---------------------------------------------------------------- skeleton density

/// Statistics of one tree for each K of the (ascending) grid.
struct DensityRow {
  std::vector<double> graph, euclid;
  std::vector<std::vector<double>> uncovered;  // [K][epsilon]
};

/// Nested samples V_1..V_Kmax of one spatial tree; K grid ascending.
inline DensityRow skeleton_density_row(const treegen::SpatialTree& st, const std::vector<VertexId>& sampled,
                                       const std::vector<int>& ks, const std::vector<double>& eps, std::int64_t n) {
  const auto& t = st.base();
  const int d = st.dim();
  // distinct positions with multiplicities
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::int32_t>> where;
  std::vector<double> count;
  for (VertexId v = 0; v < t.size(); ++v) {
    auto p = st.position(v);
    std::string key(reinterpret_cast<const char*>(p.data()), p.size_bytes());
    auto [it, fresh] = index.emplace(std::move(key), where.size());
    if (fresh) {
      where.emplace_back(p.begin(), p.end());
      count.push_back(0);
    }
    count[it->second] += 1;
  }
  std::vector<double> nearest(where.size(), INFINITY);
  std::size_t added = 0;

  DensityRow row;
  const double sn = std::sqrt(static_cast<double>(n));
  for (int k : ks) {
    std::vector<VertexId> prefix(sampled.begin(), sampled.begin() + k);
    auto sub = skeleton::minimal_subtree(t, prefix);
    auto proj = skeleton::skeleton_projection(st, sub);
    row.graph.push_back(static_cast<double>(proj.max_graph) / static_cast<double>(n));
    row.euclid.push_back(proj.max_euclidean / sn);
    for (; added < static_cast<std::size_t>(k); ++added) {
      auto q = st.position(sampled[added]);
      for (std::size_t i = 0; i < where.size(); ++i) {
        double s = 0;
        for (int c = 0; c < d; ++c) {
          const double diff = static_cast<double>(where[i][c]) - q[c];
          s += diff * diff;
        }
        nearest[i] = std::min(nearest[i], s);
      }
    }
    std::vector<double> out;
    for (double e : eps) {
      const double r2 = e * e * static_cast<double>(n);
      double outside = 0;
      for (std::size_t i = 0; i < where.size(); ++i)
        if (nearest[i] >= r2) outside += count[i];
      out.push_back(outside / static_cast<double>(t.size()));
    }
    row.uncovered.push_back(std::move(out));
  }
  return row;
}

struct RowsAcc {
  std::vector<DensityRow> rows;
  Counters counters;
  void merge(const RowsAcc& o) {
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    counters.merge(o.counters);
  }
};

inline void assert_path_consistency(const treegen::SpatialTree& st, const std::vector<VertexId>& sampled) {
  for (VertexId v : sampled) {
    if (lifetime(treegen::path_to_root(st, v)) != static_cast<std::int64_t>(st.base().generation(v))) {
      throw std::logic_error("path lifetime differs from generation");
    }
  }
}

inline ExperimentRecord run_skeleton_density(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  Counters total;
  auto ks = c.k_grid;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const int kmax = ks.back();
  for (std::size_t gi = 0; gi < c.n_grid.size(); ++gi) {
    const std::int64_t n = c.n_grid[gi];
    if (n < 1) throw ConfigError("skeleton-density needs n >= 1");
    const auto horizon = static_cast<std::uint32_t>(detail::floor_scaled(c.s, n));
    auto acc = run_replicas(c.replicas, c.threads, RowsAcc{}, [&](std::uint64_t r, RowsAcc& a) {
      Rng rng = replica_stream(c.seed, r, kTagSkeleton + kTagGridStride * gi);
      auto ct = with_budget(c, a.counters, [&] { return treegen::grow_conditioned(c.law, horizon, c.cap, rng); });
      a.counters.rejections += ct.rejections;
      ++a.counters.accepted;
      auto st = treegen::attach_displacements(std::move(ct.tree), c.d, c.L, rng);
      auto sampled = treegen::uniform_vertices(st.base(), kmax, rng);
      assert_path_consistency(st, sampled);
      a.rows.push_back(skeleton_density_row(st, sampled, ks, c.epsilon_grid, n));
    });
    total.merge(acc.counters);

    const auto N = acc.rows.size();
    // Graph distance and coverage can only shrink when vertices are added.
    // The Euclidean maximum can grow: pi_K(x) moves to a closer ancestor in
    // the tree that may sit farther away in space.
    std::uint64_t violations = 0, euclid_increases = 0;
    for (const auto& row : acc.rows) {
      for (std::size_t i = 1; i < ks.size(); ++i) {
        violations += row.graph[i] > row.graph[i - 1];
        for (std::size_t e = 0; e < c.epsilon_grid.size(); ++e) violations += row.uncovered[i][e] > row.uncovered[i - 1][e];
        euclid_increases += row.euclid[i] > row.euclid[i - 1];
      }
    }
    detail::add_test(rec, "nested_monotone_n" + std::to_string(n), static_cast<double>(violations), NAN,
                     violations == 0, "graph distance and uncovered fraction non-increasing in K on every tree");
    rec.estimates.push_back({"euclidean_increases", n, {}, {}, {}, {}, {}, static_cast<double>(euclid_increases),
                             0.0, {}, N, "consecutive K steps where the Euclidean maximum grew"});

    auto column = [&](auto get) {
      std::vector<double> out;
      for (const auto& row : acc.rows) out.push_back(get(row));
      return out;
    };
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const std::int64_t K = ks[i];
      for (auto [name, values] : {std::pair{std::string("max_graph_distance"), column([&](auto& w) { return w.graph[i]; })},
                                  std::pair{std::string("max_euclidean_distance"), column([&](auto& w) { return w.euclid[i]; })}}) {
        Moments m;
        for (double x : values) m.add(x);
        EmpiricalSummary s(values);
        rec.estimates.push_back({name, n, K, {}, {}, {}, {}, m.mean(), m.se(), {}, N, ""});
        rec.estimates.push_back({name + "_median", n, K, {}, {}, {}, {}, s.quantile(0.5), s.quantile_se(0.5), {}, N,
                                 "type-7 quantile"});
        rec.estimates.push_back({name + "_q90", n, K, {}, {}, {}, {}, s.quantile(0.9), s.quantile_se(0.9), {}, N, "type-7 quantile"});
      }
      for (std::size_t e = 0; e < c.epsilon_grid.size(); ++e) {
        Moments m;
        for (const auto& row : acc.rows) m.add(row.uncovered[i][e]);
        rec.estimates.push_back(
            {"uncovered_fraction", n, K, {}, {}, c.epsilon_grid[e], {}, m.mean(), m.se(), {}, N, ""});
      }
    }
    const std::size_t lo = std::find(ks.begin(), ks.end(), 4) != ks.end()
                               ? static_cast<std::size_t>(std::find(ks.begin(), ks.end(), 4) - ks.begin())
                               : 0;
    const std::size_t hi = ks.size() - 1;
    if (hi != lo) {
      const auto a = column([&](auto& w) { return w.graph[hi]; });
      const auto b = column([&](auto& w) { return w.graph[lo]; });
      const auto res = sign_test_less(a, b);
      const double med_a = EmpiricalSummary(a).quantile(0.5), med_b = EmpiricalSummary(b).quantile(0.5);
      detail::add_test(rec, "sign_test_K" + std::to_string(ks[hi]) + "_vs_K" + std::to_string(ks[lo]) + "_n" + std::to_string(n),
                       res.statistic, res.p_value, res.p_value < 0.01 && med_a < med_b,
                       "median " + detail::fmt(med_a) + " vs " + detail::fmt(med_b) + "; one-sided sign test");
    }
  }
  detail::finish(rec, c, total, start);
  return rec;
}

// ---------------------------------------------------------------- branch boundary

/// The two pair statistics of one tree, normalized by (gamma n)^2.
/// stat_i[delta]: ordered pairs (a in T_g1, b in T_g2), g_i = floor(n u_i),
/// whose branch time exceeds n (u1 ^ u2 - delta).
/// stat_ii[delta][epsilon]: pairs with branch time tau <= n (u1 ^ u2 - delta)
/// whose positions at generation tau + floor(n delta) are closer than
/// epsilon sqrt(n).
struct BoundaryRow {
  std::vector<double> stat_i;
  std::vector<std::vector<double>> stat_ii;
};

/// Pairs are grouped through the trie of spatial paths: two vertices have
/// equal paths up to generation k exactly when they share the trie node at
/// depth k.
inline BoundaryRow branch_boundary_row(const treegen::SpatialTree& st, std::int64_t n, double u1, double u2,
                                       double gamma, const std::vector<double>& deltas,
                                       const std::vector<double>& epsilons) {
  const auto& t = st.base();
  const int d = st.dim();
  const int L = st.range();
  const std::int64_t g1 = detail::floor_scaled(u1, n), g2 = detail::floor_scaled(u2, n);
  const double umin = std::min(u1, u2);

  // trie of spatial paths
  std::vector<std::uint32_t> node(t.size());
  std::vector<std::uint32_t> tparent{0}, tdepth{0}, trep{0};
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  const std::uint64_t side = 2 * static_cast<std::uint64_t>(L) + 1;
  std::uint64_t radix = 1;
  for (int c = 0; c < d; ++c) radix *= side;
  for (VertexId v = 1; v < t.size(); ++v) {
    const auto disp = st.displacement(v);
    std::uint64_t code = 0;
    for (int c = d; c-- > 0;) code = code * side + static_cast<std::uint64_t>(disp[c] + L);
    const std::uint32_t pn = node[t.parent(v)];
    auto [it, fresh] = lookup.emplace(pn * radix + code, static_cast<std::uint32_t>(tparent.size()));
    if (fresh) {
      tparent.push_back(pn);
      tdepth.push_back(tdepth[pn] + 1);
      trep.push_back(v);
    }
    node[v] = it->second;
  }
  const std::size_t nodes = tparent.size();
  std::vector<double> c1(nodes, 0.0), c2(nodes, 0.0);
  auto fill = [&](std::vector<double>& cnt, std::int64_t g) {
    if (g >= static_cast<std::int64_t>(t.num_generations())) return;
    for (VertexId v = t.level_begin(g); v < t.level_end(g); ++v) cnt[node[v]] += 1;
    for (std::size_t a = nodes; a-- > 1;) cnt[tparent[a]] += cnt[a];
  };
  fill(c1, g1);
  fill(c2, g2);

  const double norm = 1.0 / ((gamma * n) * (gamma * n));
  BoundaryRow row;
  for (double delta : deltas) {
    const double theta = static_cast<double>(n) * (umin - delta);
    double pairs = 0;
    if (theta < 0) {
      pairs = c1[0] * c2[0];
    } else {
      const auto k = static_cast<std::int64_t>(std::floor(theta + 1e-9));
      if (k < std::min(g1, g2)) {
        for (std::size_t a = 0; a < nodes; ++a)
          if (tdepth[a] == k) pairs += c1[a] * c2[a];
      }
    }
    row.stat_i.push_back(pairs * norm);

    // tau = (depth of the trie meet) + 1 <= limit, read at depth tau + D
    std::vector<double> close(epsilons.size(), 0.0);
    if (theta >= 1) {
      const auto limit = static_cast<std::int64_t>(std::floor(theta + 1e-9));
      const auto D = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * delta + 1e-9));
      // nodes b at depth j = k + 1 + D with k + 1 <= limit, keyed by their
      // ancestors at depths k (the meet) and k + 1 (the branch taken)
      struct Item {
        std::uint32_t meet, branch, b;
      };
      std::vector<Item> items;
      for (std::size_t b = 1; b < nodes; ++b) {
        const std::int64_t j = tdepth[b];
        if (j < D + 1 || j - D > limit || (c1[b] == 0 && c2[b] == 0)) continue;
        std::uint32_t x = static_cast<std::uint32_t>(b);
        for (std::int64_t s = 0; s < D; ++s) x = tparent[x];
        items.push_back({tparent[x], x, static_cast<std::uint32_t>(b)});
      }
      std::sort(items.begin(), items.end(),
                [](const Item& p, const Item& q) { return std::tie(p.meet, p.branch, p.b) < std::tie(q.meet, q.branch, q.b); });
      std::vector<double> r2;
      for (double e : epsilons) r2.push_back(e * e * static_cast<double>(n));
      for (std::size_t lo = 0; lo < items.size();) {
        std::size_t hi = lo;
        while (hi < items.size() && items[hi].meet == items[lo].meet) ++hi;
        for (std::size_t p = lo; p < hi; ++p) {
          if (c1[items[p].b] == 0) continue;
          auto x = st.position(trep[items[p].b]);
          for (std::size_t q = lo; q < hi; ++q) {
            if (items[q].branch == items[p].branch || c2[items[q].b] == 0) continue;
            auto y = st.position(trep[items[q].b]);
            double s = 0;
            for (int c = 0; c < d; ++c) {
              const double diff = static_cast<double>(x[c]) - y[c];
              s += diff * diff;
            }
            const double w = c1[items[p].b] * c2[items[q].b];
            for (std::size_t e = 0; e < r2.size(); ++e)
              if (s < r2[e]) close[e] += w;
          }
        }
        lo = hi;
      }
    }
    for (auto& x : close) x *= norm;
    row.stat_ii.push_back(std::move(close));
  }
  return row;
}

struct BoundaryAcc {
  std::vector<BoundaryRow> rows;
  Counters counters;
  void merge(const BoundaryAcc& o) {
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    counters.merge(o.counters);
  }
};

inline ExperimentRecord run_branch_boundary(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  Counters total;
  auto deltas = c.delta_grid;
  std::sort(deltas.begin(), deltas.end());
  auto eps = c.epsilon_grid;
  std::sort(eps.begin(), eps.end());
  std::map<std::int64_t, std::vector<Moments>> by_n;  // stat_i moments per delta

  for (std::size_t gi = 0; gi < c.n_grid.size(); ++gi) {
    const std::int64_t n = c.n_grid[gi];
    if (n < 1) throw ConfigError("branch-boundary needs n >= 1");
    const auto horizon = static_cast<std::uint32_t>(detail::floor_scaled(c.s, n));
    const auto depth = static_cast<std::uint32_t>(
        std::max({static_cast<std::int64_t>(horizon), detail::floor_scaled(c.u1, n), detail::floor_scaled(c.u2, n)}));
    auto acc = run_replicas(c.replicas, c.threads, BoundaryAcc{}, [&](std::uint64_t r, BoundaryAcc& a) {
      Rng rng = replica_stream(c.seed, r, kTagBoundary + kTagGridStride * gi);
      auto ct = with_budget(c, a.counters,
                            [&] { return treegen::grow_conditioned(c.law, horizon, c.cap, rng, depth); });
      a.counters.rejections += ct.rejections;
      ++a.counters.accepted;
      auto st = treegen::attach_displacements(std::move(ct.tree), c.d, c.L, rng);
      a.rows.push_back(branch_boundary_row(st, n, c.u1, c.u2, c.law.gamma(), deltas, eps));
    });
    total.merge(acc.counters);
    const auto N = acc.rows.size();

    std::uint64_t violations = 0;
    for (const auto& row : acc.rows)
      for (std::size_t i = 1; i < deltas.size(); ++i) violations += row.stat_i[i] < row.stat_i[i - 1];
    detail::add_test(rec, "stat_i_monotone_delta_n" + std::to_string(n), static_cast<double>(violations), NAN,
                     violations == 0, "statistic (i) non-decreasing in delta on every tree");

    auto& moments = by_n[n];
    moments.assign(deltas.size(), Moments{});
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      for (const auto& row : acc.rows) moments[i].add(row.stat_i[i]);
      rec.estimates.push_back({"stat_i", n, {}, {}, deltas[i], {}, {}, moments[i].mean(), moments[i].se(), {}, N, ""});
      for (std::size_t e = 0; e < eps.size(); ++e) {
        Moments m;
        for (const auto& row : acc.rows) m.add(row.stat_ii[i][e]);
        rec.estimates.push_back({"stat_ii", n, {}, {}, deltas[i], eps[e], {}, m.mean(), m.se(), {}, N, ""});
      }
      if (eps.size() > 1) {
        std::vector<double> small, large;
        for (const auto& row : acc.rows) {
          small.push_back(row.stat_ii[i][0]);
          large.push_back(row.stat_ii[i].back());
        }
        const auto res = sign_test_less(small, large);
        detail::add_test(rec, "stat_ii_decreasing_epsilon_n" + std::to_string(n) + "_delta" + detail::fmt(deltas[i]),
                         res.statistic, res.p_value, res.p_value < 0.01,
                         "paired sign test, epsilon=" + detail::fmt(eps.front()) + " vs " + detail::fmt(eps.back()));
      }
    }
    if (deltas.size() > 1) {
      std::vector<double> small, large;
      for (const auto& row : acc.rows) {
        small.push_back(row.stat_i.front());
        large.push_back(row.stat_i.back());
      }
      const auto res = sign_test_less(small, large);
      detail::add_test(rec, "stat_i_increasing_delta_n" + std::to_string(n), res.statistic, res.p_value,
                       res.p_value < 0.01 && moments.front().mean() < moments.back().mean(),
                       "paired sign test, delta=" + detail::fmt(deltas.front()) + " vs " + detail::fmt(deltas.back()));
    }
  }
  if (by_n.size() > 1) {
    const auto& [n_lo, m_lo] = *by_n.begin();
    const auto& [n_hi, m_hi] = *by_n.rbegin();
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      const auto res = welch_greater(m_lo[i], m_hi[i]);
      detail::add_test(rec, "stat_i_decreasing_n_delta" + detail::fmt(deltas[i]), res.statistic, res.p_value,
                       res.p_value < 0.01,
                       "one-sided Welch test, n=" + std::to_string(n_lo) + " vs n=" + std::to_string(n_hi));
    }
  }
  detail::finish(rec, c, total, start);
  return rec;
}

// ---------------------------------------------------------------- shapes

struct ShapeAcc {
  std::map<std::pair<int, std::string>, std::uint64_t> counts;  // (K, shape or "degenerate")
  Counters counters;
  void merge(const ShapeAcc& o) {
    for (const auto& [k, v] : o.counts) counts[k] += v;
    counters.merge(o.counters);
  }
};

inline constexpr const char* kDegenerate = "degenerate";

inline ExperimentRecord run_shape_frequencies(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  Counters total;
  auto ks = c.k_grid;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const int kmax = ks.back();
  std::map<std::int64_t, ShapeAcc> by_n;
  for (std::size_t gi = 0; gi < c.n_grid.size(); ++gi) {
    const std::int64_t n = c.n_grid[gi];
    if (n < 1) throw ConfigError("shapes needs n >= 1");
    const auto horizon = static_cast<std::uint32_t>(detail::floor_scaled(c.s, n));
    auto acc = run_replicas(c.replicas, c.threads, ShapeAcc{}, [&](std::uint64_t r, ShapeAcc& a) {
      Rng rng = replica_stream(c.seed, r, kTagShapes + kTagGridStride * gi);
      auto ct = with_budget(c, a.counters, [&] { return treegen::grow_conditioned(c.law, horizon, c.cap, rng); });
      a.counters.rejections += ct.rejections;
      ++a.counters.accepted;
      const auto sampled = treegen::uniform_vertices(ct.tree, kmax, rng);
      for (int k : ks) {
        std::vector<VertexId> prefix(sampled.begin(), sampled.begin() + k);
        auto m = skeleton::build_shape(skeleton::genealogical_branch_matrix(ct.tree, prefix));
        a.counts[{k, m ? skeleton::serialize(m->shape) : kDegenerate}] += 1;
      }
    });
    total.merge(acc.counters);
    by_n[n] = acc;
  }

  auto cells = [&](const ShapeAcc& a, int k, const std::vector<std::string>& names) {
    std::vector<double> out;
    for (const auto& s : names) {
      auto it = a.counts.find({k, s});
      out.push_back(it == a.counts.end() ? 0.0 : static_cast<double>(it->second));
    }
    return out;
  };
  for (int k : ks) {
    std::vector<std::string> names;
    for (const auto& s : skeleton::enumerate_shapes(k)) names.push_back(skeleton::serialize(s));
    for (const auto& [n, acc] : by_n) {
      const auto counts = cells(acc, k, names);
      const double good = std::accumulate(counts.begin(), counts.end(), 0.0);
      const auto N = c.replicas;
      for (std::size_t i = 0; i < names.size(); ++i) {
        const double p = good > 0 ? counts[i] / good : NAN;
        Estimate e{"shape_frequency", n, k, {}, {}, {}, {}, p, proportion_se(p, static_cast<std::uint64_t>(good)), {},
                   static_cast<std::uint64_t>(good), names[i]};
        if (k == 2) e.oracle = 1.0;
        if (k == 3) e.oracle = 1.0 / 3.0;
        rec.estimates.push_back(e);
      }
      const double deg = static_cast<double>(N) - good;
      rec.estimates.push_back({"degeneracy_frequency", n, k, {}, {}, {}, {}, deg / N, proportion_se(deg / N, N), {}, N, ""});
      if (k == 3 && good > 0) {
        const auto res = chi_square_gof(counts, std::vector<double>(names.size(), 1.0 / names.size()));
        detail::add_test(rec, "uniform_K3_n" + std::to_string(n), res.statistic, res.p_value, res.p_value >= 0.01,
                         "chi-square against equal frequencies, not rejected at 1%");
      }
    }
    for (auto it = by_n.begin(); std::next(it) != by_n.end(); ++it) {
      auto nx = std::next(it);
      const auto res = chi_square_two_sample(cells(it->second, k, names), cells(nx->second, k, names));
      detail::add_test(rec,
                       "stabilization_K" + std::to_string(k) + "_n" + std::to_string(it->first) + "_vs_n" +
                           std::to_string(nx->first),
                       res.statistic, res.p_value, res.p_value >= 0.01, "two-sample chi-square, not rejected at 1%");
    }
    if (by_n.size() > 1) {
      auto deg = [&](const ShapeAcc& a) {
        auto it = a.counts.find({k, kDegenerate});
        return it == a.counts.end() ? std::uint64_t{0} : it->second;
      };
      const auto& lo = *by_n.begin();
      const auto& hi = *by_n.rbegin();
      const auto res = proportion_greater(deg(lo.second), c.replicas, deg(hi.second), c.replicas);
      detail::add_test(rec,
                       "degeneracy_trend_K" + std::to_string(k) + "_n" + std::to_string(lo.first) + "_vs_n" +
                           std::to_string(hi.first),
                       res.statistic, res.p_value, res.p_value < 0.01, "one-sided two-proportion z-test");
    }
  }
  detail::finish(rec, c, total, start);
  return rec;
}

// ---------------------------------------------------------------- lattice

struct CellAcc {
  std::map<std::pair<int, lattice::Site>, std::uint64_t> hits;
  void merge(const CellAcc& o) {
    for (const auto& [k, v] : o.hits) hits[k] += v;
  }
};

/// Enumerates lattice trees, writes them to <out>/lattice_trees_d<d>_L<L>_e<m>.txt,
/// and checks the inverse-CDF sampler against the exact vertex law.
inline ExperimentRecord run_enumerate_lattice(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  const Rational z = detail::parse_rational(c.z);
  if (z <= Rational(0)) throw ConfigError("z must be positive");
  const auto trees = lattice::enumerate_trees(c.d, c.L, c.max_edges);

  std::filesystem::create_directories(c.out);
  const auto file = (std::filesystem::path(c.out) / ("lattice_trees_d" + std::to_string(c.d) + "_L" +
                                                     std::to_string(c.L) + "_e" + std::to_string(c.max_edges) + ".txt"))
                        .string();
  {
    std::ofstream os(file);
    lattice::write_trees(os, trees, c.d, c.L, c.max_edges);
  }
  rec.notes.push_back("tree list: " + std::filesystem::path(file).filename().string());

  std::vector<std::uint64_t> per_edges(c.max_edges + 1, 0);
  for (const auto& t : trees) ++per_edges[t.edge_count()];
  const bool chain = c.d == 1 && c.L == 1;
  for (int m = 0; m <= c.max_edges; ++m) {
    Estimate e{"tree_count", {}, {}, m, {}, {}, {}, static_cast<double>(per_edges[m]), 0.0, {}, 1, "exact"};
    if (chain) e.oracle = m + 1.0;
    rec.estimates.push_back(e);
    if (chain) detail::add_test(rec, "tree_count_m" + std::to_string(m), e.estimate, NAN, e.estimate == *e.oracle, "m+1 trees");
  }
  const Rational Z = lattice::truncated_partition_exact(c.d, c.L, z, c.max_edges);
  Estimate part{"partition", {}, {}, {}, {}, {}, {}, boost::rational_cast<double>(Z), 0.0, {}, 1,
                "exact " + std::to_string(Z.numerator()) + "/" + std::to_string(Z.denominator())};
  if (chain && z == Rational(1) && c.max_edges == 2) part.oracle = 11.0 / 4.0;
  rec.estimates.push_back(part);
  if (part.oracle) {
    detail::add_test(rec, "partition_exact", part.estimate, NAN, Z == Rational(11, 4), "truncated partition 11/4");
  }
  const double zd = boost::rational_cast<double>(z);
  for (int m = 0; m <= c.max_edges; ++m) {
    rec.estimates.push_back({"generation_mean", {}, {}, m, {}, {}, {},
                             lattice::truncated_generation_mean(c.d, c.L, zd, c.max_edges, m), 0.0, {}, 1, "exact"});
  }

  const auto law = lattice::truncated_uniform_vertex_law(c.d, c.L, z, c.max_edges);
  lattice::EnsembleSampler sampler(trees, zd, c.d, c.L);
  auto acc = run_replicas(c.replicas, c.threads, CellAcc{}, [&](std::uint64_t r, CellAcc& a) {
    Rng rng = replica_stream(c.seed, r, kTagLattice);
    a.hits[sampler.draw_vertex(rng)] += 1;
  });
  bool all_close = true;
  double worst = 0;
  for (const auto& [cell, p] : law) {
    const double pe = boost::rational_cast<double>(p);
    auto it = acc.hits.find(cell);
    const double f = it == acc.hits.end() ? 0.0 : static_cast<double>(it->second) / c.replicas;
    const double se = proportion_se(pe, c.replicas);
    rec.estimates.push_back({"vertex_law", {}, {}, cell.first, {}, {}, {}, f, se, pe, c.replicas,
                             "site=" + detail::site_string(cell.second)});
    worst = std::max(worst, std::abs(f - pe) / se);
    all_close = all_close && std::abs(f - pe) <= 4 * se;
  }
  for (const auto& [cell, hits] : acc.hits) all_close = all_close && law.count(cell) > 0;
  detail::add_test(rec, "vertex_law_4se", worst, NAN, all_close, "every cell within 4 SE of the exact law");
  Counters k;
  k.accepted = c.replicas;
  detail::finish(rec, c, k, start);
  return rec;
}

// ---------------------------------------------------------------- gst checks

struct GstAcc {
  std::uint64_t families = 0, rescale_failures = 0, metric_pairs = 0, metric_failures = 0, stability_failures = 0;
  double max_rescale_D = 0;
  void merge(const GstAcc& o) {
    families += o.families;
    rescale_failures += o.rescale_failures;
    metric_pairs += o.metric_pairs;
    metric_failures += o.metric_failures;
    stability_failures += o.stability_failures;
    max_rescale_D = std::max(max_rescale_D, o.max_rescale_D);
  }
};

/// Exact identities on random instances: the rescaling identity of the
/// interpolated gst, tree metric = path-length metric, and shape stability
/// under perturbations inside the stability radius.
inline ExperimentRecord run_gst_check(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  auto rec = detail::begin(c);
  auto acc = run_replicas(c.replicas, c.threads, GstAcc{}, [&](std::uint64_t r, GstAcc& a) {
    Rng rng = replica_stream(c.seed, r, kTagGst);
    const int k = c.k_grid[r % c.k_grid.size()];
    ++a.families;

    // rescaling identity on a non-degenerate path family
    for (;;) {
      auto family = random_path_family(k, rng);
      if (!skeleton::check_nondegenerate(skeleton::branch_matrix(family))) continue;
      std::vector<PolylinePath<Rational>> k1;
      for (const auto& w : family) k1.push_back(interpolate_kappa(w, 1));
      const auto base = gst::gst_of_paths(k1);
      for (auto n : c.n_grid) {
        std::vector<PolylinePath<Rational>> kn;
        for (const auto& w : k1) kn.push_back(rescale_path(w, n));
        const double D = gst::big_D(gst::gst_of_paths(kn), gst::rescale(base, n));
        a.max_rescale_D = std::max(a.max_rescale_D, D);
        a.rescale_failures += D != 0.0;
      }
      break;
    }

    // tree metric against path lengths, at every vertex and edge midpoint
    auto shape = random_shape(k, rng);
    auto heights = random_heights(shape, rng);
    auto tau = matrix_from_heights(shape, heights);
    auto m = skeleton::build_shape(tau);
    std::vector<std::pair<int, Rational>> pts{{0, Rational(0)}};
    for (int v = 1; v < m->shape.num_vertices(); ++v) {
      const int leaf = m->representative[v].first;
      pts.emplace_back(leaf, m->height[v]);
      pts.emplace_back(leaf, m->height[v] - m->length[v] / Rational(2));
    }
    for (const auto& [i, u] : pts)
      for (const auto& [j, v] : pts) {
        ++a.metric_pairs;
        a.metric_failures += skeleton::tree_metric(tau, i, u, j, v) != skeleton::path_length_distance(*m, i, u, j, v);
      }

    // perturbation of the vertex heights inside the stability radius
    const Rational radius = skeleton::stability_radius(tau);
    std::uniform_int_distribution<int> jitter(-999, 999);
    auto moved = heights;
    for (std::size_t v = 1; v < moved.size(); ++v) moved[v] += radius * Rational(jitter(rng), 1000);
    auto m2 = skeleton::build_shape(matrix_from_heights(shape, moved));
    a.stability_failures += !m2 || m2->shape != m->shape;
  });

  const auto N = acc.families;
  rec.estimates.push_back({"rescaling_max_D", {}, {}, {}, {}, {}, {}, acc.max_rescale_D, 0.0, 0.0, N, "exact"});
  rec.estimates.push_back({"metric_mismatches", {}, {}, {}, {}, {}, {}, static_cast<double>(acc.metric_failures), 0.0,
                           0.0, N, std::to_string(acc.metric_pairs) + " point pairs"});
  rec.estimates.push_back(
      {"stability_failures", {}, {}, {}, {}, {}, {}, static_cast<double>(acc.stability_failures), 0.0, 0.0, N, "exact"});
  detail::add_test(rec, "rescaling_identity", acc.max_rescale_D, NAN, acc.rescale_failures == 0, "D = 0 exactly");
  detail::add_test(rec, "metric_equality", static_cast<double>(acc.metric_failures), NAN, acc.metric_failures == 0,
                   "exact rational equality");
  detail::add_test(rec, "shape_stability", static_cast<double>(acc.stability_failures), NAN,
                   acc.stability_failures == 0, "no shape change within the stability radius");
  Counters k;
  k.accepted = N;
  detail::finish(rec, c, k, start);
  return rec;
}

// ---------------------------------------------------------------- dispatch

inline ExperimentRecord run_experiment(const ExperimentConfig& c) {
  if (c.experiment == "survival") return run_survival(c);
  if (c.experiment == "pair-mrca") return run_pair_mrca(c);
  if (c.experiment == "lifetime") return run_lifetime_tail(c);
  if (c.experiment == "skeleton-density") return run_skeleton_density(c);
  if (c.experiment == "branch-boundary") return run_branch_boundary(c);
  if (c.experiment == "shapes") return run_shape_frequencies(c);
  if (c.experiment == "enumerate-lattice") return run_enumerate_lattice(c);
  if (c.experiment == "gst-check") return run_gst_check(c);
  throw ConfigError("unknown experiment '" + c.experiment + "'");
}

/// Throws AcceptanceFloorBreached when conditioning accepted too rarely.
inline void check_acceptance_floor(const ExperimentRecord& r, const ExperimentConfig& c) {
  if (r.metadata.acceptance_rate < c.min_acceptance) {
    throw AcceptanceFloorBreached("acceptance rate " + detail::fmt(r.metadata.acceptance_rate) + " below floor " +
                                  detail::fmt(c.min_acceptance));
  }
}

}  // namespace brwskel::harness
