#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/paths.hpp"
#include "brwskel/skeleton/shape.hpp"

namespace brwskel::limitlaw {

/// A shape in Sigma_r with a time for every non-root vertex: t_i for leaf i
/// and u_v for branch vertex v. Times increase strictly away from the root.
struct MetricShapeTimes {
  skeleton::Shape shape;
  std::vector<double> leaf_time;    // t_1..t_r (index i-1)
  std::vector<double> branch_time;  // u_{r+1}..u_{2r-1} (index v-r-1)

  int r() const { return shape.k; }

  double time(int v) const {
    if (v == 0) return 0.0;
    if (v <= shape.k) return leaf_time[v - 1];
    return branch_time[v - shape.k - 1];
  }

  double min_edge() const {
    double m = INFINITY;
    for (int v = 1; v < shape.num_vertices(); ++v) m = std::min(m, time(v) - time(shape.parent[v]));
    return m;
  }
};

inline void validate(const MetricShapeTimes& st) {
  const int r = st.r();
  if (r < 1 || st.shape.num_vertices() != 2 * r) throw InvalidShapeTimes("shape size does not match r");
  if (static_cast<int>(st.leaf_time.size()) != r || static_cast<int>(st.branch_time.size()) != r - 1) {
    throw InvalidShapeTimes("need r leaf times and r-1 branch times");
  }
  for (int v = 1; v < 2 * r; ++v) {
    if (!(st.time(v) > st.time(st.shape.parent[v]))) {
      throw InvalidShapeTimes("time of vertex " + std::to_string(v) + " does not exceed its parent's");
    }
  }
}

/// Brownian paths indexed by the leaves; paths i and j coincide on
/// [0, u_{i^j}] (the samples are shared) and move independently afterwards.
struct TreeIndexedBM {
  MetricShapeTimes times;
  double sigma0sq = 1.0;
  double h = 0.0;
  std::vector<PolylinePath<double>> paths;  // one per leaf
};

inline double default_step(const MetricShapeTimes& st) { return 1e-3 * st.min_edge(); }

/// Samples each edge separately on the grid {kh} inside the edge plus its
/// end time, so every branch time is a breakpoint of all paths through it.
template <class URBG>
TreeIndexedBM sample_tree_indexed_bm(const MetricShapeTimes& st, double sigma0sq, double h, int d, URBG& rng) {
  validate(st);
  if (!(h > 0.0)) throw InvalidShapeTimes("grid step must be positive");
  if (d < 1) throw InvalidShapeTimes("dimension must be >= 1");
  const int nv = st.shape.num_vertices();
  std::vector<PolylinePath<double>> edge(nv);  // excludes the start point
  std::vector<RealPoint> end_value(nv, RealPoint(d, 0.0));
  std::vector<char> done(nv, 0);
  done[0] = 1;
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int leaf = 1; leaf <= st.r(); ++leaf) {
    for (int v : st.shape.root_path(leaf)) {
      if (done[v]) continue;
      const double s = st.time(st.shape.parent[v]);
      const double e = st.time(v);
      RealPoint x = end_value[st.shape.parent[v]];
      double at = s;
      auto step_to = [&](double t) {
        const double sd = std::sqrt(sigma0sq * (t - at));
        for (auto& c : x) c += sd * gauss(rng);
        edge[v].times.push_back(t);
        edge[v].points.push_back(x);
        at = t;
      };
      for (auto k = static_cast<std::int64_t>(std::floor(s / h)) + 1; static_cast<double>(k) * h < e - kTimeTolerance;
           ++k) {
        if (static_cast<double>(k) * h > s + kTimeTolerance) step_to(static_cast<double>(k) * h);
      }
      step_to(e);
      end_value[v] = x;
      done[v] = 1;
    }
  }

  TreeIndexedBM out{st, sigma0sq, h, {}};
  for (int leaf = 1; leaf <= st.r(); ++leaf) {
    PolylinePath<double> w;
    w.times.push_back(0.0);
    w.points.push_back(RealPoint(d, 0.0));
    for (int v : st.shape.root_path(leaf)) {
      if (v == 0) continue;
      w.times.insert(w.times.end(), edge[v].times.begin(), edge[v].times.end());
      w.points.insert(w.points.end(), edge[v].points.begin(), edge[v].points.end());
    }
    out.paths.push_back(std::move(w));
  }
  return out;
}

}  // namespace brwskel::limitlaw
