#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "brwskel/core/random.hpp"
#include "brwskel/limitlaw/oracles.hpp"
#include "brwskel/limitlaw/tree_bm.hpp"
#include "brwskel/skeleton/branch_matrix.hpp"
#include "brwskel/treegen/gen_tree.hpp"

using namespace brwskel;
using namespace brwskel::limitlaw;

namespace {

// Exact E[#ordered pairs (a in T_k, b in T_k) with MRCA generation m] for
// binary-half, by enumerating every offspring assignment of generations
// 0..k-1. Each vertex makes one fair 0/2 choice.
Rational binary_pair_expectation(int k, int m) {
  // the tree is described level by level as parent indices
  Rational total(0);
  std::function<void(std::vector<std::vector<int>>, Rational)> grow = [&](std::vector<std::vector<int>> parents,
                                                                          Rational p) {
    const int g = static_cast<int>(parents.size());  // generations 1..g are built
    const int width = g == 0 ? 1 : static_cast<int>(parents.back().size());
    if (g == k) {
      // ancestor of x (at generation k) at generation j
      auto ancestor = [&](int x, int j) {
        for (int level = k; level > j; --level) x = parents[level - 1][x];
        return x;
      };
      int count = 0;
      for (int a = 0; a < width; ++a)
        for (int b = 0; b < width; ++b) {
          if (a == b) continue;
          int j = k;
          while (ancestor(a, j) != ancestor(b, j)) --j;
          count += j == m;
        }
      total += p * Rational(count);
      return;
    }
    if (width == 0) return;
    for (int mask = 0; mask < (1 << width); ++mask) {
      std::vector<int> next;
      for (int v = 0; v < width; ++v)
        if (mask >> v & 1) next.insert(next.end(), {v, v});
      auto np = parents;
      np.push_back(next);
      grow(np, p / Rational(1 << width));
    }
  };
  grow({}, Rational(1));
  return total;
}

}  // namespace

TEST(Oracles, SurvivalValues) {
  EXPECT_EQ(exact_survival_geometric(1), Rational(1, 2));
  EXPECT_EQ(exact_survival_geometric(100), Rational(1, 101));
  EXPECT_DOUBLE_EQ(survival_tail_gw(7, 2.0), 1.0 / 7);
  Rational s(0);
  for (int m = 1; m <= 100; ++m) {
    s = Rational(1) / (Rational(2) - s);
    EXPECT_EQ(Rational(1) - s, exact_survival_geometric(m));
  }
}

TEST(Oracles, PairMrcaBinaryByEnumeration) {
  for (int m = 0; m < 3; ++m) {
    EXPECT_EQ(binary_pair_expectation(3, m), Rational(1)) << m;
    EXPECT_DOUBLE_EQ(pair_mrca_expectation(treegen::kBinaryHalf, m, 3, 3), 1.0);
  }
  EXPECT_DOUBLE_EQ(pair_mrca_expectation(treegen::kGeometricHalf, 1, 3, 5), 2.0);
  EXPECT_DOUBLE_EQ(pair_mrca_expectation(treegen::kPoissonOne, 0, 3, 5), 1.0);
  EXPECT_THROW(pair_mrca_expectation(treegen::kPoissonOne, 3, 3, 5), RangeError);
}

TEST(Oracles, PairMrcaMonteCarlo) {
  // count pairs at generation 3 in trees grown to depth 3
  for (auto law : {treegen::kGeometricHalf, treegen::kPoissonOne}) {
    const int n = 200000;
    std::vector<double> s(3, 0.0), s2(3, 0.0);
    for (int r = 0; r < n; ++r) {
      Rng rng = replica_stream(3, r);
      auto t = treegen::grow_tree(law, 1'000'000, rng, 3);
      const auto b = t.level_begin(3), e = t.level_end(3);
      std::vector<double> c(3, 0.0);
      for (auto x = b; x < e; ++x)
        for (auto y = b; y < e; ++y)
          if (x != y) c[treegen::mrca_generation(t, x, y)] += 1;
      for (int m = 0; m < 3; ++m) {
        s[m] += c[m];
        s2[m] += c[m] * c[m];
      }
    }
    for (int m = 0; m < 3; ++m) {
      const double mean = s[m] / n;
      const double se = std::sqrt((s2[m] / n - mean * mean) / n);
      EXPECT_NEAR(mean, pair_mrca_expectation(law, m, 3, 3), 4 * se) << law.name() << " m=" << m;
    }
  }
}

TEST(Oracles, LifetimeTail) {
  EXPECT_DOUBLE_EQ(lifetime_tail_limit(2.0), 0.25);
  EXPECT_DOUBLE_EQ(lifetime_tail_limit(4.0), 0.125);
  EXPECT_NEAR(lifetime_tail_limit(1.0 + 1e-12), 0.5, 1e-11);
  EXPECT_THROW(lifetime_tail_limit(1.0), RangeError);
  EXPECT_THROW(lifetime_tail_limit(0.5), RangeError);
}

TEST(Oracles, BranchTimeMeasure) {
  EXPECT_DOUBLE_EQ(branch_time_limit_measure(1, 2, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(branch_time_limit_measure(1, 2, 1, 1e9), 0.0);
  EXPECT_DOUBLE_EQ(branch_time_limit_measure(1, 2, 0.25, 0.75), 0.5);
  EXPECT_THROW(branch_time_limit_measure(1, 2, 0.5, 0.25), RangeError);
}

namespace {
MetricShapeTimes one_leaf(double t) { return {skeleton::Shape{1, {-1, 0}}, {t}, {}}; }
MetricShapeTimes cherry(double t1, double t2, double u) {
  return {skeleton::Shape{2, {-1, 3, 3, 0}}, {t1, t2}, {u}};
}
}  // namespace

TEST(TreeBm, Validation) {
  EXPECT_THROW(validate(cherry(1.0, 2.0, 1.5)), InvalidShapeTimes);
  EXPECT_THROW(validate(cherry(1.0, 2.0, 0.0)), InvalidShapeTimes);
  EXPECT_NO_THROW(validate(cherry(1.0, 2.0, 0.5)));
  Rng rng(1);
  EXPECT_THROW(sample_tree_indexed_bm(cherry(1, 2, 0.5), 1.0, 0.0, 1, rng), InvalidShapeTimes);
}

TEST(TreeBm, SingleLeafVariance) {
  Rng rng(2);
  const int n = 20000;
  const double t = 1.7, sig = 0.8;
  std::vector<double> s(2, 0.0), s2(2, 0.0), s4(2, 0.0);
  for (int i = 0; i < n; ++i) {
    auto bm = sample_tree_indexed_bm(one_leaf(t), sig, 0.1, 2, rng);
    for (int c = 0; c < 2; ++c) {
      const double x = bm.paths[0].points.back()[c];
      s2[c] += x * x;
      s4[c] += x * x * x * x;
    }
  }
  for (int c = 0; c < 2; ++c) {
    const double var = s2[c] / n;
    EXPECT_NEAR(var, sig * t, 4 * std::sqrt((s4[c] / n - var * var) / n));
  }
}

TEST(TreeBm, SharedPrefixAndBranchTime) {
  Rng rng(3);
  const double h = 0.01;
  for (int i = 0; i < 200; ++i) {
    const double u = 0.123 + 0.001 * i;
    auto bm = sample_tree_indexed_bm(cherry(1.0, 1.5, u), 1.0, h, 1, rng);
    const auto& a = bm.paths[0];
    const auto& b = bm.paths[1];
    for (std::size_t k = 0; k < a.times.size() && a.times[k] <= u; ++k) {
      ASSERT_EQ(a.times[k], b.times[k]);
      ASSERT_EQ(a.points[k], b.points[k]);
    }
    const double tau = branch_time(a, b);
    EXPECT_GE(tau, u - 1e-12);
    EXPECT_LE(tau, u + h);
    EXPECT_DOUBLE_EQ(lifetime(a), 1.0);
  }
}

TEST(TreeBm, Covariance) {
  Rng rng(4);
  const int n = 100000;
  const double u = 0.4, t1 = 1.0, t2 = 0.7;
  double sxy = 0, sxy2 = 0;
  for (int i = 0; i < n; ++i) {
    auto bm = sample_tree_indexed_bm(cherry(t1, t2, u), 1.0, 0.25, 1, rng);
    const double xy = bm.paths[0].points.back()[0] * bm.paths[1].points.back()[0];
    sxy += xy;
    sxy2 += xy * xy;
  }
  const double cov = sxy / n;
  EXPECT_NEAR(cov, u, 4 * std::sqrt((sxy2 / n - cov * cov) / n));
}

TEST(TreeBm, BranchMatrixRecoversShapeTimes) {
  Rng rng(5);
  // ((1,(2,3)5)4)0 with times
  MetricShapeTimes st{skeleton::Shape{3, {-1, 4, 5, 5, 0, 4}}, {1.0, 2.0, 1.5}, {0.3, 0.9}};
  auto bm = sample_tree_indexed_bm(st, 1.0, default_step(st), 2, rng);
  auto tau = skeleton::branch_matrix(bm.paths);
  EXPECT_DOUBLE_EQ(tau(0, 1), 0.3);
  EXPECT_DOUBLE_EQ(tau(1, 2), 0.9);
  EXPECT_DOUBLE_EQ(tau(2, 2), 1.5);
  auto m = skeleton::build_shape(tau);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->shape, st.shape);
}
