#include <gtest/gtest.h>

#include <set>

#include "brwskel/core/random.hpp"
#include "brwskel/skeleton/branch_matrix.hpp"
#include "brwskel/skeleton/shape.hpp"
#include "brwskel/skeleton/subtree.hpp"
#include "brwskel/treegen/gen_tree.hpp"
#include "brwskel/treegen/spatial_tree.hpp"
#include "support.hpp"

using namespace brwskel;
using namespace brwskel::skeleton;
using brwskel::treegen::VertexId;
using brwskel::treegen::kBinaryHalf;
using brwskel::treegen::kGeometricHalf;

namespace {

BranchMatrix<std::int64_t> figure_two() { return {{3, 2, 2}, {2, 7, 5}, {2, 5, 8}}; }

// Distance between [i,u] and [j,v] by summing edge lengths in the shape.
Rational path_sum_distance(const MetricShape<Rational>& m, int i, Rational u, int j, Rational v) {
  // Locate each point as (vertex below it, height).
  auto locate = [&](int leaf, const Rational& h) {
    int below = leaf;
    for (int x = leaf; x > 0; x = m.shape.parent[x]) {
      Rational top(0);
      for (int y = m.shape.parent[x]; y > 0; y = m.shape.parent[y]) top += m.length[y];
      if (top <= h) {
        below = x;
        break;
      }
    }
    return below;
  };
  const int a = locate(i + 1, u);
  const int b = locate(j + 1, v);
  auto depth_sum = [&](int x) {
    Rational s(0);
    for (; x > 0; x = m.shape.parent[x]) s += m.length[x];
    return s;
  };
  if (a == b) return u > v ? u - v : v - u;
  const int c = testsupport::lca(m.shape, a, b);
  // When the meeting vertex is one of the edge-bottoms, the other point
  // hangs below it on the same root path.
  const Rational hc = (c == a || c == b) ? std::min(u, v) : depth_sum(c);
  return (u - hc) + (v - hc);
}

}  // namespace

TEST(Nondegenerate, Examples) {
  EXPECT_TRUE(check_nondegenerate(BranchMatrix<std::int64_t>{{3, 2}, {2, 7}}));
  auto pair = check_nondegenerate(BranchMatrix<std::int64_t>{{3, 0}, {0, 7}});
  EXPECT_EQ(pair.rule, Verdict::Rule::PairBoundary);
  EXPECT_EQ(pair.i, 0u);
  EXPECT_EQ(pair.j, 1u);
  auto triple = check_nondegenerate(BranchMatrix<std::int64_t>{{3, 2, 2}, {2, 4, 2}, {2, 2, 5}});
  EXPECT_EQ(triple.rule, Verdict::Rule::TripleTie);
  EXPECT_NE(triple.describe().find("(1,2,3)"), std::string::npos);
  EXPECT_EQ(check_nondegenerate(BranchMatrix<std::int64_t>{{2, 2}, {2, 7}}).rule, Verdict::Rule::PairBoundary);
  EXPECT_EQ(check_nondegenerate(BranchMatrix<std::int64_t>{{0}}).rule, Verdict::Rule::ZeroLifetime);
}

TEST(Validate, RejectsBrokenMatrices) {
  EXPECT_THROW(validate(BranchMatrix<std::int64_t>{{3, 2}, {1, 7}}), InvalidMatrix);
  EXPECT_THROW(validate(BranchMatrix<std::int64_t>{{3, 4}, {4, 7}}), InvalidMatrix);
  EXPECT_THROW(validate(BranchMatrix<std::int64_t>{{5, 1, 3}, {1, 5, 3}, {3, 3, 5}}), InvalidMatrix);
  EXPECT_THROW(build_shape(BranchMatrix<std::int64_t>{{3, 4}, {4, 7}}), InvalidMatrix);
  EXPECT_NO_THROW(validate(figure_two()));
}

TEST(BuildShape, FigureTwo) {
  auto m = build_shape(figure_two());
  ASSERT_TRUE(m);
  EXPECT_EQ(m->shape.parent, (std::vector<int>{-1, 4, 5, 5, 0, 4}));
  EXPECT_EQ(m->length, (std::vector<std::int64_t>{0, 1, 2, 3, 2, 3}));
  EXPECT_EQ(serialize(*m), "((1:1,(2:2,3:3)5:3)4:2)0;");
  EXPECT_EQ(serialize(m->shape), "((1,(2,3)5)4)0;");
  EXPECT_EQ(m->representative[4], std::make_pair(0, 1));
  EXPECT_EQ(m->representative[5], std::make_pair(1, 2));
}

TEST(BuildShape, SingleLeaf) {
  auto m = build_shape(BranchMatrix<std::int64_t>{{5}});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->shape.parent, (std::vector<int>{-1, 0}));
  EXPECT_EQ(m->length[1], 5);
  EXPECT_EQ(serialize(*m), "(1:5)0;");
  EXPECT_FALSE(build_shape(BranchMatrix<std::int64_t>{{0}}));
}

TEST(BuildShape, DegenerateGivesSentinel) {
  EXPECT_FALSE(build_shape(BranchMatrix<std::int64_t>{{3, 2, 2}, {2, 4, 2}, {2, 2, 5}}));
  EXPECT_FALSE(build_shape(BranchMatrix<std::int64_t>{{3, 0}, {0, 7}}));
}

TEST(BuildShape, RecoversRandomShapes) {
  Rng rng(1);
  for (int r = 0; r < 2000; ++r) {
    const int k = 2 + r % 7;
    auto s = testsupport::random_shape(k, rng);
    auto h = testsupport::random_heights(s, rng);
    auto tau = testsupport::matrix_from_heights(s, h);
    auto m = build_shape(tau);
    ASSERT_TRUE(m);
    EXPECT_EQ(m->shape, s);
    int branch = 0;
    auto ch = m->shape.children();
    for (int v = k + 1; v < 2 * k; ++v) branch += ch[v].size() == 2;
    EXPECT_EQ(branch, k - 1);
    EXPECT_EQ(m->shape.num_vertices() - 1, 2 * k - 1);
    for (int v = 1; v < 2 * k; ++v) {
      EXPECT_GT(m->length[v], Rational(0));
      EXPECT_EQ(m->height[v], h[v]);
    }
  }
}

TEST(TreeMetric, Examples) {
  auto tau = figure_two();
  EXPECT_EQ(tree_metric(tau, 1, std::int64_t(7), 2, std::int64_t(8)), 5);
  EXPECT_EQ(tree_metric(tau, 0, std::int64_t(3), 0, std::int64_t(1)), 2);
  EXPECT_EQ(tree_metric(tau, 2, std::int64_t(4), 2, std::int64_t(4)), 0);
  EXPECT_THROW(tree_metric(tau, 0, std::int64_t(4), 1, std::int64_t(1)), OutOfRange);
}

TEST(TreeMetric, EqualsPathSumOnShapes) {
  Rng rng(2);
  for (int r = 0; r < 500; ++r) {
    const int k = 2 + r % 6;
    auto s = testsupport::random_shape(k, rng);
    auto tau = testsupport::matrix_from_heights(s, testsupport::random_heights(s, rng));
    auto m = build_shape(tau);
    ASSERT_TRUE(m);
    // every vertex as a point [i,height] with i the smallest leaf below it,
    // plus random interior points
    std::vector<std::pair<int, Rational>> pts{{0, Rational(0)}};
    for (int v = 1; v < 2 * k; ++v) {
      int leaf = k + 1;
      for (int l = 1; l <= k; ++l) {
        for (int x = l; x > 0; x = m->shape.parent[x])
          if (x == v) leaf = std::min(leaf, l);
      }
      pts.emplace_back(leaf - 1, m->height[v]);
      const Rational top = m->height[m->shape.parent[v]];
      pts.emplace_back(leaf - 1, top + m->length[v] * Rational(std::uniform_int_distribution<int>(1, 9)(rng), 10));
    }
    for (auto& [i, u] : pts)
      for (auto& [j, v] : pts) {
        const Rational d = path_sum_distance(*m, i, u, j, v);
        ASSERT_EQ(tree_metric(tau, i, u, j, v), d);
        ASSERT_EQ(path_length_distance(*m, i, u, j, v), d);
      }
  }
}

TEST(PathLengthDistance, RejectsOutOfRange) {
  auto m = build_shape(figure_two());
  ASSERT_TRUE(m);
  EXPECT_THROW(path_length_distance(*m, 3, std::int64_t(1), 0, std::int64_t(1)), OutOfRange);
  EXPECT_THROW(path_length_distance(*m, 0, std::int64_t(4), 0, std::int64_t(1)), OutOfRange);
  EXPECT_EQ(path_length_distance(*m, 1, std::int64_t(7), 2, std::int64_t(8)), 5);
}

TEST(TreeMetric, SymmetryAndTriangle) {
  Rng rng(3);
  int checked = 0;
  while (checked < 10000) {
    auto s = testsupport::random_shape(5, rng);
    auto tau = testsupport::matrix_from_heights(s, testsupport::random_heights(s, rng));
    auto point = [&] {
      const int i = std::uniform_int_distribution<int>(0, 4)(rng);
      return std::make_pair(i, tau(i, i) * Rational(std::uniform_int_distribution<int>(0, 12)(rng), 12));
    };
    for (int t = 0; t < 100; ++t, ++checked) {
      auto [i, u] = point();
      auto [j, v] = point();
      auto [l, w] = point();
      ASSERT_EQ(tree_metric(tau, i, u, j, v), tree_metric(tau, j, v, i, u));
      ASSERT_LE(tree_metric(tau, i, u, l, w), tree_metric(tau, i, u, j, v) + tree_metric(tau, j, v, l, w));
    }
  }
}

TEST(Stability, PerturbationWithinRadiusKeepsShape) {
  Rng rng(4);
  for (int r = 0; r < 10000; ++r) {
    const int k = 2 + r % 6;
    auto s = testsupport::random_shape(k, rng);
    auto h = testsupport::random_heights(s, rng);
    auto tau = testsupport::matrix_from_heights(s, h);
    const Rational delta = stability_radius(tau);
    ASSERT_GT(delta, Rational(0));
    std::uniform_int_distribution<int> jitter(-999, 999);
    auto h2 = h;
    for (std::size_t v = 1; v < h2.size(); ++v) h2[v] += delta * Rational(jitter(rng), 1000);
    auto tau2 = testsupport::matrix_from_heights(s, h2);
    ASSERT_TRUE(check_nondegenerate(tau2));
    auto m = build_shape(tau2);
    ASSERT_TRUE(m);
    ASSERT_EQ(m->shape, s);
  }
}

TEST(Stability, MonotoneTransformKeepsShape) {
  Rng rng(5);
  for (int r = 0; r < 1000; ++r) {
    auto s = testsupport::random_shape(6, rng);
    auto h = testsupport::random_heights(s, rng);
    auto h2 = h;
    for (auto& x : h2) x = x * x * x + x;
    EXPECT_EQ(build_shape(testsupport::matrix_from_heights(s, h2))->shape, s);
  }
}

TEST(ShapeCensus, CountsAndEnumeration) {
  const std::vector<std::uint64_t> expected{1, 1, 3, 15, 105, 945, 10395, 135135};
  for (int k = 1; k <= 8; ++k) {
    EXPECT_EQ(count_shapes(k), expected[k - 1]);
    if (k <= 7) {
      auto all = enumerate_shapes(k);
      EXPECT_EQ(all.size(), expected[k - 1]);
      std::set<std::string> texts;
      for (auto& s : all) texts.insert(serialize(s));
      EXPECT_EQ(texts.size(), all.size());
    }
  }
  EXPECT_THROW(enumerate_shapes(9), KTooLarge);
}

TEST(ShapeCensus, EnumeratedShapesAreCanonicalFixedPoints) {
  for (int k = 2; k <= 6; ++k) {
    for (const auto& s : enumerate_shapes(k)) {
      EXPECT_EQ(canonicalize(s), s);
      // heights = number of edges from the root
      std::vector<Rational> h(s.parent.size(), Rational(0));
      for (int v = 1; v < s.num_vertices(); ++v) h[v] = Rational(static_cast<std::int64_t>(s.root_path(v).size()) - 1);
      auto m = build_shape(testsupport::matrix_from_heights(s, h));
      ASSERT_TRUE(m);
      EXPECT_EQ(m->shape, s);
    }
  }
}

TEST(ShapeCensus, ThreeShapesForThreeLeaves) {
  std::set<std::string> texts;
  for (auto& s : enumerate_shapes(3)) texts.insert(serialize(s));
  EXPECT_EQ(texts, (std::set<std::string>{"((1,(2,3)5)4)0;", "(((1,2)5,3)4)0;", "(((1,3)5,2)4)0;"}));
}

TEST(Genealogy, MatrixBasics) {
  Rng rng(1);
  auto t = treegen::grow_tree(kBinaryHalf, 10, rng);
  auto constant = genealogical_branch_matrix(t, {0, 0, 0});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(constant(i, j), 0);
}

namespace {
struct Scripted {
  mutable std::vector<std::uint32_t> counts;
  mutable std::size_t at = 0;
  template <class URBG>
  std::uint32_t operator()(URBG&) const {
    return at < counts.size() ? counts[at++] : 0;
  }
};
}  // namespace

TEST(Genealogy, SiblingsAndStrictInequality) {
  Rng rng(1);
  // 0 -> {1,2}, 1 -> {3}, 2 -> {4}
  auto base = treegen::grow_tree(Scripted{{2, 1, 1, 0, 0}}, 10, rng);
  auto hat = genealogical_branch_matrix(base, {1, 2});
  EXPECT_EQ(hat(0, 1), 0);
  // both first steps +1, then +1 and -1: paths share one step past the MRCA
  treegen::SpatialTree t(std::move(base), 1, 1, {0, 1, 1, 2, 0});
  auto tau_hat = genealogical_branch_matrix(t, {3, 4});
  std::vector<DiscretePath> paths{treegen::path_to_root(t, 3), treegen::path_to_root(t, 4)};
  auto tau = branch_matrix(paths);
  EXPECT_EQ(tau_hat(0, 1), 0);
  EXPECT_EQ(tau(0, 1), 2);
  std::vector<PolylinePath<Rational>> k1{interpolate_kappa(paths[0], 1), interpolate_kappa(paths[1], 1)};
  EXPECT_EQ(branch_matrix(k1)(0, 1), Rational(1));
}

TEST(Genealogy, HatTauBelowPathTau) {
  for (int r = 0; r < 200; ++r) {
    Rng rng = replica_stream(77, r);
    auto c = treegen::grow_conditioned(kGeometricHalf, 8, 1'000'000, rng, 16);
    auto t = treegen::attach_displacements(std::move(c.tree), 1, 1, rng);
    auto vs = treegen::uniform_vertices(t.base(), 6, rng);
    auto hat = genealogical_branch_matrix(t, vs);
    std::vector<PolylinePath<Rational>> ws;
    std::vector<DiscretePath> steps;
    for (auto v : vs) {
      steps.push_back(treegen::path_to_root(t, v));
      ws.push_back(interpolate_kappa(steps.back(), 1));
    }
    auto tau = branch_matrix(ws);
    auto step_tau = branch_matrix(steps);
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = 0; j < vs.size(); ++j) {
        EXPECT_LE(Rational(hat(i, j)), tau(i, j));
        EXPECT_LE(tau(i, j), Rational(step_tau(i, j)));
      }
  }
}

TEST(MinimalSubtree, SingleVertex) {
  Rng rng(3);
  auto base = treegen::grow_tree(Scripted{{1, 1, 1, 0}}, 10, rng);
  auto sub = minimal_subtree(base, {3});
  EXPECT_EQ(sub.vertices, (std::vector<VertexId>{0, 1, 2, 3}));
  EXPECT_EQ(sub.kept, (std::vector<VertexId>{0, 3}));
  EXPECT_EQ(sub.kept_length.back(), 3);
  auto m = reduced_shape(sub);
  ASSERT_TRUE(m);
  EXPECT_EQ(serialize(*m), "(1:3)0;");

  auto at_root = minimal_subtree(base, {0});
  EXPECT_EQ(at_root.kept, (std::vector<VertexId>{0}));
  EXPECT_FALSE(reduced_shape(at_root));
}

TEST(MinimalSubtree, RootMrcaIsDegenerate) {
  Rng rng(3);
  // 0 -> {1,2}; 1 -> {3}; 2 -> {4}; 4 -> {5}
  auto base = treegen::grow_tree(Scripted{{2, 1, 1, 0, 1, 0}}, 10, rng);
  auto sub = minimal_subtree(base, {3, 5});
  EXPECT_FALSE(reduced_shape(sub));
  EXPECT_FALSE(build_shape(genealogical_branch_matrix(base, {3, 5})));
}

TEST(MinimalSubtree, AgreesWithBuildShapeAndErasureOrder) {
  int nondegenerate = 0;
  for (int r = 0; r < 400; ++r) {
    Rng rng = replica_stream(88, r);
    auto c = treegen::grow_conditioned(kGeometricHalf, 10, 2'000'000, rng, 30);
    const auto& t = c.tree;
    const int k = 2 + r % 4;
    auto vs = treegen::uniform_vertices(t, k, rng);
    auto sub = minimal_subtree(t, vs);
    EXPECT_EQ(sub.reduced_length_sum(), static_cast<std::int64_t>(sub.edge_count()));
    for (int o = 0; o < 3; ++o) {
      Rng order(1000 + o);
      auto sub2 = minimal_subtree(t, vs, &order);
      EXPECT_EQ(sub2.kept, sub.kept);
      EXPECT_EQ(sub2.kept_parent, sub.kept_parent);
      EXPECT_EQ(sub2.kept_length, sub.kept_length);
    }
    auto from_sub = reduced_shape(sub);
    auto from_tau = build_shape(genealogical_branch_matrix(t, vs));
    ASSERT_EQ(from_sub.has_value(), from_tau.has_value());
    if (from_sub) {
      ++nondegenerate;
      EXPECT_EQ(*from_sub, *from_tau);
      EXPECT_EQ(from_sub->height, from_tau->height);
    }
  }
  EXPECT_GT(nondegenerate, 50);
}

TEST(Projection, BasicCasesAndNesting) {
  for (int r = 0; r < 100; ++r) {
    Rng rng = replica_stream(99, r);
    auto c = treegen::grow_conditioned(kGeometricHalf, 10, 2'000'000, rng, 40);
    auto t = treegen::attach_displacements(std::move(c.tree), 2, 1, rng);
    auto vs = treegen::uniform_vertices(t.base(), 16, rng);
    std::uint32_t prev_max = UINT32_MAX;
    for (int k : {1, 2, 4, 8, 16}) {
      std::vector<VertexId> prefix(vs.begin(), vs.begin() + k);
      auto sub = minimal_subtree(t.base(), prefix);
      auto p = skeleton_projection(t, sub);
      for (VertexId v : sub.vertices) {
        EXPECT_EQ(p.ancestor[v], v);
        EXPECT_EQ(p.graph_distance[v], 0u);
      }
      for (VertexId v : sub.vertices) {
        const auto& base = t.base();
        for (VertexId ch = base.first_child(v); ch < base.first_child(v) + base.child_count(v); ++ch) {
          if (!std::binary_search(sub.vertices.begin(), sub.vertices.end(), ch)) EXPECT_EQ(p.graph_distance[ch], 1u);
        }
      }
      EXPECT_LE(p.max_graph, prev_max);
      prev_max = p.max_graph;
    }
  }
}
