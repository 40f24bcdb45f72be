#include <gtest/gtest.h>

#include <cmath>

#include "brwskel/core/random.hpp"
#include "brwskel/gst/gst.hpp"
#include "support.hpp"

using namespace brwskel;
using namespace brwskel::gst;

namespace {

DiscretePath line(std::vector<std::int64_t> xs) {
  DiscretePath w;
  for (auto x : xs) w.points.push_back({x});
  return w;
}

std::vector<PolylinePath<Rational>> kappa_one(const std::vector<DiscretePath>& ws) {
  std::vector<PolylinePath<Rational>> out;
  for (auto& w : ws) out.push_back(interpolate_kappa(w, 1));
  return out;
}

std::vector<DiscretePath> figure_two_paths() {
  return {line({0, 1, 2, 3}), line({0, 1, 2, 1, 0, -1, 0, 1}), line({0, 1, 2, 1, 0, -1, -2, -3, -4})};
}

// Random gst on a fixed shape: random rational lengths, 1..3 interior
// breakpoints per edge, continuous at junctions.
template <class URBG>
Gst<Rational> random_gst(const skeleton::Shape& s, URBG& rng, int d = 2) {
  auto h = testsupport::random_heights(s, rng);
  auto tau = testsupport::matrix_from_heights(s, h);
  Gst<Rational> g{s.k, skeleton::build_shape(tau), {}};
  g.edge.resize(s.parent.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> count(0, 3);
  std::vector<RealPoint> end_point(s.parent.size(), RealPoint(d, 0.0));
  for (int leaf = 1; leaf <= s.k; ++leaf) {
    for (int v : s.root_path(leaf)) {
      if (v == 0 || !g.edge[v].times.empty()) continue;
      auto& e = g.edge[v];
      const Rational len = g.tree->length[v];
      e.times.push_back(Rational(0));
      e.points.push_back(end_point[s.parent[v]]);
      const int inner = count(rng);
      for (int a = 1; a <= inner; ++a) {
        e.times.push_back(len * Rational(a, inner + 1));
        RealPoint p(d);
        for (auto& x : p) x = gauss(rng);
        e.points.push_back(p);
      }
      e.times.push_back(len);
      RealPoint p(d);
      for (auto& x : p) x = gauss(rng);
      e.points.push_back(p);
      end_point[v] = p;
    }
  }
  return g;
}

}  // namespace

TEST(Gst, DistancesOnIdenticalTrees) {
  auto g = gst_of_paths(kappa_one(figure_two_paths()));
  ASSERT_FALSE(g.is_sentinel());
  EXPECT_EQ(d1(g, g), 0.0);
  EXPECT_EQ(d2(g, g), 0.0);
  EXPECT_EQ(big_D(g, g), 0.0);
}

TEST(Gst, FigureTwoLengthsAreTauDifferences) {
  auto g = gst_of_paths(kappa_one(figure_two_paths()));
  ASSERT_FALSE(g.is_sentinel());
  EXPECT_EQ(skeleton::serialize(*g.tree), "((1:1,(2:2,3:3)5:3)4:2)0;");
  // edge above leaf 3 runs from height 5 to 8 along path 3
  const auto& e = g.edge[3];
  EXPECT_EQ(e.times, (std::vector<Rational>{0, 1, 2, 3}));
  EXPECT_EQ(e.points.front(), RealPoint{-1.0});
  EXPECT_EQ(e.points.back(), RealPoint{-4.0});
  EXPECT_EQ(g.edge[4].points.back(), RealPoint{2.0});
}

TEST(Gst, SingleStraightPath) {
  auto g = gst_of_paths(kappa_one({line({0, 1, 2, 3})}));
  ASSERT_FALSE(g.is_sentinel());
  EXPECT_EQ(g.tree->length[1], Rational(3));
  EXPECT_EQ(g.edge[1].points.size(), 4u);
  EXPECT_EQ(serialize(g), "(1:3)0; e1=[0@0;1@1;2@2;3@3]");
}

TEST(Gst, DegenerateInputIsSentinel) {
  auto g = gst_of_paths(kappa_one({line({0, 1, 2}), line({0, -1, -2})}));
  EXPECT_TRUE(g.is_sentinel());
  auto f = gst_of_paths(kappa_one(figure_two_paths()));
  EXPECT_EQ(big_D(f, g), 1.0);
  EXPECT_EQ(big_D(g, f), 1.0);
  EXPECT_EQ(big_D(g, g), 0.0);
  EXPECT_EQ(d1(f, g), kInf);
  EXPECT_EQ(serialize(g), "empty_2;");
}

TEST(Gst, D1OnLengthChangeAndShapeChange) {
  auto g = gst_of_paths(kappa_one(figure_two_paths()));
  auto h = g;
  h.tree->length[3] += Rational(1, 2);
  EXPECT_EQ(d1(g, h), 0.5);
  auto other = gst_of_paths(kappa_one({line({0, 1, 2, 1, 0, -1, 0, 1}), line({0, 1, 2, 3}), line({0, 1, 2, 1, 0, -1, -2, -3, -4})}));
  EXPECT_EQ(d1(g, other), kInf);
  EXPECT_EQ(d2(g, other), kInf);
  EXPECT_EQ(big_D(g, other), 1.0);
  EXPECT_THROW(upsilon(g, other, EdgePoint<Rational>{1, Rational(0)}), ShapeMismatch);
}

TEST(Gst, UpsilonPreservesRatios) {
  auto g = gst_of_paths(kappa_one(figure_two_paths()));
  auto h = g;
  h.tree->length[5] = Rational(9);
  EXPECT_EQ(upsilon(g, g, EdgePoint<Rational>{5, Rational(1)}).offset, Rational(1));
  EXPECT_EQ(upsilon(g, h, EdgePoint<Rational>{5, Rational(3, 2)}).offset, Rational(9, 2));
  EXPECT_EQ(upsilon(g, h, EdgePoint<Rational>{5, Rational(3)}).offset, Rational(9));
  EXPECT_EQ(upsilon(g, h, EdgePoint<Rational>{5, Rational(0)}).offset, Rational(0));
}

TEST(Gst, RescaleExamples) {
  auto g = gst_of_paths(kappa_one({line({0, 2, 4, 6, 8, 6, 4, 2, 2})}));
  EXPECT_EQ(big_D(rescale(g, 1), g), 0.0);
  auto r = rescale(g, 4);
  EXPECT_EQ(g.tree->length[1], Rational(7));
  EXPECT_EQ(r.tree->length[1], Rational(7, 4));
  EXPECT_EQ(r.edge[1].points[1], RealPoint{1.0});
  EXPECT_EQ(r.edge[1].times[4], Rational(1));
}

TEST(Gst, RescalingIdentityIsExact) {
  Rng rng(1);
  int tested = 0;
  while (tested < 300) {
    auto fam = testsupport::random_path_family(2 + tested % 4, rng);
    auto k1 = kappa_one(fam);
    auto base = gst_of_paths(k1);
    if (base.is_sentinel()) continue;
    ++tested;
    for (std::int64_t n : {1, 2, 7, 100}) {
      std::vector<PolylinePath<Rational>> scaled;
      for (auto& w : k1) scaled.push_back(rescale_path(w, n));
      EXPECT_EQ(big_D(gst_of_paths(scaled), rescale(base, n)), 0.0);
    }
  }
}

TEST(Gst, MetricAxiomsOnSharedShape) {
  Rng rng(2);
  for (int batch = 0; batch < 10; ++batch) {
    auto s = testsupport::random_shape(4, rng);
    std::vector<Gst<Rational>> corpus;
    for (int i = 0; i < 100; ++i) corpus.push_back(random_gst(s, rng));
    for (std::size_t a = 0; a < corpus.size(); ++a) {
      EXPECT_EQ(big_D(corpus[a], corpus[a]), 0.0);
      for (std::size_t b = a + 1; b < std::min(corpus.size(), a + 6); ++b) {
        const double ab = big_D(corpus[a], corpus[b]);
        EXPECT_EQ(ab, big_D(corpus[b], corpus[a]));
        EXPECT_GT(ab, 0.0);
        for (std::size_t c = b + 1; c < std::min(corpus.size(), a + 6); ++c) {
          EXPECT_LE(big_D(corpus[a], corpus[c]), ab + big_D(corpus[b], corpus[c]) + 1e-12);
        }
      }
    }
  }
}

TEST(Gst, ZeroDistanceMeansEqualLengthsAndBreakpoints) {
  Rng rng(3);
  auto s = testsupport::random_shape(3, rng);
  auto g = random_gst(s, rng);
  auto h = g;
  // add a redundant breakpoint on one edge: same curve, different representation
  auto& e = h.edge[1];
  const Rational mid = (e.times[0] + e.times[1]) / Rational(2);
  auto p = e(mid);
  e.times.insert(e.times.begin() + 1, mid);
  e.points.insert(e.points.begin() + 1, p);
  EXPECT_EQ(big_D(g, h), 0.0);
  EXPECT_EQ(g.tree->length, h.tree->length);
  for (int v = 1; v < s.num_vertices(); ++v)
    for (std::size_t a = 0; a < g.edge[v].times.size(); ++a)
      EXPECT_EQ(g.edge[v].points[a], h.edge[v](g.edge[v].times[a]));
}

TEST(Gst, ContinuityUnderSmallPerturbations) {
  Rng rng(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int tested = 0;
  while (tested < 500) {
    auto fam = testsupport::random_path_family(3, rng);
    auto k1 = kappa_one(fam);
    auto g = gst_of_paths(k1);
    if (g.is_sentinel()) continue;
    ++tested;
    const double eta = 1e-3;
    // value perturbation as a function of (time, value) keeps shared prefixes shared
    auto perturbed = k1;
    for (auto& w : perturbed)
      for (std::size_t a = 0; a < w.times.size(); ++a) {
        const double t = to_double(w.times[a]);
        w.points[a][0] += eta * std::sin(12.9898 * t + 78.233 * w.points[a][0]);
      }
    auto h = gst_of_paths(perturbed);
    ASSERT_FALSE(h.is_sentinel());
    // then move each edge length by at most eps, stretching offsets
    const Rational eps(1, 1000);
    for (int v = 1; v < h.tree->shape.num_vertices(); ++v) {
      const Rational old = h.tree->length[v];
      const Rational now = old + eps * Rational(static_cast<std::int64_t>(std::floor(unit(rng) * 999)), 1000);
      h.tree->length[v] = now;
      for (auto& t : h.edge[v].times) t = t * now / old;
    }
    EXPECT_LE(big_D(g, h), 3 * eta + 2 * to_double(eps) + 1e-12);
  }
}
