#pragma once

// Exhaustive enumeration of small spread-out lattice trees containing the
// origin, weighted by W(T) = z^|T| prod_e D(e) with |T| the number of bonds
// and D uniform on [-L,L]^d \ {o}. No criticality is implied: z is free.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/core/time.hpp"
#include "brwskel/treegen/spatial_tree.hpp"

namespace brwskel::lattice {

using Site = std::vector<int>;
using Bond = std::pair<Site, Site>;  // first < second

inline Bond make_bond(Site a, Site b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

/// A finite acyclic connected bond set containing o. Bonds are kept sorted,
/// which makes the bond list a canonical key.
struct LatticeTree {
  int d = 1;
  std::vector<Bond> bonds;

  std::size_t edge_count() const { return bonds.size(); }

  /// Sorted vertex list (always contains o).
  std::vector<Site> sites() const {
    std::set<Site> s{Site(d, 0)};
    for (const auto& [a, b] : bonds) {
      s.insert(a);
      s.insert(b);
    }
    return {s.begin(), s.end()};
  }

  /// Graph distance from o to every site.
  std::map<Site, int> generations() const {
    std::map<Site, std::vector<Site>> adj;
    for (const auto& [a, b] : bonds) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::map<Site, int> gen{{Site(d, 0), 0}};
    std::queue<Site> q;
    q.push(Site(d, 0));
    while (!q.empty()) {
      Site x = q.front();
      q.pop();
      for (const auto& y : adj[x]) {
        if (gen.emplace(y, gen[x] + 1).second) q.push(y);
      }
    }
    return gen;
  }

  friend bool operator==(const LatticeTree&, const LatticeTree&) = default;
  friend auto operator<=>(const LatticeTree&, const LatticeTree&) = default;
};

inline constexpr std::size_t kMaxEnumeratedTrees = 1'000'000;

/// All lattice trees containing o with at most max_edges bonds, ordered by
/// edge count and then by bond list. Level e+1 is obtained from level e by
/// attaching a new site to an existing one.
inline std::vector<LatticeTree> enumerate_trees(int d, int L, int max_edges,
                                                std::size_t guard = kMaxEnumeratedTrees) {
  const auto nsteps = treegen::step_count(d, L);
  std::vector<Site> steps(nsteps, Site(d));
  for (std::uint64_t i = 0; i < nsteps; ++i) {
    std::vector<std::int32_t> s(d);
    treegen::decode_step(i, d, L, s.data());
    steps[i].assign(s.begin(), s.end());
  }
  std::vector<LatticeTree> all{LatticeTree{d, {}}};
  std::vector<LatticeTree> level = all;
  for (int e = 1; e <= max_edges; ++e) {
    std::set<LatticeTree> next;
    for (const auto& t : level) {
      const auto sites = t.sites();
      for (const auto& x : sites) {
        for (const auto& s : steps) {
          Site y(d);
          for (int c = 0; c < d; ++c) y[c] = x[c] + s[c];
          if (std::binary_search(sites.begin(), sites.end(), y)) continue;
          LatticeTree u = t;
          u.bonds.push_back(make_bond(x, y));
          std::sort(u.bonds.begin(), u.bonds.end());
          next.insert(std::move(u));
          if (all.size() + next.size() > guard) {
            throw EnumerationTooLarge("more than " + std::to_string(guard) + " lattice trees");
          }
        }
      }
    }
    level.assign(next.begin(), next.end());
    all.insert(all.end(), level.begin(), level.end());
  }
  return all;
}

namespace detail {
inline void check_bonds(const LatticeTree& t, int d, int L) {
  for (const auto& [a, b] : t.bonds) {
    if (static_cast<int>(a.size()) != d || static_cast<int>(b.size()) != d) throw InadmissibleBond("bond dimension mismatch");
    int norm = 0;
    for (int c = 0; c < d; ++c) norm = std::max(norm, std::abs(a[c] - b[c]));
    if (norm < 1 || norm > L) throw InadmissibleBond("bond length outside [1, L]");
  }
}
}  // namespace detail

/// W(T) = z^|T| D^|T| in exact arithmetic.
inline Rational weight_exact(const LatticeTree& t, Rational z, int d, int L) {
  detail::check_bonds(t, d, L);
  const Rational per_bond = z / Rational(static_cast<std::int64_t>(treegen::step_count(d, L)));
  Rational w(1);
  for (std::size_t e = 0; e < t.edge_count(); ++e) w *= per_bond;
  return w;
}

inline double weight(const LatticeTree& t, double z, int d, int L) {
  detail::check_bonds(t, d, L);
  return std::pow(z / static_cast<double>(treegen::step_count(d, L)), static_cast<double>(t.edge_count()));
}

/// Sum of W over trees with at most max_edges bonds.
inline Rational truncated_partition_exact(int d, int L, Rational z, int max_edges) {
  Rational s(0);
  for (const auto& t : enumerate_trees(d, L, max_edges)) s += weight_exact(t, z, d, L);
  return s;
}

inline double truncated_partition(int d, int L, double z, int max_edges) {
  double s = 0.0;
  for (const auto& t : enumerate_trees(d, L, max_edges)) s += weight(t, z, d, L);
  return s;
}

/// W-weighted mean number of sites at tree distance m from o.
inline double truncated_generation_mean(int d, int L, double z, int max_edges, int m) {
  double num = 0.0, den = 0.0;
  for (const auto& t : enumerate_trees(d, L, max_edges)) {
    const double w = weight(t, z, d, L);
    int count = 0;
    for (const auto& [site, g] : t.generations()) count += g == m;
    num += w * count;
    den += w;
  }
  return num / den;
}

/// Law of (generation, site) when T is drawn proportional to W and then a
/// uniform site of T is chosen.
using VertexLaw = std::map<std::pair<int, Site>, Rational>;

inline VertexLaw truncated_uniform_vertex_law(int d, int L, Rational z, int max_edges) {
  const auto trees = enumerate_trees(d, L, max_edges);
  Rational total(0);
  for (const auto& t : trees) total += weight_exact(t, z, d, L);
  VertexLaw law;
  for (const auto& t : trees) {
    const auto gen = t.generations();
    const Rational share = weight_exact(t, z, d, L) / total / Rational(static_cast<std::int64_t>(gen.size()));
    for (const auto& [site, g] : gen) law[{g, site}] += share;
  }
  return law;
}

/// Draws trees proportional to W by inverse CDF, then a uniform site.
class EnsembleSampler {
 public:
  EnsembleSampler(std::vector<LatticeTree> trees, double z, int d, int L) : trees_(std::move(trees)) {
    double acc = 0.0;
    for (const auto& t : trees_) {
      acc += weight(t, z, d, L);
      cdf_.push_back(acc);
    }
    for (const auto& t : trees_) {
      auto g = t.generations();
      sites_.emplace_back(g.begin(), g.end());
    }
  }

  template <class URBG>
  std::size_t draw_tree(URBG& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

  template <class URBG>
  std::pair<int, Site> draw_vertex(URBG& rng) const {
    const auto& s = sites_[draw_tree(rng)];
    const auto& [site, g] = s[std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng)];
    return {g, site};
  }

  const std::vector<LatticeTree>& trees() const { return trees_; }

 private:
  std::vector<LatticeTree> trees_;
  std::vector<double> cdf_;
  std::vector<std::vector<std::pair<Site, int>>> sites_;
};

/// Line format: a header "# lattice-trees d=<d> L=<L> max_edges=<m> count=<n>",
/// then one tree per line as space-separated bonds "x1,..,xd:y1,..,yd" in
/// sorted order; the single-site tree {o} is written as "o".
inline void write_trees(std::ostream& os, const std::vector<LatticeTree>& trees, int d, int L, int max_edges) {
  os << "# lattice-trees d=" << d << " L=" << L << " max_edges=" << max_edges << " count=" << trees.size() << '\n';
  auto site = [&](const Site& s) {
    for (std::size_t c = 0; c < s.size(); ++c) os << (c ? "," : "") << s[c];
  };
  for (const auto& t : trees) {
    if (t.bonds.empty()) os << 'o';
    for (std::size_t e = 0; e < t.bonds.size(); ++e) {
      if (e) os << ' ';
      site(t.bonds[e].first);
      os << ':';
      site(t.bonds[e].second);
    }
    os << '\n';
  }
}

inline std::vector<LatticeTree> read_trees(std::istream& is, int d) {
  std::vector<LatticeTree> out;
  std::string line;
  auto parse_site = [&](const std::string& s) {
    Site x;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) x.push_back(std::stoi(tok));
    if (static_cast<int>(x.size()) != d) throw InadmissibleBond("site '" + s + "' has wrong dimension");
    return x;
  };
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    LatticeTree t{d, {}};
    if (line != "o") {
      std::stringstream ss(line);
      std::string bond;
      while (ss >> bond) {
        const auto colon = bond.find(':');
        if (colon == std::string::npos) throw InadmissibleBond("malformed bond '" + bond + "'");
        t.bonds.push_back(make_bond(parse_site(bond.substr(0, colon)), parse_site(bond.substr(colon + 1))));
      }
      std::sort(t.bonds.begin(), t.bonds.end());
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace brwskel::lattice
