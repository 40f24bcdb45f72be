#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "brwskel/core/error.hpp"
#include "brwskel/harness/config.hpp"

namespace brwskel::harness {

inline constexpr int kRecordSchemaVersion = 1;

/// One cell of a result grid. Unused coordinates stay empty.
struct Estimate {
  std::string statistic;
  std::optional<std::int64_t> n, K, m;
  std::optional<double> delta, epsilon, t;
  double estimate = NAN;
  double se = NAN;
  std::optional<double> oracle;
  std::uint64_t replicas = 0;
  std::string note;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

struct TestOutcome {
  std::string name;
  double statistic = NAN;
  double p_value = NAN;
  bool passed = false;
  std::string detail;

  friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

struct KsEntry {
  std::string statistic;
  std::optional<std::int64_t> n;
  double distance = NAN;
  double critical = NAN;
  std::uint64_t replicas = 0;

  friend bool operator==(const KsEntry&, const KsEntry&) = default;
};

struct RunMetadata {
  double wall_clock_seconds = 0.0;
  int threads = 1;
  std::uint64_t accepted = 0;
  std::uint64_t rejections = 0;  // conditioning rejections
  std::uint64_t redraws = 0;     // budget redraws
  double acceptance_rate = 1.0;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct ExperimentRecord {
  int schema_version = kRecordSchemaVersion;
  std::string experiment;
  std::map<std::string, std::string> config;  // echo, re-runnable via from_pairs
  std::vector<Estimate> estimates;
  std::vector<TestOutcome> tests;
  std::vector<KsEntry> ks;
  std::vector<std::string> notes;
  RunMetadata metadata;
  std::string content_hash;

  const Estimate* find(const std::string& statistic, const std::function<bool(const Estimate&)>& pred = {}) const {
    for (const auto& e : estimates)
      if (e.statistic == statistic && (!pred || pred(e))) return &e;
    return nullptr;
  }
  const TestOutcome* test(const std::string& name) const {
    for (const auto& t : tests)
      if (t.name == name) return &t;
    return nullptr;
  }

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

namespace detail {

using nlohmann::json;

// NaN has no JSON spelling; it is written as null and read back as NaN.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline double get_num(const json& j) { return j.is_null() ? NAN : j.get<double>(); }

template <class T>
json opt(const std::optional<T>& x) {
  if (!x) return nullptr;
  if constexpr (std::is_floating_point_v<T>) return num(*x);
  return json(*x);
}
template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentRecord& r) {
  using namespace detail;
  json j;
  j["schema_version"] = r.schema_version;
  j["experiment"] = r.experiment;
  j["config"] = r.config;
  j["estimates"] = json::array();
  for (const auto& e : r.estimates) {
    j["estimates"].push_back({{"statistic", e.statistic},
                              {"n", opt(e.n)},
                              {"K", opt(e.K)},
                              {"m", opt(e.m)},
                              {"delta", opt(e.delta)},
                              {"epsilon", opt(e.epsilon)},
                              {"t", opt(e.t)},
                              {"estimate", num(e.estimate)},
                              {"se", num(e.se)},
                              {"oracle", opt(e.oracle)},
                              {"replicas", e.replicas},
                              {"note", e.note}});
  }
  j["tests"] = json::array();
  for (const auto& t : r.tests) {
    j["tests"].push_back({{"name", t.name},
                          {"statistic", num(t.statistic)},
                          {"p_value", num(t.p_value)},
                          {"passed", t.passed},
                          {"detail", t.detail}});
  }
  j["ks"] = json::array();
  for (const auto& k : r.ks) {
    j["ks"].push_back({{"statistic", k.statistic},
                       {"n", opt(k.n)},
                       {"distance", num(k.distance)},
                       {"critical", num(k.critical)},
                       {"replicas", k.replicas}});
  }
  j["notes"] = r.notes;
  const auto& m = r.metadata;
  j["metadata"] = {{"wall_clock_seconds", m.wall_clock_seconds},
                   {"threads", m.threads},
                   {"accepted", m.accepted},
                   {"rejections", m.rejections},
                   {"redraws", m.redraws},
                   {"acceptance_rate", num(m.acceptance_rate)}};
  j["content_hash"] = r.content_hash;
  return j;
}

inline ExperimentRecord from_json(const nlohmann::json& j) {
  using namespace detail;
  ExperimentRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kRecordSchemaVersion) {
    throw ConfigError("unsupported record schema version " + std::to_string(r.schema_version));
  }
  r.experiment = j.at("experiment").get<std::string>();
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  for (const auto& e : j.at("estimates")) {
    Estimate x;
    x.statistic = e.at("statistic").get<std::string>();
    x.n = get_opt<std::int64_t>(e, "n");
    x.K = get_opt<std::int64_t>(e, "K");
    x.m = get_opt<std::int64_t>(e, "m");
    x.delta = get_opt<double>(e, "delta");
    x.epsilon = get_opt<double>(e, "epsilon");
    x.t = get_opt<double>(e, "t");
    x.estimate = get_num(e.at("estimate"));
    x.se = get_num(e.at("se"));
    x.oracle = get_opt<double>(e, "oracle");
    x.replicas = e.at("replicas").get<std::uint64_t>();
    x.note = e.at("note").get<std::string>();
    r.estimates.push_back(std::move(x));
  }
  for (const auto& t : j.at("tests")) {
    r.tests.push_back({t.at("name").get<std::string>(), get_num(t.at("statistic")), get_num(t.at("p_value")),
                       t.at("passed").get<bool>(), t.at("detail").get<std::string>()});
  }
  for (const auto& k : j.at("ks")) {
    r.ks.push_back({k.at("statistic").get<std::string>(), get_opt<std::int64_t>(k, "n"), get_num(k.at("distance")),
                    get_num(k.at("critical")), k.at("replicas").get<std::uint64_t>()});
  }
  r.notes = j.at("notes").get<std::vector<std::string>>();
  const auto& m = j.at("metadata");
  r.metadata = {m.at("wall_clock_seconds").get<double>(), m.at("threads").get<int>(),
                m.at("accepted").get<std::uint64_t>(),     m.at("rejections").get<std::uint64_t>(),
                m.at("redraws").get<std::uint64_t>(),      get_num(m.at("acceptance_rate"))};
  r.content_hash = j.at("content_hash").get<std::string>();
  return r;
}

/// FNV-1a over the canonical JSON of the record minus the fields that may
/// differ between identical runs: wall clock, worker count, output
/// location and format, and the hash itself.
inline std::string content_hash(const ExperimentRecord& r) {
  auto j = to_json(r);
  j.erase("content_hash");
  j["metadata"].erase("wall_clock_seconds");
  j["metadata"].erase("threads");
  for (const char* k : {"threads", "out", "format", "plots"}) j["config"].erase(k);
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline void seal(ExperimentRecord& r) { r.content_hash = content_hash(r); }

inline std::string record_path(const std::string& dir, const ExperimentRecord& r) {
  return (std::filesystem::path(dir) / (r.experiment + ".json")).string();
}

inline std::string write_record(const std::string& dir, const ExperimentRecord& r) {
  std::filesystem::create_directories(dir);
  const auto path = record_path(dir, r);
  std::ofstream os(path);
  os << to_json(r).dump(2) << "\n";
  if (!os) throw Error("cannot write '" + path + "'");
  return path;
}

inline ExperimentRecord read_record(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read '" + path + "'");
  return from_json(nlohmann::json::parse(is));
}

namespace detail {

inline std::string cell(const std::optional<double>& x) {
  if (!x || !std::isfinite(*x)) return "";
  std::ostringstream os;
  os.precision(17);
  os << *x;
  return os.str();
}
inline std::string cell(const std::optional<std::int64_t>& x) { return x ? std::to_string(*x) : ""; }

inline std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace detail

/// One tidy CSV per statistic: <dir>/<experiment>_<statistic>.csv.
inline std::vector<std::string> write_csv(const std::string& dir, const ExperimentRecord& r) {
  using detail::cell;
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<const Estimate*>> by_stat;
  for (const auto& e : r.estimates) by_stat[e.statistic].push_back(&e);
  const std::string seed = r.config.count("seed") ? r.config.at("seed") : "";
  std::vector<std::string> files;
  for (const auto& [stat, rows] : by_stat) {
    const auto path = (std::filesystem::path(dir) / (r.experiment + "_" + detail::safe_name(stat) + ".csv")).string();
    std::ofstream os(path);
    os << "experiment,n,K,m,delta,epsilon,t,estimate,se,oracle,replicas,seed\n";
    for (const Estimate* e : rows) {
      os << r.experiment << ',' << cell(e->n) << ',' << cell(e->K) << ',' << cell(e->m) << ',' << cell(e->delta)
         << ',' << cell(e->epsilon) << ',' << cell(e->t) << ',' << cell(std::optional<double>(e->estimate)) << ','
         << cell(std::optional<double>(e->se)) << ',' << cell(e->oracle) << ',' << e->replicas << ',' << seed
         << '\n';
    }
    if (!os) throw Error("cannot write '" + path + "'");
    files.push_back(path);
  }
  return files;
}

/// Line plot of estimate (with +-2 SE bars) against the first grid
/// coordinate that varies, one series per combination of the others; the
/// oracle, where present, is drawn dashed.
inline std::vector<std::string> write_svg(const std::string& dir, const ExperimentRecord& r) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<const Estimate*>> by_stat;
  for (const auto& e : r.estimates)
    if (std::isfinite(e.estimate)) by_stat[e.statistic].push_back(&e);

  using Coord = std::function<std::optional<double>(const Estimate&)>;
  const std::vector<std::pair<std::string, Coord>> coords = {
      {"n", [](const Estimate& e) { return e.n ? std::optional<double>(*e.n) : std::nullopt; }},
      {"K", [](const Estimate& e) { return e.K ? std::optional<double>(*e.K) : std::nullopt; }},
      {"m", [](const Estimate& e) { return e.m ? std::optional<double>(*e.m) : std::nullopt; }},
      {"delta", [](const Estimate& e) { return e.delta; }},
      {"epsilon", [](const Estimate& e) { return e.epsilon; }},
      {"t", [](const Estimate& e) { return e.t; }}};

  std::vector<std::string> files;
  for (const auto& [stat, rows] : by_stat) {
    int axis = -1;
    for (std::size_t c = 0; c < coords.size() && axis < 0; ++c) {
      std::set<double> seen;
      for (auto* e : rows)
        if (auto x = coords[c].second(*e)) seen.insert(*x);
      if (seen.size() > 1) axis = static_cast<int>(c);
    }
    if (axis < 0) continue;
    std::map<std::string, std::vector<const Estimate*>> series;
    for (auto* e : rows) {
      if (!coords[axis].second(*e)) continue;
      std::string key;
      for (std::size_t c = 0; c < coords.size(); ++c) {
        if (static_cast<int>(c) == axis) continue;
        if (auto x = coords[c].second(*e)) key += coords[c].first + "=" + detail::cell(x) + " ";
      }
      series[key].push_back(e);
    }
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (auto* e : rows) {
      auto x = coords[axis].second(*e);
      if (!x) continue;
      const double se = std::isfinite(e->se) ? e->se : 0.0;
      x0 = std::min(x0, *x), x1 = std::max(x1, *x);
      y0 = std::min({y0, e->estimate - 2 * se, e->oracle.value_or(e->estimate)});
      y1 = std::max({y1, e->estimate + 2 * se, e->oracle.value_or(e->estimate)});
    }
    if (y1 <= y0) y1 = y0 + 1;
    const double W = 640, H = 400, pad = 50;
    auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
    auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << r.experiment << ": "
       << stat << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << coords[axis].first << "</text>\n";
    os << "<text x=\"4\" y=\"" << pad - 8 << "\" font-size=\"10\">" << y1 << "</text>\n";
    os << "<text x=\"4\" y=\"" << H - pad << "\" font-size=\"10\">" << y0 << "</text>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
       << "\" stroke=\"black\"/>\n";
    int colour = 0;
    for (auto& [key, pts] : series) {
      std::sort(pts.begin(), pts.end(),
                [&](auto* a, auto* b) { return *coords[axis].second(*a) < *coords[axis].second(*b); });
      const char* c = palette[colour++ % 6];
      os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
      for (auto* e : pts) os << px(*coords[axis].second(*e)) << "," << py(e->estimate) << " ";
      os << "\"/>\n";
      std::ostringstream oracle;
      int with_oracle = 0;
      for (auto* e : pts) {
        const double x = px(*coords[axis].second(*e));
        const double se = std::isfinite(e->se) ? e->se : 0.0;
        os << "<line x1=\"" << x << "\" y1=\"" << py(e->estimate - 2 * se) << "\" x2=\"" << x << "\" y2=\""
           << py(e->estimate + 2 * se) << "\" stroke=\"" << c << "\"/>\n";
        if (e->oracle) {
          ++with_oracle;
          oracle << x << "," << py(*e->oracle) << " ";
        }
      }
      if (with_oracle > 0) {
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-dasharray=\"5,4\" points=\"" << oracle.str()
           << "\"/>\n";
      }
      os << "<text x=\"" << W - pad << "\" y=\"" << 30 + 12 * colour << "\" text-anchor=\"end\" font-size=\"10\" fill=\""
         << c << "\">" << key << "</text>\n";
    }
    os << "</svg>\n";
    const auto path = (std::filesystem::path(dir) / (r.experiment + "_" + detail::safe_name(stat) + ".svg")).string();
    std::ofstream(path) << os.str();
    files.push_back(path);
  }
  return files;
}

}  // namespace brwskel::harness
