#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfs/dataset.hpp"
#include "qfs/error.hpp"
#include "qfs/ols.hpp"
#include "qfs/parallel.hpp"
#include "qfs/qubo.hpp"
#include "qfs/random.hpp"
#include "qfs/solver.hpp"

namespace qfs {

enum class RankMethod { QA, MLR };

inline std::string_view to_string(RankMethod m) { return m == RankMethod::QA ? "qa" : "mlr"; }

inline RankMethod parse_rank_method(std::string_view s) {
  if (s == "qa" || s == "QA") return RankMethod::QA;
  if (s == "mlr" || s == "MLR") return RankMethod::MLR;
  throw ConfigError("unknown ranking method '" + std::string(s) + "' (expected qa or mlr)");
}

struct RankEntry {
  std::string label;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

struct FeatureRanking {
  std::vector<RankEntry> entries;  // sorted by rank
  RankMethod method = RankMethod::QA;
  std::string target;

  std::vector<std::string> top(std::size_t m) const {
    if (m > entries.size())
      throw ConfigError("requested top " + std::to_string(m) + " of a ranking with " + std::to_string(entries.size()) + " features");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m; ++i) out.push_back(entries[i].label);
    return out;
  }

  std::size_t rank_of(std::string_view label) const {
    for (const auto& e : entries)
      if (e.label == label) return e.rank;
    throw DataError("feature '" + std::string(label) + "' not in ranking");
  }
};

namespace detail {

// Orders feature indices by score desc, then by the secondary key desc, then
// by column order, and assigns ranks 1..p.
inline FeatureRanking make_ranking(const std::vector<std::string>& labels, const std::vector<double>& score,
                                   const std::vector<double>& secondary, RankMethod method, std::string target) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    if (secondary[a] != secondary[b]) return secondary[a] > secondary[b];
    return a < b;
  });
  FeatureRanking r;
  r.method = method;
  r.target = std::move(target);
  for (std::size_t pos = 0; pos < order.size(); ++pos) r.entries.push_back({labels[order[pos]], score[order[pos]], pos + 1});
  return r;
}

}  // namespace detail

struct SweepConfig {
  std::size_t k_min = 1;
  std::size_t k_max = 0;  // 0 = p - 1
  AnnealConfig anneal;
  QuboBuildMode mode = QuboBuildMode::RelevanceRedundancy;
  std::uint32_t max_levels = info::kDefaultMaxLevels;
  std::size_t jobs = 1;
};

struct SweepResult {
  FeatureRanking ranking;
  std::vector<std::size_t> ks;
  std::vector<Selection> selections;  // one per k
  std::vector<double> relevance;      // I(X_i; Y)
};

// Builds the QUBO once, selects the best k-subset for every k in the sweep and
// scores each feature by how many of those subsets contain it. The k-th
// solve uses anneal seed derive_seed(cfg.anneal.seed, {k}).
inline SweepResult qa_sweep(const Dataset& ds, std::string_view target, const SweepConfig& cfg) {
  const std::size_t p = ds.n_features();
  if (!ds.has_target(target)) throw DataError("unknown target '" + std::string(target) + "'");
  if (p < 2) throw DataError("qa_rank needs at least 2 features");
  const std::size_t k_max = cfg.k_max == 0 ? p - 1 : cfg.k_max;
  if (cfg.k_min < 1 || cfg.k_min > k_max || k_max > p)
    throw ConfigError("sweep bounds must satisfy 1 <= k_min <= k_max <= p (got " + std::to_string(cfg.k_min) + ", " +
                      std::to_string(k_max) + ", p=" + std::to_string(p) + ")");
  cfg.anneal.validate();

  const auto fi = feature_information(ds, target, cfg.max_levels);
  const auto q = build_feature_qubo(fi, cfg.mode);

  SweepResult res;
  res.relevance = fi.relevance;
  for (std::size_t k = cfg.k_min; k <= k_max; ++k) res.ks.push_back(k);
  res.selections.resize(res.ks.size());
  parallel_for(res.ks.size(), cfg.jobs, [&](std::size_t i) {
    AnnealConfig ac = cfg.anneal;
    ac.seed = derive_seed(cfg.anneal.seed, {res.ks[i]});
    try {
      res.selections[i] = select_k_features(q, res.ks[i], ac);
    } catch (const SolverError& e) {
      throw SolverError("k=" + std::to_string(res.ks[i]) + ": " + e.what());
    }
  });

  std::vector<double> score(p, 0.0);
  for (const auto& sel : res.selections)
    for (auto idx : sel.indices) score[idx] += 1.0;
  res.ranking = detail::make_ranking(ds.feature_names, score, fi.relevance, RankMethod::QA, std::string(target));
  return res;
}

inline FeatureRanking qa_rank(const Dataset& ds, std::string_view target, const SweepConfig& cfg) {
  return qa_sweep(ds, target, cfg).ranking;
}

// Ranks by |standardized OLS coefficient|.
inline FeatureRanking mlr_rank(const Dataset& ds, std::string_view target) {
  const auto fit = ols_fit(ds.X, ds.target(target));
  std::vector<double> score(ds.n_features());
  for (std::size_t j = 0; j < score.size(); ++j) score[j] = std::abs(fit.coefficients(static_cast<Eigen::Index>(j)));
  const std::vector<double> none(score.size(), 0.0);
  return detail::make_ranking(ds.feature_names, score, none, RankMethod::MLR, std::string(target));
}

struct RankDeltaRow {
  std::string label;
  std::size_t rank_before = 0;
  std::size_t rank_after = 0;
  long delta = 0;  // positive: moved up after
  bool improved = false;
};

inline std::vector<RankDeltaRow> rank_delta(const FeatureRanking& before, const FeatureRanking& after) {
  std::set<std::string_view> a, b;
  for (const auto& e : before.entries) a.insert(e.label);
  for (const auto& e : after.entries) b.insert(e.label);
  if (a != b || a.size() != before.entries.size() || b.size() != after.entries.size())
    throw DataError("rank_delta: rankings cover different feature sets");

  std::vector<RankDeltaRow> rows;
  for (const auto& e : after.entries) {
    RankDeltaRow r;
    r.label = e.label;
    r.rank_after = e.rank;
    r.rank_before = before.rank_of(e.label);
    r.delta = static_cast<long>(r.rank_before) - static_cast<long>(r.rank_after);
    r.improved = r.delta > 0;
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.rank_after < y.rank_after; });
  return rows;
}

// --- serialization --------------------------------------------------------

inline void write_ranking_csv(std::ostream& out, const FeatureRanking& r) {
  out << "label,score,rank\n";
  for (const auto& e : r.entries) out << e.label << ',' << format_number(e.score) << ',' << e.rank << '\n';
}

inline void write_ranking_csv(const std::string& path, const FeatureRanking& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write ranking '" + path + "'");
  write_ranking_csv(out, r);
}

inline FeatureRanking parse_ranking_csv(std::istream& in, RankMethod method, std::string target) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "label,score,rank")
    throw DataError("ranking file must start with header 'label,score,rank'");
  FeatureRanking r;
  r.method = method;
  r.target = std::move(target);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 3) throw DataError("ranking line " + std::to_string(line_no) + ": expected 3 fields");
    RankEntry e;
    e.label = std::string(detail::trim(f[0]));
    try {
      e.score = std::stod(std::string(detail::trim(f[1])));
      e.rank = std::stoul(std::string(detail::trim(f[2])));
    } catch (const std::exception&) {
      throw DataError("ranking line " + std::to_string(line_no) + ": bad number");
    }
    if (e.rank != r.entries.size() + 1)
      throw DataError("ranking line " + std::to_string(line_no) + ": ranks must run 1..p in order");
    r.entries.push_back(std::move(e));
  }
  return r;
}

inline FeatureRanking load_ranking_csv(const std::string& path, RankMethod method, std::string target) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read ranking '" + path + "'");
  return parse_ranking_csv(in, method, std::move(target));
}

inline void write_rank_delta_csv(std::ostream& out, const std::vector<RankDeltaRow>& rows) {
  out << "label,rank_before,rank_after,delta,improved\n";
  for (const auto& r : rows)
    out << r.label << ',' << r.rank_before << ',' << r.rank_after << ',' << r.delta << ',' << (r.improved ? 1 : 0) << '\n';
}

inline nlohmann::json to_json(const std::vector<RankDeltaRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"label", r.label},
                   {"rank_before", r.rank_before},
                   {"rank_after", r.rank_after},
                   {"delta", r.delta},
                   {"improved", r.improved}});
  return arr;
}

inline nlohmann::json to_json(const FeatureRanking& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) entries.push_back({{"label", e.label}, {"score", e.score}, {"rank", e.rank}});
  return {{"method", to_string(r.method)}, {"target", r.target}, {"entries", entries}};
}

}  // namespace qfs
