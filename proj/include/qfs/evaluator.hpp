#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qfs/dataset.hpp"
#include "qfs/error.hpp"
#include "qfs/gbt.hpp"
#include "qfs/metrics.hpp"
#include "qfs/parallel.hpp"
#include "qfs/random.hpp"
#include "qfs/ranking.hpp"

namespace qfs {

struct EvalProtocol {
  std::vector<std::size_t> conditions{10, 20, 30, 40, 50};  // accumulated top-m cutoffs
  std::size_t repeats = 30;
  double test_fraction = 0.2;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  // When true both methods see the same split for a given (cutoff, repeat).
  bool share_splits = false;
  std::size_t jobs = 1;

  void validate(std::size_t p) const {
    if (conditions.empty()) throw ConfigError("protocol: no cutoffs");
    for (std::size_t i = 0; i < conditions.size(); ++i) {
      if (conditions[i] < 1) throw ConfigError("protocol: cutoffs must be positive");
      if (i && conditions[i] <= conditions[i - 1]) throw ConfigError("protocol: cutoffs must be strictly ascending");
    }
    if (conditions.back() > p)
      throw ConfigError("protocol: cutoff " + std::to_string(conditions.back()) + " exceeds the " + std::to_string(p) +
                        " available features");
    if (repeats < 2) throw ConfigError("protocol: repeats must be >= 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("protocol: test_fraction must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("protocol: alpha must lie in (0, 1)");
  }
};

struct TrainTestSplit {
  std::vector<std::size_t> train, test;  // ascending row indices
};

inline constexpr std::size_t kMaxSplitAttempts = 10;

// Stratified by label when `labels` is non-empty, otherwise a plain shuffle.
inline TrainTestSplit random_split(std::size_t n, double test_fraction, std::uint64_t seed,
                                   std::span<const int> labels = {}) {
  Rng rng(seed);
  TrainTestSplit s;
  auto take = [&](std::vector<std::size_t> idx) {
    rng.shuffle(idx.begin(), idx.end());
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  };
  if (labels.empty()) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    take(std::move(all));
  } else {
    if (labels.size() != n) throw DataError("random_split: label count mismatch");
    for (int cls : {0, 1}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == cls) idx.push_back(i);
      take(std::move(idx));
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline std::uint64_t split_seed(const EvalProtocol& proto, std::size_t cutoff, RankMethod method, std::size_t repeat,
                                std::size_t attempt) {
  if (proto.share_splits) return derive_seed(proto.seed, {cutoff, repeat, attempt});
  return derive_seed(proto.seed, {cutoff, static_cast<std::uint64_t>(method) + 1, repeat, attempt});
}

struct MethodCell {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over trials
  std::vector<double> trials;
};

struct TestCell {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool significant = false;
};

struct ReportBlock {
  std::string target;
  std::vector<MethodCell> qa, mlr;  // one per condition
  std::vector<TestCell> tests;      // QA minus MLR
};

struct ComparisonReport {
  gbt::Task task = gbt::Task::Regression;
  std::vector<std::size_t> conditions;
  std::size_t repeats = 0;
  double alpha = 0.05;
  std::vector<ReportBlock> blocks;  // one per target

  std::string metric() const {
    return task == gbt::Task::Classification ? "balanced_accuracy" : "negative_mean_absolute_error";
  }
};

namespace detail {

inline Eigen::MatrixXd select(const Eigen::MatrixXd& X, std::span<const std::size_t> rows,
                              std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows.size(); ++r)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          X(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
  return out;
}

inline MethodCell summarize(std::vector<double> trials) {
  MethodCell c;
  c.mean = mean(trials);
  c.std = std::sqrt(sample_variance(trials));
  c.trials = std::move(trials);
  return c;
}

// Welch test that degrades gracefully when both samples are constant.
inline TestCell compare(const MethodCell& a, const MethodCell& b, double alpha) {
  TestCell t;
  if (a.std == 0.0 && b.std == 0.0) {
    if (a.mean == b.mean) return t;
    t.t = a.mean > b.mean ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    t.p = 0.0;
    t.df = static_cast<double>(a.trials.size() + b.trials.size() - 2);
  } else {
    const auto r = welch_ttest(a.trials, b.trials);
    t.t = r.t;
    t.p = r.p;
    t.df = r.df;
  }
  t.significant = t.p < alpha;
  return t;
}

}  // namespace detail

// One trial: split, train on the top-m features of `ranking`, score the test
// split. Exposed for tests; run_protocol drives it.
inline double run_trial(const Dataset& ds, const Eigen::VectorXd& y, std::span<const int> labels,
                        const std::vector<std::size_t>& columns, const EvalProtocol& proto, const gbt::GbtConfig& cfg,
                        std::size_t cutoff, RankMethod method, std::size_t repeat,
                        TrainTestSplit* split_out = nullptr) {
  const bool classify = cfg.task == gbt::Task::Classification;
  TrainTestSplit split;
  bool ok = false;
  for (std::size_t attempt = 0; attempt < kMaxSplitAttempts && !ok; ++attempt) {
    split = random_split(ds.n_rows(), proto.test_fraction, split_seed(proto, cutoff, method, repeat, attempt),
                         classify ? labels : std::span<const int>{});
    ok = !split.test.empty() && split.train.size() >= 10;
    if (ok && classify) {
      auto has_both = [&](const std::vector<std::size_t>& idx) {
        bool z = false, o = false;
        for (auto i : idx) (labels[i] ? o : z) = true;
        return z && o;
      };
      ok = has_both(split.test) && has_both(split.train);
    }
  }
  if (!ok) throw DataError("could not draw a non-degenerate train/test split in " + std::to_string(kMaxSplitAttempts) + " attempts");
  if (split_out) *split_out = split;

  const auto X_train = detail::select(ds.X, split.train, columns);
  const auto X_test = detail::select(ds.X, split.test, columns);
  Eigen::VectorXd y_train(static_cast<Eigen::Index>(split.train.size()));
  for (std::size_t i = 0; i < split.train.size(); ++i)
    y_train(static_cast<Eigen::Index>(i)) = classify ? labels[split.train[i]] : y(static_cast<Eigen::Index>(split.train[i]));

  const auto model = gbt::gbt_train(X_train, y_train, cfg);
  const auto pred = model.predict(X_test);
  if (classify) {
    std::vector<int> yt, yp;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      yt.push_back(labels[split.test[i]]);
      yp.push_back(static_cast<int>(pred(static_cast<Eigen::Index>(i))));
    }
    return balanced_accuracy(yt, yp);
  }
  std::vector<double> yt, yp;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    yt.push_back(y(static_cast<Eigen::Index>(split.test[i])));
    yp.push_back(pred(static_cast<Eigen::Index>(i)));
  }
  return negative_mae(yt, yp);
}

// Evaluates both rankings for one target: every (cutoff, method, repeat)
// trial, then per-cutoff means and QA-vs-MLR Welch tests.
inline ReportBlock run_protocol(const Dataset& ds, const FeatureRanking& qa, const FeatureRanking& mlr,
                                const std::string& target, const EvalProtocol& proto, const gbt::GbtConfig& cfg) {
  proto.validate(ds.n_features());
  cfg.validate();
  for (const auto* r : {&qa, &mlr})
    if (r->entries.size() < proto.conditions.back())
      throw ConfigError("ranking for target '" + target + "' covers fewer features than the largest cutoff");

  const auto& y = ds.target(target);
  std::vector<int> labels;
  if (cfg.task == gbt::Task::Classification) labels = binarize_target(y).labels;

  const std::array<const FeatureRanking*, 2> rankings{&qa, &mlr};
  std::vector<std::vector<std::size_t>> columns;  // [cond * 2 + method]
  for (auto m : proto.conditions)
    for (const auto* r : rankings) {
      std::vector<std::size_t> cols;
      for (const auto& label : r->top(m)) cols.push_back(ds.feature_index(label));
      columns.push_back(std::move(cols));
    }

  const std::size_t n_cond = proto.conditions.size();
  std::vector<double> results(n_cond * 2 * proto.repeats);
  parallel_for(results.size(), proto.jobs, [&](std::size_t idx) {
    const std::size_t rep = idx % proto.repeats;
    const std::size_t cm = idx / proto.repeats;
    const auto method = cm % 2 == 0 ? RankMethod::QA : RankMethod::MLR;
    results[idx] = run_trial(ds, y, labels, columns[cm], proto, cfg, proto.conditions[cm / 2], method, rep);
  });

  ReportBlock block;
  block.target = target;
  for (std::size_t c = 0; c < n_cond; ++c) {
    auto slice = [&](std::size_t method) {
      const auto begin = results.begin() + static_cast<std::ptrdiff_t>((c * 2 + method) * proto.repeats);
      return std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(proto.repeats));
    };
    block.qa.push_back(detail::summarize(slice(0)));
    block.mlr.push_back(detail::summarize(slice(1)));
    block.tests.push_back(detail::compare(block.qa.back(), block.mlr.back(), proto.alpha));
  }
  return block;
}

inline ComparisonReport make_report(gbt::Task task, const EvalProtocol& proto, std::vector<ReportBlock> blocks) {
  ComparisonReport r;
  r.task = task;
  r.conditions = proto.conditions;
  r.repeats = proto.repeats;
  r.alpha = proto.alpha;
  r.blocks = std::move(blocks);
  return r;
}

// --- serialization --------------------------------------------------------

inline std::string condition_label(std::size_t m) { return "top_" + std::to_string(m); }

inline void write_report_csv(std::ostream& out, const ComparisonReport& r) {
  out << "metric,target,row";
  for (auto m : r.conditions) out << ',' << condition_label(m);
  out << '\n';
  for (const auto& b : r.blocks) {
    auto line = [&](const std::string& row, auto&& value) {
      out << r.metric() << ',' << b.target << ',' << row;
      for (std::size_t c = 0; c < r.conditions.size(); ++c) out << ',' << value(c);
      out << '\n';
    };
    line("QA", [&](std::size_t c) { return format_number(b.qa[c].mean); });
    line("MLR", [&](std::size_t c) { return format_number(b.mlr[c].mean); });
    line("QA_std", [&](std::size_t c) { return format_number(b.qa[c].std); });
    line("MLR_std", [&](std::size_t c) { return format_number(b.mlr[c].std); });
    line("t", [&](std::size_t c) { return format_number(b.tests[c].t); });
    line("p_value", [&](std::size_t c) { return format_number(b.tests[c].p); });
    line("significant", [&](std::size_t c) { return std::string(b.tests[c].significant ? "1" : "0"); });
  }
}

namespace detail {

inline nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

}  // namespace detail

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : r.blocks) {
    auto method_row = [&](const std::vector<MethodCell>& cells) {
      nlohmann::json row = nlohmann::json::object();
      for (std::size_t c = 0; c < r.conditions.size(); ++c)
        row[condition_label(r.conditions[c])] = {{"mean", cells[c].mean}, {"std", cells[c].std}, {"trials", cells[c].trials}};
      return row;
    };
    nlohmann::json tests = nlohmann::json::object();
    for (std::size_t c = 0; c < r.conditions.size(); ++c)
      tests[condition_label(r.conditions[c])] = {{"t", detail::number_or_string(b.tests[c].t)},
                                                 {"p_value", b.tests[c].p},
                                                 {"df", b.tests[c].df},
                                                 {"significant", b.tests[c].significant}};
    blocks.push_back({{"target", b.target}, {"methods", {{"QA", method_row(b.qa)}, {"MLR", method_row(b.mlr)}}}, {"tests", tests}});
  }
  nlohmann::json conds = nlohmann::json::array();
  for (auto m : r.conditions) conds.push_back(condition_label(m));
  return {{"task", gbt::to_string(r.task)},
          {"metric", r.metric()},
          {"conditions", conds},
          {"repeats", r.repeats},
          {"alpha", r.alpha},
          {"blocks", blocks}};
}

}  // namespace qfs
