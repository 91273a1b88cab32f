#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfs/dataset.hpp"
#include "qfs/error.hpp"
#include "qfs/evaluator.hpp"
#include "qfs/gbt.hpp"
#include "qfs/random.hpp"
#include "qfs/ranking.hpp"
#include "qfs/synthgen.hpp"

// Configuration and subcommand bodies for the qfs command-line tool. The
// executable in tools/ only parses flags and maps exceptions to exit codes.
namespace qfs::cli {

enum ExitCode : int {
  kOk = 0,
  kDataError = 1,
  kConfigError = 2,
  kIoError = 3,
  kSolverError = 4,
  kInternalError = 5,
};

// Stream tags under the master seed.
enum SeedStream : std::uint64_t { kSynthStream = 1, kAnnealStream = 2, kSplitStream = 3, kModelStream = 4 };

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "qfs_out";
  std::size_t jobs = 1;

  // Exactly one data source.
  std::optional<std::string> input_path;
  TableFormat input_format;
  std::optional<synth::SynthSpec> synth;

  std::vector<TargetDecl> targets;
  std::vector<std::string> exclude;

  SweepConfig sweep;
  gbt::GbtConfig gbt;
  std::vector<gbt::Task> tasks{gbt::Task::Classification, gbt::Task::Regression};
  EvalProtocol protocol;

  std::string report_before, report_after;
  RankMethod report_method = RankMethod::QA;

  std::vector<std::string> target_names() const {
    std::vector<std::string> out;
    for (const auto& t : targets) out.push_back(t.name);
    return out;
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline synth::SynthSpec preset(const std::string& name) {
  if (name == "paper") return synth::paper_shaped_preset();
  if (name == "planted") return synth::planted_preset();
  if (name == "redundant") return synth::redundant_preset();
  throw ConfigError("synth: unknown preset '" + name + "' (expected paper, planted or redundant)");
}

}  // namespace detail

// Reads a RunConfig from JSON. Seeds of the individual stages are derived
// from the master seed: synth {1}, anneal {2}, splits {3}, models {4}.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    detail::check_keys(j, "config", {"seed", "output_dir", "jobs", "input", "synth", "targets", "exclude", "sweep",
                                     "anneal", "gbt", "protocol", "report"});
    if (!j.contains("seed")) throw ConfigError("config: 'seed' is mandatory");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.jobs = j.value("jobs", c.jobs);

    if (j.contains("input") == j.contains("synth")) throw ConfigError("config: give exactly one of 'input' or 'synth'");
    if (j.contains("input")) {
      const auto& in = j["input"];
      detail::check_keys(in, "input", {"path", "delimiter", "missing"});
      c.input_path = in.at("path").get<std::string>();
      const auto delim = in.value("delimiter", std::string(","));
      if (delim.size() != 1) throw ConfigError("input: delimiter must be a single character");
      c.input_format.delimiter = delim[0];
      c.input_format.missing = in.value("missing", std::string());
    } else {
      const auto& s = j["synth"];
      detail::check_keys(s, "synth", {"preset", "spec"});
      auto spec = s.contains("preset") ? detail::preset(s["preset"].get<std::string>()) : synth::SynthSpec{};
      if (s.contains("spec")) {
        if (s["spec"].contains("seed")) throw ConfigError("synth.spec: seed comes from the master seed");
        spec = synth::spec_from_json(s["spec"], spec);
      }
      c.synth = spec;
    }

    if (j.contains("targets")) {
      for (const auto& t : j["targets"]) {
        if (t.is_string()) {
          c.targets.push_back({t.get<std::string>(), {}});
          continue;
        }
        detail::check_keys(t, "targets[]", {"name", "items"});
        c.targets.push_back({t.at("name").get<std::string>(), t.value("items", std::vector<std::string>{})});
      }
    } else if (c.synth) {
      for (const auto& n : c.synth->target_names) c.targets.push_back({n, {}});
    }
    if (c.targets.empty()) throw ConfigError("config: no targets declared");
    c.exclude = j.value("exclude", c.exclude);

    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      detail::check_keys(s, "sweep", {"k_min", "k_max", "mode", "max_levels"});
      c.sweep.k_min = s.value("k_min", c.sweep.k_min);
      c.sweep.k_max = s.value("k_max", c.sweep.k_max);
      if (s.contains("mode")) c.sweep.mode = parse_build_mode(s["mode"].get<std::string>());
      c.sweep.max_levels = s.value("max_levels", c.sweep.max_levels);
    }
    if (j.contains("anneal")) {
      const auto& a = j["anneal"];
      detail::check_keys(a, "anneal", {"num_reads", "sweeps", "beta_initial", "beta_final"});
      c.sweep.anneal.num_reads = a.value("num_reads", c.sweep.anneal.num_reads);
      c.sweep.anneal.sweeps = a.value("sweeps", c.sweep.anneal.sweeps);
      c.sweep.anneal.beta_initial = a.value("beta_initial", c.sweep.anneal.beta_initial);
      c.sweep.anneal.beta_final = a.value("beta_final", c.sweep.anneal.beta_final);
    }
    if (j.contains("gbt")) {
      const auto& g = j["gbt"];
      detail::check_keys(g, "gbt", {"n_trees", "max_depth", "learning_rate", "min_leaf", "l2", "subsample", "tasks"});
      c.gbt.n_trees = g.value("n_trees", c.gbt.n_trees);
      c.gbt.max_depth = g.value("max_depth", c.gbt.max_depth);
      c.gbt.learning_rate = g.value("learning_rate", c.gbt.learning_rate);
      c.gbt.min_leaf = g.value("min_leaf", c.gbt.min_leaf);
      c.gbt.l2 = g.value("l2", c.gbt.l2);
      c.gbt.subsample = g.value("subsample", c.gbt.subsample);
      if (g.contains("tasks")) {
        c.tasks.clear();
        for (const auto& t : g["tasks"]) c.tasks.push_back(gbt::parse_task(t.get<std::string>()));
        if (c.tasks.empty()) throw ConfigError("gbt: tasks must not be empty");
      }
    }
    if (j.contains("protocol")) {
      const auto& p = j["protocol"];
      detail::check_keys(p, "protocol", {"conditions", "repeats", "test_fraction", "alpha", "share_splits"});
      c.protocol.conditions = p.value("conditions", c.protocol.conditions);
      c.protocol.repeats = p.value("repeats", c.protocol.repeats);
      c.protocol.test_fraction = p.value("test_fraction", c.protocol.test_fraction);
      c.protocol.alpha = p.value("alpha", c.protocol.alpha);
      c.protocol.share_splits = p.value("share_splits", c.protocol.share_splits);
    }
    if (j.contains("report")) {
      const auto& r = j["report"];
      detail::check_keys(r, "report", {"before", "after", "method"});
      c.report_before = r.value("before", std::string());
      c.report_after = r.value("after", std::string());
      if (r.contains("method")) c.report_method = parse_rank_method(r["method"].get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

// Overrides after flags are applied: the master seed fans out here.
inline void finalize(RunConfig& c) {
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.synth) c.synth->seed = derive_seed(c.seed, {kSynthStream});
  c.sweep.anneal.seed = derive_seed(c.seed, {kAnnealStream});
  c.sweep.jobs = c.jobs;
  c.protocol.seed = derive_seed(c.seed, {kSplitStream});
  c.protocol.jobs = c.jobs;
  c.gbt.seed = derive_seed(c.seed, {kModelStream});
  c.sweep.anneal.validate();
  c.gbt.validate();
  if (c.synth) c.synth->validate();
}

// --- file layout ----------------------------------------------------------

inline std::filesystem::path synth_table_path(const RunConfig& c) { return c.output_dir / "synth.csv"; }
inline std::filesystem::path dataset_path(const RunConfig& c) { return c.output_dir / "dataset.csv"; }

inline std::filesystem::path ranking_path(const RunConfig& c, RankMethod m, const std::string& target) {
  return c.output_dir / ("ranking_" + std::string(to_string(m)) + "_" + target + ".csv");
}

inline std::filesystem::path report_path(const RunConfig& c, gbt::Task task, const std::string& ext) {
  return c.output_dir / ("report_" + std::string(gbt::to_string(task)) + "." + ext);
}

namespace detail {

inline void ensure_dir(const std::filesystem::path& d) {
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec || !std::filesystem::is_directory(d)) throw IoError("cannot create output directory '" + d.string() + "'");
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

template <typename F>
std::string capture(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

inline Dataset load_dataset(const RunConfig& c) {
  const auto p = dataset_path(c);
  if (!std::filesystem::exists(p)) throw IoError("'" + p.string() + "' not found; run 'qfs ingest' first");
  return make_dataset(load_table(p.string()), c.target_names());
}

}  // namespace detail

// --- subcommands ----------------------------------------------------------

inline std::vector<std::filesystem::path> cmd_synth(const RunConfig& c) {
  if (!c.synth) throw ConfigError("synth: config has no 'synth' section");
  const auto out = synth::generate(*c.synth);
  detail::ensure_dir(c.output_dir);
  write_table(synth_table_path(c).string(), out.table);
  detail::write_json(c.output_dir / "ground_truth.json", synth::to_json(out.truth));
  return {synth_table_path(c), c.output_dir / "ground_truth.json"};
}

inline std::vector<std::filesystem::path> cmd_ingest(const RunConfig& c) {
  RawTable raw;
  if (c.input_path) {
    raw = load_table(*c.input_path, c.input_format);
  } else {
    const auto p = synth_table_path(c);
    if (!std::filesystem::exists(p)) throw IoError("'" + p.string() + "' not found; run 'qfs synth' first");
    raw = load_table(p.string());
  }
  PreprocessOptions opt;
  opt.targets = c.targets;
  opt.exclude = c.exclude;
  const auto ds = preprocess(raw, opt);
  detail::ensure_dir(c.output_dir);
  write_table(dataset_path(c).string(), dataset_to_table(ds));
  detail::write_json(c.output_dir / "preprocess_report.json", to_json(ds.meta));
  return {dataset_path(c), c.output_dir / "preprocess_report.json"};
}

inline std::vector<std::filesystem::path> cmd_rank(const RunConfig& c, RankMethod method) {
  const auto ds = detail::load_dataset(c);
  detail::ensure_dir(c.output_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& target : c.target_names()) {
    FeatureRanking r;
    if (method == RankMethod::QA) {
      const auto res = qa_sweep(ds, target, c.sweep);
      r = res.ranking;
      nlohmann::json sel = nlohmann::json::array();
      for (std::size_t i = 0; i < res.ks.size(); ++i) {
        std::vector<std::string> labels;
        for (auto idx : res.selections[i].indices) labels.push_back(ds.feature_names[idx]);
        sel.push_back({{"k", res.ks[i]},
                       {"features", labels},
                       {"energy", res.selections[i].energy},
                       {"lambda", res.selections[i].lambda},
                       {"attempts", res.selections[i].attempts}});
      }
      const auto sweep_file = c.output_dir / ("sweep_qa_" + target + ".json");
      detail::write_json(sweep_file, {{"target", target}, {"mode", to_string(c.sweep.mode)}, {"selections", sel}});
      written.push_back(sweep_file);
    } else {
      r = mlr_rank(ds, target);
    }
    const auto p = ranking_path(c, method, target);
    detail::write_text(p, detail::capture([&](std::ostream& os) { write_ranking_csv(os, r); }));
    written.push_back(p);
  }
  return written;
}

inline std::vector<std::filesystem::path> cmd_evaluate(const RunConfig& c) {
  const auto ds = detail::load_dataset(c);
  c.protocol.validate(ds.n_features());
  std::vector<std::pair<FeatureRanking, FeatureRanking>> rankings;
  for (const auto& target : c.target_names()) {
    auto load = [&](RankMethod m) {
      const auto p = ranking_path(c, m, target);
      if (!std::filesystem::exists(p))
        throw IoError("ranking '" + p.string() + "' not found; run 'qfs rank --method " + std::string(to_string(m)) + "' first");
      return load_ranking_csv(p.string(), m, target);
    };
    rankings.emplace_back(load(RankMethod::QA), load(RankMethod::MLR));
  }
  std::vector<std::filesystem::path> written;
  for (auto task : c.tasks) {
    auto cfg = c.gbt;
    cfg.task = task;
    std::vector<ReportBlock> blocks;
    const auto names = c.target_names();
    for (std::size_t t = 0; t < names.size(); ++t)
      blocks.push_back(run_protocol(ds, rankings[t].first, rankings[t].second, names[t], c.protocol, cfg));
    const auto report = make_report(task, c.protocol, std::move(blocks));
    detail::write_text(report_path(c, task, "csv"), detail::capture([&](std::ostream& os) { write_report_csv(os, report); }));
    detail::write_json(report_path(c, task, "json"), to_json(report));
    written.push_back(report_path(c, task, "csv"));
    written.push_back(report_path(c, task, "json"));
  }
  return written;
}

inline std::vector<std::filesystem::path> cmd_report(const RunConfig& c) {
  std::string before = c.report_before, after = c.report_after;
  const auto names = c.target_names();
  if (before.empty() && after.empty() && names.size() == 2) {
    before = names[0];
    after = names[1];
  }
  if (before.empty() || after.empty()) throw ConfigError("report: set report.before and report.after");
  auto load = [&](const std::string& target) {
    const auto p = ranking_path(c, c.report_method, target);
    if (!std::filesystem::exists(p)) throw IoError("ranking '" + p.string() + "' not found");
    return load_ranking_csv(p.string(), c.report_method, target);
  };
  const auto rows = rank_delta(load(before), load(after));
  detail::ensure_dir(c.output_dir);
  const auto stem = c.output_dir / ("rank_delta_" + std::string(to_string(c.report_method)));
  const auto csv = stem.string() + ".csv";
  const auto json = stem.string() + ".json";
  detail::write_text(csv, detail::capture([&](std::ostream& os) { write_rank_delta_csv(os, rows); }));
  detail::write_json(json, {{"method", to_string(c.report_method)}, {"before", before}, {"after", after}, {"rows", to_json(rows)}});
  return {csv, json};
}

}  // namespace qfs::cli
