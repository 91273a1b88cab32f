#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "qfs/cli.hpp"

namespace {

using namespace qfs;

int run(int argc, char** argv) {
  CLI::App app{"qfs: QUBO-based feature ranking with a regression baseline and boosted-tree validation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qfs 1.0.0");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  std::string method = "all";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out, "override the output directory");
    sub->add_option("--jobs", jobs, "worker threads (results do not depend on this)");
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic survey table and its ground truth");
  auto* ingest = app.add_subcommand("ingest", "drop incomplete columns, compose targets, write dataset.csv");
  auto* rank = app.add_subcommand("rank", "rank features per target");
  auto* evaluate = app.add_subcommand("evaluate", "compare QA and MLR rankings with boosted trees");
  auto* report = app.add_subcommand("report", "before/after rank-change table");
  for (auto* s : {synth, ingest, rank, evaluate, report}) add_common(s);
  rank->add_option("--method", method, "qa, mlr or all")->check(CLI::IsMember({"qa", "mlr", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  auto cfg = cli::load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  if (jobs) cfg.jobs = *jobs;
  cli::finalize(cfg);

  std::vector<std::filesystem::path> written;
  auto append = [&](std::vector<std::filesystem::path> w) { written.insert(written.end(), w.begin(), w.end()); };
  if (*synth) append(cli::cmd_synth(cfg));
  if (*ingest) append(cli::cmd_ingest(cfg));
  if (*rank) {
    if (method != "mlr") append(cli::cmd_rank(cfg, RankMethod::QA));
    if (method != "qa") append(cli::cmd_rank(cfg, RankMethod::MLR));
  }
  if (*evaluate) append(cli::cmd_evaluate(cfg));
  if (*report) append(cli::cmd_report(cfg));
  for (const auto& p : written) std::cout << p.string() << '\n';
  return cli::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const qfs::ConfigError& e) {
    std::cerr << "qfs: configuration error: " << e.what() << '\n';
    return qfs::cli::kConfigError;
  } catch (const qfs::IoError& e) {
    std::cerr << "qfs: I/O error: " << e.what() << '\n';
    return qfs::cli::kIoError;
  } catch (const qfs::SolverError& e) {
    std::cerr << "qfs: solver error: " << e.what() << '\n';
    return qfs::cli::kSolverError;
  } catch (const qfs::DataError& e) {
    std::cerr << "qfs: data error: " << e.what() << '\n';
    return qfs::cli::kDataError;
  } catch (const std::exception& e) {
    std::cerr << "qfs: internal error: " << e.what() << '\n';
    return qfs::cli::kInternalError;
  }
}
