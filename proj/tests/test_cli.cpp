#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qfs/cli.hpp"

using namespace qfs;
namespace fs = std::filesystem;

namespace {

const std::string kCli = QFS_CLI_PATH;

struct Workspace {
  fs::path dir;
  Workspace() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("qfs_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  fs::path write_config(const nlohmann::json& j, const std::string& name = "config.json") const {
    const auto p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  int qfs(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' " + args + " >stdout.txt 2>stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& rel) const {
    std::ifstream in(dir / rel, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }
};

nlohmann::json small_config() {
  return {{"seed", 5},
          {"output_dir", "out"},
          {"synth",
           {{"preset", "planted"},
            {"spec",
             {{"n_rows", 240},
              {"n_features", 16},
              {"n_informative", 4},
              {"noise_sd", 0.5},
              {"target_names", {"before", "after"}},
              {"shared_informative", 2}}}}},
          {"anneal", {{"num_reads", 8}, {"sweeps", 200}}},
          {"gbt", {{"n_trees", 15}}},
          {"protocol", {{"conditions", {2, 4, 6, 8, 10}}, {"repeats", 4}}}};
}

const std::vector<std::string> kPipeline{"synth", "ingest", "rank", "evaluate", "report"};

}  // namespace

TEST_CASE("paper preset synth writes a 751 x 163 table reproducibly") {
  Workspace w;
  w.write_config({{"seed", 1}, {"output_dir", "a"}, {"synth", {{"preset", "paper"}}}});
  REQUIRE(w.qfs("synth -c config.json") == 0);
  REQUIRE(w.qfs("synth -c config.json --out b") == 0);
  const auto table = load_table((w.dir / "a/synth.csv").string());
  CHECK(table.n_rows() == 751);
  CHECK(table.n_cols() == 163);
  CHECK(w.read("a/synth.csv") == w.read("b/synth.csv"));
  CHECK(w.read("a/ground_truth.json") == w.read("b/ground_truth.json"));
  REQUIRE(w.qfs("synth -c config.json --out c --seed 2") == 0);
  CHECK(w.read("a/synth.csv") != w.read("c/synth.csv"));
}

TEST_CASE("configuration and usage errors exit with code 2") {
  Workspace w;
  auto cfg = small_config();
  cfg["synth"]["spec"]["n_informative"] = 40;
  w.write_config(cfg, "bad_spec.json");
  CHECK(w.qfs("synth -c bad_spec.json") == cli::kConfigError);
  CHECK(w.read("stderr.txt").find("n_informative") != std::string::npos);

  auto noseed = small_config();
  noseed.erase("seed");
  w.write_config(noseed, "noseed.json");
  CHECK(w.qfs("synth -c noseed.json") == cli::kConfigError);

  auto typo = small_config();
  typo["anneal"]["num_read"] = 3;
  w.write_config(typo, "typo.json");
  CHECK(w.qfs("synth -c typo.json") == cli::kConfigError);

  w.write_config(small_config());
  CHECK(w.qfs("rank -c config.json --method lasso") == cli::kConfigError);
  CHECK(w.qfs("frobnicate -c config.json") == cli::kConfigError);
  CHECK(w.qfs("rank") == cli::kConfigError);
  std::ofstream(w.dir / "broken.json") << "{\"seed\": ";
  CHECK(w.qfs("synth -c broken.json") == cli::kConfigError);
}

TEST_CASE("I/O failures exit with code 3") {
  Workspace w;
  w.write_config(small_config());
  CHECK(w.qfs("synth -c missing.json") == cli::kIoError);
  CHECK(w.qfs("ingest -c config.json") == cli::kIoError);  // no synth.csv yet
  std::ofstream(w.dir / "blocker") << "x";
  CHECK(w.qfs("synth -c config.json --out blocker/sub") == cli::kIoError);

  REQUIRE(w.qfs("synth -c config.json") == 0);
  REQUIRE(w.qfs("ingest -c config.json") == 0);
  REQUIRE(w.qfs("rank -c config.json --method mlr") == 0);
  CHECK(w.qfs("evaluate -c config.json") == cli::kIoError);  // QA ranking missing
  CHECK(w.read("stderr.txt").find("ranking_qa_before.csv") != std::string::npos);
}

TEST_CASE("cutoffs beyond p fail before any training") {
  Workspace w;
  auto cfg = small_config();
  cfg["protocol"]["conditions"] = {10, 20, 30, 40, 50};
  w.write_config(cfg);
  for (const auto& step : {"synth", "ingest", "rank"}) REQUIRE(w.qfs(std::string(step) + " -c config.json") == 0);
  CHECK(w.qfs("evaluate -c config.json") == cli::kConfigError);
  CHECK(w.read("stderr.txt").find("exceeds") != std::string::npos);
  CHECK_FALSE(fs::exists(w.dir / "out/report_classification.csv"));
}

TEST_CASE("rank output equals the library ranking byte for byte") {
  Workspace w;
  w.write_config(small_config());
  for (const auto& step : {"synth", "ingest", "rank"}) REQUIRE(w.qfs(std::string(step) + " -c config.json") == 0);

  auto cfg = cli::parse_run_config(small_config());
  cli::finalize(cfg);
  const auto ds = make_dataset(load_table((w.dir / "out/dataset.csv").string()), cfg.target_names());
  std::ostringstream qa, mlr;
  write_ranking_csv(qa, qa_rank(ds, "before", cfg.sweep));
  write_ranking_csv(mlr, mlr_rank(ds, "before"));
  CHECK(w.read("out/ranking_qa_before.csv") == qa.str());
  CHECK(w.read("out/ranking_mlr_before.csv") == mlr.str());

  // the strongest MLR feature is a planted one
  const auto truth = nlohmann::json::parse(w.read("out/ground_truth.json"));
  std::set<std::string> planted;
  for (const auto& n : truth["targets"][0]["informative"]) planted.insert(n.get<std::string>());
  std::istringstream in(w.read("out/ranking_mlr_before.csv"));
  const auto r = parse_ranking_csv(in, RankMethod::MLR, "before");
  CHECK(planted.count(r.entries[0].label) == 1);
}

TEST_CASE("full pipeline is byte-reproducible and independent of --jobs") {
  Workspace w;
  w.write_config(small_config());
  for (const auto& step : kPipeline) REQUIRE(w.qfs(step + " -c config.json") == 0);
  for (const auto& step : kPipeline) REQUIRE(w.qfs(step + " -c config.json --out out2 --jobs 3") == 0);

  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(w.dir / "out")) {
    const auto name = e.path().filename();
    INFO(name.string());
    CHECK(w.read("out" / name) == w.read("out2" / name));
    ++files;
  }
  CHECK(files == 16);

  // report grid: header + 7 rows per target
  std::istringstream in(w.read("out/report_regression.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "metric,target,row,top_2,top_4,top_6,top_8,top_10");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 14);

  // rank-delta table sorted by after-rank, with at least one improvement
  std::istringstream delta(w.read("out/rank_delta_qa.csv"));
  std::getline(delta, line);
  CHECK(line == "label,rank_before,rank_after,delta,improved");
  std::size_t expected = 1;
  bool improved = false;
  while (std::getline(delta, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 5);
    CHECK(std::stoul(f[2]) == expected++);
    improved |= f[4] == "1";
  }
  CHECK(improved);
}

TEST_CASE("identical before and after rankings give zero deltas") {
  Workspace w;
  auto cfg = small_config();
  cfg["report"] = {{"before", "before"}, {"after", "before"}, {"method", "mlr"}};
  w.write_config(cfg);
  for (const auto& step : {"synth", "ingest"}) REQUIRE(w.qfs(std::string(step) + " -c config.json") == 0);
  REQUIRE(w.qfs("rank -c config.json --method mlr") == 0);
  REQUIRE(w.qfs("report -c config.json") == 0);
  const auto j = nlohmann::json::parse(w.read("out/rank_delta_mlr.json"));
  REQUIRE(j["rows"].size() == 16);
  for (const auto& row : j["rows"]) {
    CHECK(row["delta"] == 0);
    CHECK(row["improved"] == false);
  }
}

TEST_CASE("ingest composes summed targets from a delimited file") {
  Workspace w;
  std::ofstream csv(w.dir / "survey.csv");
  csv << "id;f1;f2;gap";
  for (int i = 1; i <= 9; ++i) csv << ";t" << i;
  csv << "\n";
  for (int r = 0; r < 30; ++r) {
    csv << r << ';' << r % 5 << ';' << (r * 7) % 4 << ';' << (r == 3 ? "NA" : "1");
    for (int i = 1; i <= 9; ++i) csv << ';' << (r + i) % 3;
    csv << "\n";
  }
  csv.close();
  std::vector<std::string> items;
  for (int i = 1; i <= 9; ++i) items.push_back("t" + std::to_string(i));
  w.write_config({{"seed", 1},
                  {"output_dir", "out"},
                  {"input", {{"path", "survey.csv"}, {"delimiter", ";"}, {"missing", "NA"}}},
                  {"exclude", {"id"}},
                  {"targets", {{{"name", "score"}, {"items", items}}}}});
  REQUIRE(w.qfs("ingest -c config.json") == 0);
  const auto report = nlohmann::json::parse(w.read("out/preprocess_report.json"));
  CHECK(report["dropped_missing"] == nlohmann::json{"gap"});
  CHECK(report["final_shape"] == nlohmann::json{30, 3});
  const auto t = load_table((w.dir / "out/dataset.csv").string());
  CHECK(t.column_names() == std::vector<std::string>{"f1", "f2", "score"});
}
