#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "seplogit/io.hpp"
#include "testutil.hpp"

// Path injected by the build; the CLI binary under test.
#ifndef SEPLOGIT_CLI_PATH
#error "SEPLOGIT_CLI_PATH must be defined"
#endif

using namespace seplogit;

namespace {

int run_cli(const std::string& args, const std::string& log_path) {
  const std::string command =
      std::string(SEPLOGIT_CLI_PATH) + " " + args + " > " + log_path + " 2>&1";
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("simulate writes the expected dataset and truth") {
  testutil::TempDir dir("seplogit_cli");
  const std::string data_path = dir.file("d.csv");
  const std::string truth_path = dir.file("t.json");
  const int code = run_cli("simulate --structure chain --p 10 --k 3 --n 500 --rho 0.25 --seed 7 "
                           "--out " + data_path + " --truth " + truth_path,
                           dir.file("log.txt"));
  REQUIRE(code == 0);

  const StratifiedDataset data = read_dataset(data_path);
  CHECK(data.num_strata() == 3);
  CHECK(data.num_vars() == 10);
  CHECK(data.total_rows() == 1500);

  // chain p=10: 9 common edges; round(0.25 * 9) = 2 specific per stratum.
  const TruthDocument truth = read_truth_json(truth_path);
  std::vector<int> per_stratum_edges(3, 0);
  int common = 0;
  for (const auto& t : truth.interactions) {
    bool in_all = true;
    for (std::size_t k = 0; k < 3; ++k) in_all = in_all && t.values[k] != 0.0;
    if (in_all && t.values[0] == t.values[1] && t.values[1] == t.values[2]) {
      ++common;
      continue;
    }
    for (std::size_t k = 0; k < 3; ++k)
      if (t.values[k] != 0.0) ++per_stratum_edges[k];
  }
  CHECK(common == 9);
  for (int count : per_stratum_edges) CHECK(count == 2);
}

TEST_CASE("simulate at rho 0 produces identical per-stratum blocks") {
  testutil::TempDir dir("seplogit_cli");
  const std::string truth_path = dir.file("t.json");
  REQUIRE(run_cli("simulate --structure chain --p 8 --k 3 --n 50 --rho 0 --seed 3 --out " +
                      dir.file("d.csv") + " --truth " + truth_path,
                  dir.file("log.txt")) == 0);
  const TruthDocument truth = read_truth_json(truth_path);
  CHECK_FALSE(truth.interactions.empty());
  for (const auto& t : truth.interactions) {
    CHECK(t.values[0] == t.values[1]);
    CHECK(t.values[1] == t.values[2]);
  }
  CHECK(truth.heterogeneous_pairs.empty());
}

TEST_CASE("CLI runs are byte-identical given the same seed") {
  testutil::TempDir dir("seplogit_cli");
  auto simulate = [&](const std::string& suffix) {
    REQUIRE(run_cli("simulate --structure scale-free --p 7 --k 2 --n 120 --rho 0.5 --seed 11 "
                    "--out " + dir.file("d" + suffix + ".csv") + " --truth " +
                        dir.file("t" + suffix + ".json"),
                    dir.file("log.txt")) == 0);
  };
  simulate("1");
  simulate("2");
  CHECK(testutil::slurp(dir.file("d1.csv")) == testutil::slurp(dir.file("d2.csv")));
  CHECK(testutil::slurp(dir.file("t1.json")) == testutil::slurp(dir.file("t2.json")));

  auto fit = [&](const std::string& suffix) {
    REQUIRE(run_cli("fit " + dir.file("d1.csv") + " --estimator datashared --grid l1:3,l2:3 "
                    "--seed 11 --jobs 2 --out " + dir.file("e" + suffix + ".json"),
                    dir.file("log.txt")) == 0);
  };
  fit("1");
  fit("2");
  CHECK(testutil::slurp(dir.file("e1.json")) == testutil::slurp(dir.file("e2.json")));

  auto exp = [&](const std::string& suffix) {
    REQUIRE(run_cli("export " + dir.file("e1.json") + " --format dot --out-prefix " +
                        dir.file("g" + suffix),
                    dir.file("log.txt")) == 0);
  };
  exp("1");
  exp("2");
  CHECK(testutil::slurp(dir.file("g1_s1.dot")) == testutil::slurp(dir.file("g2_s1.dot")));
  CHECK(testutil::slurp(dir.file("g1_s2.dot")) == testutil::slurp(dir.file("g2_s2.dot")));
}

TEST_CASE("fit with K=1 and rule=or produces a single-stratum estimate") {
  testutil::TempDir dir("seplogit_cli");
  REQUIRE(run_cli("simulate --structure chain --p 6 --k 1 --n 400 --rho 0 --seed 5 --out " +
                      dir.file("d.csv") + " --truth " + dir.file("t.json"),
                  dir.file("log.txt")) == 0);
  REQUIRE(run_cli("fit " + dir.file("d.csv") + " --estimator indep --rule or --grid l1:6,l2:1 "
                  "--out " + dir.file("e.json"),
                  dir.file("log.txt")) == 0);
  const EstimateDocument doc = read_estimate_json(dir.file("e.json"));
  CHECK(doc.K == 1);
  CHECK(doc.selection.rule == "or");
  CHECK(doc.heterogeneous_pairs.empty());  // one stratum cannot be heterogeneous
}

TEST_CASE("fit --min-or filters the exported pairs") {
  testutil::TempDir dir("seplogit_cli");
  REQUIRE(run_cli("simulate --structure chain --p 6 --k 2 --n 300 --rho 0.5 --seed 13 --out " +
                      dir.file("d.csv") + " --truth " + dir.file("t.json"),
                  dir.file("log.txt")) == 0);
  REQUIRE(run_cli("fit " + dir.file("d.csv") + " --estimator indep --grid l1:6,l2:1 --min-or 2 "
                  "--out " + dir.file("e.json"),
                  dir.file("log.txt")) == 0);
  const EstimateDocument doc = read_estimate_json(dir.file("e.json"));
  for (const auto& t : doc.interactions) {
    double best = 0.0;
    for (double v : t.values) best = std::max(best, std::exp(std::abs(v)));
    CHECK(best >= 2.0);
  }
}

TEST_CASE("datashared identifies fewer heterogeneous pairs than indep on homogeneous data") {
  testutil::TempDir dir("seplogit_cli");
  REQUIRE(run_cli("simulate --structure chain --p 6 --k 3 --n 400 --rho 0 --seed 17 --out " +
                      dir.file("d.csv") + " --truth " + dir.file("t.json"),
                  dir.file("log.txt")) == 0);
  REQUIRE(run_cli("fit " + dir.file("d.csv") + " --estimator datashared --grid 5,5 --jobs 2 "
                  "--out " + dir.file("ds.json"),
                  dir.file("log.txt")) == 0);
  REQUIRE(run_cli("fit " + dir.file("d.csv") + " --estimator indep --grid 5,5 --jobs 2 --out " +
                      dir.file("in.json"),
                  dir.file("log.txt")) == 0);
  const EstimateDocument ds = read_estimate_json(dir.file("ds.json"));
  const EstimateDocument in = read_estimate_json(dir.file("in.json"));
  CHECK(ds.heterogeneous_pairs.size() < in.heterogeneous_pairs.size());
}

TEST_CASE("reflasso requires a valid reference label") {
  testutil::TempDir dir("seplogit_cli");
  REQUIRE(run_cli("simulate --structure chain --p 5 --k 2 --n 150 --rho 0 --seed 19 --out " +
                      dir.file("d.csv") + " --truth " + dir.file("t.json"),
                  dir.file("log.txt")) == 0);
  CHECK(run_cli("fit " + dir.file("d.csv") + " --estimator reflasso --reference nosuch --out " +
                    dir.file("e.json"),
                dir.file("log.txt")) == 1);
  CHECK(run_cli("fit " + dir.file("d.csv") + " --estimator reflasso --reference s2 "
                "--grid 3,3 --out " + dir.file("e.json"),
                dir.file("log.txt")) == 0);
  const EstimateDocument doc = read_estimate_json(dir.file("e.json"));
  REQUIRE(doc.selection.reference.has_value());
  CHECK(*doc.selection.reference == "s2");
}

TEST_CASE("bench writes one record per design-replicate-estimator") {
  testutil::TempDir dir("seplogit_cli");
  const std::string out = dir.file("records.csv");
  REQUIRE(run_cli("bench --structure chain --structure scale-free --rho 0.5 --p 5 --k 2 --n 100 "
                  "--replicates 3 --estimator indep --estimator datashared --grid 3,3 --seed 23 "
                  "--jobs 2 --timing none --out " + out,
                  dir.file("log.txt")) == 0);
  const auto records = read_bench_csv(out);
  CHECK(records.size() == 12);  // 2 designs x 2 estimators x 3 replicates

  // Byte-identical rerun with --timing none.
  const std::string out2 = dir.file("records2.csv");
  REQUIRE(run_cli("bench --structure chain --structure scale-free --rho 0.5 --p 5 --k 2 --n 100 "
                  "--replicates 3 --estimator indep --estimator datashared --grid 3,3 --seed 23 "
                  "--jobs 2 --timing none --out " + out2,
                  dir.file("log.txt")) == 0);
  CHECK(testutil::slurp(out) == testutil::slurp(out2));

  // The printed summary means match hand-averaged records.
  const std::string log = testutil::slurp(dir.file("log.txt"));
  double acc_s = 0.0;
  int n = 0;
  for (const auto& rec : records)
    if (rec.estimator == "indep" && rec.design_id.rfind("chain", 0) == 0) {
      acc_s += rec.acc_s;
      ++n;
    }
  char expect[64];
  std::snprintf(expect, sizeof(expect), "%.4f", acc_s / n);
  CHECK(log.find(expect) != std::string::npos);
}

TEST_CASE("CLI exit codes distinguish usage and data errors") {
  testutil::TempDir dir("seplogit_cli");
  CHECK(run_cli("fit", dir.file("log.txt")) == 1);                     // missing args
  CHECK(run_cli("frobnicate", dir.file("log.txt")) == 1);              // unknown command
  CHECK(run_cli("fit " + dir.file("absent.csv") + " --out " + dir.file("e.json"),
                dir.file("log.txt")) == 2);                            // unreadable data
  {
    std::ofstream out(dir.file("tiny.csv"));
    out << "stratum,a,b\nx,1,0\nx,0,1\n";
  }
  CHECK(run_cli("fit " + dir.file("tiny.csv") + " --estimator bogus --out " +
                    dir.file("e.json"),
                dir.file("log.txt")) == 1);                            // unknown estimator
  CHECK(run_cli("export " + dir.file("absent.json") + " --out-prefix " + dir.file("g"),
                dir.file("log.txt")) == 2);
  CHECK(run_cli("--version", dir.file("log.txt")) == 0);
  CHECK(run_cli("--help", dir.file("log.txt")) == 0);

  // Data errors carry a message.
  run_cli("fit " + dir.file("absent.csv") + " --out " + dir.file("e.json"), dir.file("log.txt"));
  CHECK(testutil::slurp(dir.file("log.txt")).find("seplogit:") != std::string::npos);
}
