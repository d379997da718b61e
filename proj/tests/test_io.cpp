#include <doctest.h>

#include <cmath>
#include <fstream>

#include "seplogit/estimators.hpp"
#include "seplogit/io.hpp"
#include "seplogit/rng.hpp"
#include "seplogit/selection.hpp"
#include "seplogit/simulation.hpp"
#include "testutil.hpp"

using namespace seplogit;

namespace {

StratifiedDataset random_dataset(std::size_t p, std::size_t K, std::size_t max_n, Rng& rng) {
  StratifiedDataset data;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t n = 1 + rng.below(max_n);
    BinaryObservationMatrix m(n, p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) m.set(i, j, rng.bernoulli(0.5) ? 1 : 0);
    data.strata.push_back(std::move(m));
    data.stratum_names.push_back("stratum" + std::to_string(k + 1));
  }
  for (std::size_t j = 0; j < p; ++j) data.variable_names.push_back("v" + std::to_string(j + 1));
  return data;
}

bool same_dataset(const StratifiedDataset& a, const StratifiedDataset& b) {
  if (a.stratum_names != b.stratum_names || a.variable_names != b.variable_names) return false;
  if (a.num_strata() != b.num_strata()) return false;
  for (std::size_t k = 0; k < a.num_strata(); ++k) {
    if (a.rows(k) != b.rows(k) || a.strata[k].num_cols() != b.strata[k].num_cols()) return false;
    for (std::size_t i = 0; i < a.rows(k); ++i)
      for (std::size_t j = 0; j < a.num_vars(); ++j)
        if (a.strata[k](i, j) != b.strata[k](i, j)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("dataset files round-trip exactly") {
  testutil::TempDir dir("seplogit_io");
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const StratifiedDataset data = random_dataset(2 + rng.below(5), 1 + rng.below(4), 20, rng);
    const std::string path = dir.file("data.csv");
    write_dataset_csv(data, path);
    CHECK(same_dataset(validate_dataset(read_dataset_csv(path)), data));
  }
}

TEST_CASE("dataset parser reports line numbers") {
  testutil::TempDir dir("seplogit_io");
  const std::string path = dir.file("bad.csv");
  {
    std::ofstream out(path);
    out << "stratum,a,b\nx,1,0\nx,1\n";
  }
  CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("line 3"), DataError);
  {
    std::ofstream out(path);
    out << "stratum,a,b\nx,1,zero\n";
  }
  CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("line 2"), DataError);
  {
    std::ofstream out(path);
    out << "";
  }
  CHECK_THROWS_AS(read_dataset_csv(path), DataError);
  CHECK_THROWS_AS(read_dataset_csv(dir.file("missing.csv")), DataError);
}

TEST_CASE("format_double is lossless") {
  Rng rng(66);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = rng.uniform(-1e3, 1e3) * std::pow(10.0, double(rng.below(9)) - 4.0);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
}

namespace {

EstimateDocument fitted_document(const StratifiedDataset& data, double min_or = 1.0) {
  GridSpec grid;
  grid.lambda1_count = 4;
  grid.lambda2_count = 4;
  const SelectionResult sel = select_by_grid(data, {EstimatorKind::DataShared, 0}, grid);
  const StratifiedGraphEstimate graph = symmetrize(sel.fits, {Rule::Min, {}});
  SelectionMeta meta;
  meta.estimator = "datashared";
  meta.rule = "min";
  meta.grid = grid;
  meta.seed = 7;
  meta.min_odds_ratio = min_or;
  meta.lambda1 = sel.chosen.lambda1;
  meta.lambda2 = sel.chosen.lambda2;
  meta.bic = sel.bic;
  meta.df = sel.df;
  return make_estimate_document(data, sel, graph, meta);
}

StratifiedDataset simulated(std::uint64_t seed, std::size_t p = 6, std::size_t K = 2,
                            std::size_t n = 200, double rho = 0.5) {
  const EdgeSet common = generate_common_structure(StructureKind::Chain, p, Rng::derive(seed, 0));
  const StratifiedTruth truth =
      build_stratified_parameters(common, p, rho, K, Rng::derive(seed, 1));
  return sample_dataset(truth, n, Rng::derive(seed, 2));
}

}  // namespace

TEST_CASE("estimate documents round-trip through JSON") {
  testutil::TempDir dir("seplogit_io");
  const StratifiedDataset data = simulated(70);
  const EstimateDocument doc = fitted_document(data);
  const std::string path = dir.file("estimate.json");
  write_estimate_json(doc, path);
  const EstimateDocument back = read_estimate_json(path);

  CHECK(back.p == doc.p);
  CHECK(back.K == doc.K);
  CHECK(back.stratum_names == doc.stratum_names);
  CHECK(back.variable_names == doc.variable_names);
  CHECK(back.selection.estimator == doc.selection.estimator);
  CHECK(back.selection.lambda1 == doc.selection.lambda1);
  CHECK(back.selection.lambda2 == doc.selection.lambda2);
  CHECK(back.selection.bic == doc.selection.bic);
  CHECK(back.selection.df == doc.selection.df);
  REQUIRE(back.interactions.size() == doc.interactions.size());
  for (std::size_t i = 0; i < doc.interactions.size(); ++i) {
    CHECK(back.interactions[i].j == doc.interactions[i].j);
    CHECK(back.interactions[i].l == doc.interactions[i].l);
    CHECK(back.interactions[i].values == doc.interactions[i].values);
  }
  CHECK(back.heterogeneous_pairs == doc.heterogeneous_pairs);
  CHECK(back.degenerate_fits == doc.degenerate_fits);

  CHECK_THROWS_AS(read_estimate_json(dir.file("nope.json")), DataError);
  write_dataset_csv(data, dir.file("data.csv"));
  CHECK_THROWS_AS(read_estimate_json(dir.file("data.csv")), DataError);
}

TEST_CASE("truth documents round-trip through JSON") {
  testutil::TempDir dir("seplogit_io");
  SimulationDesign design;
  design.p = 6;
  design.K = 3;
  design.rho = 0.5;
  design.n = 100;
  design.seed = 9;
  const EdgeSet common =
      generate_common_structure(design.structure, design.p, Rng::derive(design.seed, 0));
  const StratifiedTruth truth = build_stratified_parameters(common, design.p, design.rho,
                                                            design.K, Rng::derive(design.seed, 1));
  const TruthDocument doc = make_truth_document(truth, design);
  const std::string path = dir.file("truth.json");
  write_truth_json(doc, path);
  const TruthDocument back = read_truth_json(path);
  CHECK(back.p == doc.p);
  CHECK(back.K == doc.K);
  CHECK(back.structure == "chain");
  CHECK(back.rho == doc.rho);
  CHECK(back.interactions.size() == doc.interactions.size());
  CHECK(back.heterogeneous_pairs == doc.heterogeneous_pairs);
}

TEST_CASE("bench records round-trip losslessly and summarize correctly") {
  testutil::TempDir dir("seplogit_io");
  std::vector<BenchmarkRecord> records;
  Rng rng(77);
  for (int r = 0; r < 4; ++r) {
    BenchmarkRecord rec;
    rec.design_id = "chain_p5_K2_n100_rho0.5";
    rec.structure = StructureKind::Chain;
    rec.p = 5;
    rec.K = 2;
    rec.rho = 0.5;
    rec.replicate = r;
    rec.estimator = r % 2 ? "indep" : "datashared";
    rec.acc_s = rng.uniform01();
    rec.acc_h = rng.uniform01();
    rec.lambda1 = rng.uniform(0, 3);
    rec.lambda2 = rng.uniform(0, 3);
    rec.df = double(rng.below(40));
    rec.seconds = rng.uniform01();
    records.push_back(rec);
  }
  BenchmarkRecord failed;
  failed.design_id = "chain_p5_K2_n100_rho0.5";
  failed.structure = StructureKind::Chain;
  failed.p = 5;
  failed.K = 2;
  failed.rho = 0.5;
  failed.replicate = 4;
  failed.estimator = "indep";
  failed.failed = true;
  failed.seconds = 0.25;
  records.push_back(failed);

  const std::string path = dir.file("records.csv");
  write_bench_csv(records, path);
  const auto back = read_bench_csv(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].design_id == records[i].design_id);
    CHECK(back[i].replicate == records[i].replicate);
    CHECK(back[i].estimator == records[i].estimator);
    CHECK(back[i].failed == records[i].failed);
    if (!records[i].failed) {
      CHECK(back[i].acc_s == records[i].acc_s);
      CHECK(back[i].acc_h == records[i].acc_h);
      CHECK(back[i].lambda1 == records[i].lambda1);
      CHECK(back[i].lambda2 == records[i].lambda2);
      CHECK(back[i].df == records[i].df);
    }
    CHECK(back[i].seconds == records[i].seconds);
  }

  // Hand-averaged means per group appear in the summary.
  const std::string summary = bench_summary(back);
  double hs = 0.0, hh = 0.0;
  int n = 0;
  for (const auto& rec : records)
    if (!rec.failed && rec.estimator == "indep") {
      hs += rec.acc_s;
      hh += rec.acc_h;
      ++n;
    }
  char expect[128];
  std::snprintf(expect, sizeof(expect), "indep %d %.4f %.4f", n, hs / n, hh / n);
  CHECK(summary.find(expect) != std::string::npos);
  CHECK(summary.find("failed") != std::string::npos);
}

TEST_CASE("export writes one document per stratum with a full node list") {
  testutil::TempDir dir("seplogit_io");
  EstimateDocument doc;
  doc.p = 3;
  doc.K = 2;
  doc.stratum_names = {"alpha", "beta"};
  doc.variable_names = {"x", "y", "z"};
  doc.selection.estimator = "indep";
  doc.selection.rule = "min";

  SUBCASE("empty graph still lists every node") {
    const auto paths = export_graphs(doc, GraphFormat::Structured, 1.0, dir.file("g"));
    REQUIRE(paths.size() == 2);
    for (const auto& path : paths) {
      const std::string text = testutil::slurp(path);
      CHECK(text.find("\"x\"") != std::string::npos);
      CHECK(text.find("\"edges\": []") != std::string::npos);
    }
  }

  SUBCASE("odds-ratio filter keeps log(2) and drops 0.6") {
    doc.interactions.push_back({0, 1, {std::log(2.0), 0.0}});
    doc.interactions.push_back({0, 2, {0.6, 0.6}});
    const auto paths = export_graphs(doc, GraphFormat::Structured, 2.0, dir.file("f"));
    const std::string first = testutil::slurp(paths[0]);
    CHECK(first.find("\"source\": \"x\"") != std::string::npos);
    CHECK(first.find("\"target\": \"y\"") != std::string::npos);
    CHECK(first.find("\"z\"") != std::string::npos);              // node list
    CHECK(first.find("\"target\": \"z\"") == std::string::npos);  // edge dropped
    const std::string second = testutil::slurp(paths[1]);
    CHECK(second.find("\"target\": \"y\"") == std::string::npos);  // zero in stratum 2
  }

  SUBCASE("dot outputs share the node set across strata") {
    doc.interactions.push_back({1, 2, {0.9, 0.0}});
    const auto paths = export_graphs(doc, GraphFormat::Dot, 1.0, dir.file("d"));
    REQUIRE(paths.size() == 2);
    for (const auto& path : paths) {
      const std::string text = testutil::slurp(path);
      for (const char* node : {"\"x\";", "\"y\";", "\"z\";"})
        CHECK(text.find(node) != std::string::npos);
    }
    CHECK(testutil::slurp(paths[0]).find("--") != std::string::npos);
    CHECK(testutil::slurp(paths[1]).find("--") == std::string::npos);
  }

  CHECK_THROWS_AS(graph_format_from_string("svg"), DataError);
}
