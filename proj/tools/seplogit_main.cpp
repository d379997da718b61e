// seplogit command line: simulate stratified binary data, fit stratified
// graphical models, run the simulation benchmark, and export graphs.
// Links only the public C API.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seplogit.h"

namespace {

int fail(seplogit_status status) {
  std::fprintf(stderr, "seplogit: %s\n", seplogit_last_error());
  return static_cast<int>(status);
}

/// Parses "l1:N,l2:M" (or bare "N,M" / "N") into grid sizes.
bool parse_grid(const std::string& spec, int& l1, int& l2) {
  if (spec.empty()) return true;
  std::size_t start = 0;
  int position = 0;
  while (start <= spec.size()) {
    auto end = spec.find(',', start);
    std::string token =
        spec.substr(start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? spec.size() + 1 : end + 1;
    if (token.empty()) return false;
    int* slot = nullptr;
    if (token.rfind("l1:", 0) == 0 || token.rfind("lambda1:", 0) == 0) {
      slot = &l1;
      token = token.substr(token.find(':') + 1);
    } else if (token.rfind("l2:", 0) == 0 || token.rfind("lambda2:", 0) == 0) {
      slot = &l2;
      token = token.substr(token.find(':') + 1);
    } else {
      slot = position == 0 ? &l1 : &l2;
    }
    try {
      const int value = std::stoi(token);
      if (value < 1) return false;
      *slot = value;
    } catch (...) {
      return false;
    }
    ++position;
  }
  return true;
}

struct CommonArgs {
  std::string grid;
  unsigned long long seed = 0;
  int jobs = 1;
};

void add_grid_seed_jobs(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--grid", args.grid, "Grid sizes as l1:count,l2:count (default 10,10)");
  cmd->add_option("--seed", args.seed, "Random seed / run identifier")->capture_default_str();
  cmd->add_option("--jobs", args.jobs, "Worker threads")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stratified binary graphical model estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", seplogit_version());

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Generate a stratified dataset and its truth");
  std::string sim_structure = "chain", sim_out, sim_truth;
  int sim_p = 10, sim_k = 3;
  long sim_n = 500;
  double sim_rho = 0.0;
  unsigned long long sim_seed = 0;
  sim->add_option("--structure", sim_structure, "chain|3nn|scale-free")->capture_default_str();
  sim->add_option("--p", sim_p, "Variable count")->capture_default_str();
  sim->add_option("--k", sim_k, "Stratum count")->capture_default_str();
  sim->add_option("--n", sim_n, "Observations per stratum")->capture_default_str();
  sim->add_option("--rho", sim_rho, "Heterogeneity ratio in [0,1]")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Dataset output path")->required();
  sim->add_option("--truth", sim_truth, "Truth output path")->required();

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "Estimate the K graphs from a dataset");
  std::string fit_in, fit_out, fit_estimator = "datashared", fit_rule = "min";
  std::string fit_reference, fit_lambda2_scale = "common";
  double fit_min_or = 1.0;
  CommonArgs fit_common;
  fit->add_option("input", fit_in, "Dataset file")->required();
  fit->add_option("--out", fit_out, "Estimate output path")->required();
  fit->add_option("--estimator", fit_estimator,
                  "indep|fused|datashared|datashared-adaptive|reflasso")
      ->capture_default_str();
  fit->add_option("--reference", fit_reference, "Reference stratum label (reflasso)");
  fit->add_option("--rule", fit_rule, "and|or|min|max")->capture_default_str();
  fit->add_option("--min-or", fit_min_or, "Keep pairs with exp(|coef|) >= this")
      ->capture_default_str();
  fit->add_option("--lambda2-scale", fit_lambda2_scale, "common|sqrt-n")->capture_default_str();
  add_grid_seed_jobs(fit, fit_common);

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Run the simulation benchmark");
  std::vector<std::string> bench_structures{"chain"};
  std::vector<double> bench_rhos{0.0};
  std::vector<std::string> bench_estimators{"indep", "datashared"};
  std::string bench_out, bench_rule = "min", bench_timing = "wall";
  int bench_p = 10, bench_k = 3, bench_replicates = 3;
  long bench_n = 500;
  CommonArgs bench_common;
  bench->add_option("--structure", bench_structures, "Structures (repeatable)")
      ->capture_default_str();
  bench->add_option("--rho", bench_rhos, "Heterogeneity ratios (repeatable)")
      ->capture_default_str();
  bench->add_option("--estimator", bench_estimators, "Estimators (repeatable)")
      ->capture_default_str();
  bench->add_option("--p", bench_p, "Variable count")->capture_default_str();
  bench->add_option("--k", bench_k, "Stratum count")->capture_default_str();
  bench->add_option("--n", bench_n, "Observations per stratum")->capture_default_str();
  bench->add_option("--replicates", bench_replicates, "Replicates per design")
      ->capture_default_str();
  bench->add_option("--rule", bench_rule, "Symmetrization rule")->capture_default_str();
  bench->add_option("--timing", bench_timing,
                    "wall: measured seconds; none: zeros, for byte-reproducible files")
      ->capture_default_str();
  bench->add_option("--out", bench_out, "Records CSV path")->required();
  add_grid_seed_jobs(bench, bench_common);

  // ---- export ----
  auto* exp = app.add_subcommand("export", "Export per-stratum graphs from an estimate");
  std::string exp_in, exp_format = "structured", exp_prefix;
  double exp_min_or = 1.0;
  exp->add_option("input", exp_in, "Estimate file")->required();
  exp->add_option("--format", exp_format, "structured|dot")->capture_default_str();
  exp->add_option("--min-or", exp_min_or, "Keep edges with exp(|coef|) >= this")
      ->capture_default_str();
  exp->add_option("--out-prefix", exp_prefix, "Output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1; --help/--version exit 0
  }

  if (sim->parsed()) {
    seplogit_sim_design design{sim_structure.c_str(), sim_p, sim_k, sim_n, sim_rho, sim_seed};
    seplogit_dataset* data = nullptr;
    seplogit_truth* truth = nullptr;
    seplogit_status st = seplogit_simulate(&design, &data, &truth);
    if (st != SEPLOGIT_OK) return fail(st);
    st = seplogit_dataset_write(data, sim_out.c_str());
    if (st == SEPLOGIT_OK) st = seplogit_truth_write(truth, sim_truth.c_str());
    seplogit_dataset_free(data);
    seplogit_truth_free(truth);
    if (st != SEPLOGIT_OK) return fail(st);
    std::printf("wrote %s and %s\n", sim_out.c_str(), sim_truth.c_str());
    return 0;
  }

  if (fit->parsed()) {
    int l1 = 10, l2 = 10;
    if (!parse_grid(fit_common.grid, l1, l2)) {
      std::fprintf(stderr, "seplogit: bad --grid spec '%s'\n", fit_common.grid.c_str());
      return 1;
    }
    seplogit_dataset* data = nullptr;
    seplogit_status st = seplogit_dataset_read(fit_in.c_str(), &data);
    if (st != SEPLOGIT_OK) return fail(st);

    seplogit_fit_options options{};
    options.estimator = fit_estimator.c_str();
    options.rule = fit_rule.c_str();
    options.reference = fit_reference.empty() ? nullptr : fit_reference.c_str();
    options.grid_lambda1 = l1;
    options.grid_lambda2 = l2;
    options.lambda2_scale = fit_lambda2_scale.c_str();
    options.min_odds_ratio = fit_min_or;
    options.seed = fit_common.seed;
    options.jobs = fit_common.jobs;

    seplogit_estimate* estimate = nullptr;
    st = seplogit_fit(data, &options, &estimate);
    seplogit_dataset_free(data);
    if (st != SEPLOGIT_OK) return fail(st);
    st = seplogit_estimate_write(estimate, fit_out.c_str());
    if (st != SEPLOGIT_OK) {
      seplogit_estimate_free(estimate);
      return fail(st);
    }
    std::printf("estimator=%s lambda1=%g lambda2=%g bic=%.6f df=%g edges=%ld heterogeneous=%ld\n",
                fit_estimator.c_str(), seplogit_estimate_lambda1(estimate),
                seplogit_estimate_lambda2(estimate), seplogit_estimate_bic(estimate),
                seplogit_estimate_df(estimate), seplogit_estimate_num_edges(estimate),
                seplogit_estimate_num_heterogeneous(estimate));
    std::printf("wrote %s\n", fit_out.c_str());
    seplogit_estimate_free(estimate);
    return 0;
  }

  if (bench->parsed()) {
    int l1 = 10, l2 = 10;
    if (!parse_grid(bench_common.grid, l1, l2)) {
      std::fprintf(stderr, "seplogit: bad --grid spec '%s'\n", bench_common.grid.c_str());
      return 1;
    }
    if (bench_timing != "wall" && bench_timing != "none") {
      std::fprintf(stderr, "seplogit: --timing must be wall or none\n");
      return 1;
    }
    std::vector<const char*> structures, estimators;
    for (const auto& s : bench_structures) structures.push_back(s.c_str());
    for (const auto& e : bench_estimators) estimators.push_back(e.c_str());

    seplogit_bench_options options{};
    options.structures = structures.data();
    options.n_structures = static_cast<int>(structures.size());
    options.p = bench_p;
    options.k = bench_k;
    options.n = bench_n;
    options.rhos = bench_rhos.data();
    options.n_rhos = static_cast<int>(bench_rhos.size());
    options.replicates = bench_replicates;
    options.seed = bench_common.seed;
    options.estimators = estimators.data();
    options.n_estimators = static_cast<int>(estimators.size());
    options.rule = bench_rule.c_str();
    options.grid_lambda1 = l1;
    options.grid_lambda2 = l2;
    options.jobs = bench_common.jobs;
    options.wall_timing = bench_timing == "wall" ? 1 : 0;

    seplogit_status st = seplogit_bench(&options, bench_out.c_str());
    if (st != SEPLOGIT_OK) return fail(st);
    char* summary = nullptr;
    st = seplogit_bench_summary(bench_out.c_str(), &summary);
    if (st != SEPLOGIT_OK) return fail(st);
    std::fputs(summary, stdout);
    seplogit_string_free(summary);
    std::printf("wrote %s\n", bench_out.c_str());
    return 0;
  }

  if (exp->parsed()) {
    seplogit_estimate* estimate = nullptr;
    seplogit_status st = seplogit_estimate_read(exp_in.c_str(), &estimate);
    if (st != SEPLOGIT_OK) return fail(st);
    st = seplogit_export(estimate, exp_format.c_str(), exp_min_or, exp_prefix.c_str());
    seplogit_estimate_free(estimate);
    if (st != SEPLOGIT_OK) return fail(st);
    std::printf("wrote %s_<stratum>.%s\n", exp_prefix.c_str(),
                exp_format == "dot" ? "dot" : "json");
    return 0;
  }

  return 1;
}
