#include "seplogit.h"

#include <algorithm>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "seplogit/estimators.hpp"
#include "seplogit/io.hpp"
#include "seplogit/rng.hpp"
#include "seplogit/selection.hpp"
#include "seplogit/simulation.hpp"
#include "seplogit/types.hpp"

struct seplogit_dataset {
  seplogit::StratifiedDataset impl;
};
struct seplogit_truth {
  seplogit::TruthDocument impl;
};
struct seplogit_estimate {
  seplogit::EstimateDocument impl;
};

namespace {

thread_local std::string g_last_error;

seplogit_status set_error(seplogit_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

/// Runs the body, translating exceptions into status codes.
template <typename Fn>
seplogit_status guarded(Fn&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const seplogit::DataError& ex) {
    return set_error(SEPLOGIT_ERR_DATA, ex.what());
  } catch (const seplogit::NumericError& ex) {
    return set_error(SEPLOGIT_ERR_NUMERIC, ex.what());
  } catch (const std::invalid_argument& ex) {
    return set_error(SEPLOGIT_ERR_USAGE, ex.what());
  } catch (const std::exception& ex) {
    return set_error(SEPLOGIT_ERR_NUMERIC, ex.what());
  }
}

seplogit_status require(bool condition, const char* message) {
  return condition ? SEPLOGIT_OK : set_error(SEPLOGIT_ERR_USAGE, message);
}

}  // namespace

extern "C" {

const char* seplogit_version(void) { return "0.1.0"; }

const char* seplogit_last_error(void) { return g_last_error.c_str(); }

seplogit_status seplogit_dataset_read(const char* path, seplogit_dataset** out) {
  if (require(path && out, "dataset_read: path and out must be non-NULL")) return SEPLOGIT_ERR_USAGE;
  return guarded([&] {
    auto* ds = new seplogit_dataset{seplogit::read_dataset(path)};
    *out = ds;
    return SEPLOGIT_OK;
  });
}

seplogit_status seplogit_dataset_write(const seplogit_dataset* data, const char* path) {
  if (require(data && path, "dataset_write: data and path must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&] {
    seplogit::write_dataset_csv(data->impl, path);
    return SEPLOGIT_OK;
  });
}

void seplogit_dataset_free(seplogit_dataset* data) { delete data; }

int seplogit_dataset_num_strata(const seplogit_dataset* data) {
  return data ? static_cast<int>(data->impl.num_strata()) : -1;
}

int seplogit_dataset_num_variables(const seplogit_dataset* data) {
  return data ? static_cast<int>(data->impl.num_vars()) : -1;
}

long seplogit_dataset_num_rows(const seplogit_dataset* data, int stratum) {
  if (!data || stratum < 0 || stratum >= static_cast<int>(data->impl.num_strata())) return -1;
  return static_cast<long>(data->impl.rows(static_cast<std::size_t>(stratum)));
}

const char* seplogit_dataset_stratum_name(const seplogit_dataset* data, int stratum) {
  if (!data || stratum < 0 || stratum >= static_cast<int>(data->impl.num_strata())) return nullptr;
  return data->impl.stratum_names[static_cast<std::size_t>(stratum)].c_str();
}

seplogit_status seplogit_simulate(const seplogit_sim_design* design, seplogit_dataset** data_out,
                                  seplogit_truth** truth_out) {
  if (require(design && design->structure && data_out && truth_out,
              "simulate: design, structure and out pointers must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&]() -> seplogit_status {
    if (design->p < 2 || design->k < 1 || design->n < 1)
      return set_error(SEPLOGIT_ERR_USAGE, "simulate: need p >= 2, k >= 1, n >= 1");
    seplogit::SimulationDesign d;
    d.structure = seplogit::structure_from_string(design->structure);
    d.p = static_cast<std::size_t>(design->p);
    d.K = static_cast<std::size_t>(design->k);
    d.n = static_cast<std::size_t>(design->n);
    d.rho = design->rho;
    d.replicates = 1;
    d.seed = design->seed;
    d.validate();

    const seplogit::EdgeSet common = seplogit::generate_common_structure(
        d.structure, d.p, seplogit::Rng::derive(d.seed, 0));
    seplogit::StratifiedTruth truth = seplogit::build_stratified_parameters(
        common, d.p, d.rho, d.K, seplogit::Rng::derive(d.seed, 1));
    seplogit::StratifiedDataset data =
        seplogit::sample_dataset(truth, d.n, seplogit::Rng::derive(d.seed, 2));

    *data_out = new seplogit_dataset{std::move(data)};
    *truth_out = new seplogit_truth{seplogit::make_truth_document(truth, d)};
    return SEPLOGIT_OK;
  });
}

seplogit_status seplogit_truth_write(const seplogit_truth* truth, const char* path) {
  if (require(truth && path, "truth_write: truth and path must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&] {
    seplogit::write_truth_json(truth->impl, path);
    return SEPLOGIT_OK;
  });
}

void seplogit_truth_free(seplogit_truth* truth) { delete truth; }

seplogit_status seplogit_fit(const seplogit_dataset* data, const seplogit_fit_options* options,
                             seplogit_estimate** out) {
  if (require(data && options && out && options->estimator && options->rule,
              "fit: data, options (estimator, rule) and out must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&]() -> seplogit_status {
    seplogit::EstimatorSpec spec;
    seplogit::SymmetrizationRule rule;
    try {
      spec.kind = seplogit::estimator_from_string(options->estimator);
      rule.rule = seplogit::rule_from_string(options->rule);
    } catch (const seplogit::DataError& ex) {
      return set_error(SEPLOGIT_ERR_USAGE, ex.what());
    }

    std::optional<std::string> reference;
    if (spec.kind == seplogit::EstimatorKind::RefLasso) {
      if (!options->reference)
        return set_error(SEPLOGIT_ERR_USAGE, "fit: reflasso requires a reference stratum label");
      reference = options->reference;
      const auto& names = data->impl.stratum_names;
      const auto it = std::find(names.begin(), names.end(), *reference);
      if (it == names.end())
        return set_error(SEPLOGIT_ERR_USAGE,
                         "fit: reference stratum '" + *reference + "' not in the dataset");
      spec.reference = static_cast<std::size_t>(it - names.begin());
    } else if (options->reference && options->reference[0] != '\0') {
      return set_error(SEPLOGIT_ERR_USAGE, "fit: --reference is only valid with reflasso");
    }

    if (options->min_odds_ratio < 0.0)
      return set_error(SEPLOGIT_ERR_USAGE, "fit: min odds ratio must be nonnegative");

    seplogit::GridSpec grid;
    if (options->grid_lambda1 > 0) grid.lambda1_count = options->grid_lambda1;
    if (options->grid_lambda2 > 0) grid.lambda2_count = options->grid_lambda2;

    seplogit::FitOptions fit_opts;
    fit_opts.jobs = options->jobs;
    if (options->lambda2_scale && options->lambda2_scale[0] != '\0') {
      const std::string scale = options->lambda2_scale;
      if (scale == "common")
        fit_opts.lambda2_scale = seplogit::FitOptions::Lambda2Scale::Common;
      else if (scale == "sqrt-n")
        fit_opts.lambda2_scale = seplogit::FitOptions::Lambda2Scale::SqrtN;
      else
        return set_error(SEPLOGIT_ERR_USAGE,
                         "fit: unknown lambda2 scale '" + scale + "' (expected common|sqrt-n)");
    }

    const seplogit::SelectionResult sel =
        seplogit::select_by_grid(data->impl, spec, grid, fit_opts);
    const seplogit::StratifiedGraphEstimate graph = seplogit::symmetrize(sel.fits, rule);

    seplogit::SelectionMeta meta;
    meta.estimator = options->estimator;
    meta.rule = options->rule;
    meta.reference = reference;
    meta.grid = grid;
    meta.lambda2_scale =
        fit_opts.lambda2_scale == seplogit::FitOptions::Lambda2Scale::SqrtN ? "sqrt-n" : "common";
    meta.seed = options->seed;
    meta.min_odds_ratio = options->min_odds_ratio > 0.0 ? options->min_odds_ratio : 1.0;
    meta.lambda1 = sel.chosen.lambda1;
    meta.lambda2 = sel.chosen.lambda2;
    meta.bic = sel.bic;
    meta.df = sel.df;

    *out = new seplogit_estimate{
        seplogit::make_estimate_document(data->impl, sel, graph, std::move(meta))};
    return SEPLOGIT_OK;
  });
}

seplogit_status seplogit_estimate_write(const seplogit_estimate* estimate, const char* path) {
  if (require(estimate && path, "estimate_write: estimate and path must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&] {
    seplogit::write_estimate_json(estimate->impl, path);
    return SEPLOGIT_OK;
  });
}

seplogit_status seplogit_estimate_read(const char* path, seplogit_estimate** out) {
  if (require(path && out, "estimate_read: path and out must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&] {
    *out = new seplogit_estimate{seplogit::read_estimate_json(path)};
    return SEPLOGIT_OK;
  });
}

void seplogit_estimate_free(seplogit_estimate* estimate) { delete estimate; }

double seplogit_estimate_lambda1(const seplogit_estimate* e) {
  return e ? e->impl.selection.lambda1 : -1.0;
}
double seplogit_estimate_lambda2(const seplogit_estimate* e) {
  if (!e || e->impl.selection.lambda2.empty()) return 0.0;
  return e->impl.selection.lambda2.front();
}
double seplogit_estimate_bic(const seplogit_estimate* e) {
  return e ? e->impl.selection.bic : -1.0;
}
double seplogit_estimate_df(const seplogit_estimate* e) {
  return e ? e->impl.selection.df : -1.0;
}
long seplogit_estimate_num_edges(const seplogit_estimate* e) {
  return e ? static_cast<long>(e->impl.interactions.size()) : -1;
}
long seplogit_estimate_num_heterogeneous(const seplogit_estimate* e) {
  return e ? static_cast<long>(e->impl.heterogeneous_pairs.size()) : -1;
}

seplogit_status seplogit_export(const seplogit_estimate* estimate, const char* format,
                                double min_odds_ratio, const char* prefix) {
  if (require(estimate && format && prefix, "export: estimate, format and prefix must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&]() -> seplogit_status {
    seplogit::GraphFormat fmt;
    try {
      fmt = seplogit::graph_format_from_string(format);
    } catch (const seplogit::DataError& ex) {
      return set_error(SEPLOGIT_ERR_USAGE, ex.what());
    }
    if (min_odds_ratio < 0.0)
      return set_error(SEPLOGIT_ERR_USAGE, "export: min odds ratio must be nonnegative");
    seplogit::export_graphs(estimate->impl, fmt, min_odds_ratio, prefix);
    return SEPLOGIT_OK;
  });
}

seplogit_status seplogit_bench(const seplogit_bench_options* options, const char* records_path) {
  if (require(options && records_path, "bench: options and records_path must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  if (require(options->structures && options->n_structures > 0,
              "bench: at least one structure is required"))
    return SEPLOGIT_ERR_USAGE;
  if (require(options->rhos && options->n_rhos > 0, "bench: at least one rho is required"))
    return SEPLOGIT_ERR_USAGE;
  if (require(options->estimators && options->n_estimators > 0,
              "bench: at least one estimator is required"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&]() -> seplogit_status {
    std::vector<seplogit::EstimatorSpec> estimators;
    for (int e = 0; e < options->n_estimators; ++e) {
      seplogit::EstimatorSpec spec;
      try {
        spec.kind = seplogit::estimator_from_string(options->estimators[e]);
      } catch (const seplogit::DataError& ex) {
        return set_error(SEPLOGIT_ERR_USAGE, ex.what());
      }
      if (spec.kind == seplogit::EstimatorKind::RefLasso)
        spec.reference = 0;  // the benchmark's strata are s1..sK; use the first
      estimators.push_back(spec);
    }

    seplogit::BenchOptions bench;
    if (options->grid_lambda1 > 0) bench.grid.lambda1_count = options->grid_lambda1;
    if (options->grid_lambda2 > 0) bench.grid.lambda2_count = options->grid_lambda2;
    if (options->rule && options->rule[0] != '\0') {
      try {
        bench.rule.rule = seplogit::rule_from_string(options->rule);
      } catch (const seplogit::DataError& ex) {
        return set_error(SEPLOGIT_ERR_USAGE, ex.what());
      }
    }
    bench.jobs = options->jobs;
    bench.record_timing = options->wall_timing != 0;

    std::vector<seplogit::BenchmarkRecord> records;
    std::uint64_t design_index = 0;
    for (int s = 0; s < options->n_structures; ++s) {
      for (int r = 0; r < options->n_rhos; ++r, ++design_index) {
        seplogit::SimulationDesign design;
        try {
          design.structure = seplogit::structure_from_string(options->structures[s]);
        } catch (const seplogit::DataError& ex) {
          return set_error(SEPLOGIT_ERR_USAGE, ex.what());
        }
        if (options->p < 2 || options->k < 1 || options->n < 1 || options->replicates < 1)
          return set_error(SEPLOGIT_ERR_USAGE,
                           "bench: need p >= 2, k >= 1, n >= 1, replicates >= 1");
        design.p = static_cast<std::size_t>(options->p);
        design.K = static_cast<std::size_t>(options->k);
        design.n = static_cast<std::size_t>(options->n);
        design.rho = options->rhos[r];
        design.replicates = options->replicates;
        design.seed = seplogit::Rng::derive(options->seed, design_index);
        design.validate();

        auto batch = seplogit::run_benchmark(design, estimators, bench);
        records.insert(records.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
      }
    }
    seplogit::write_bench_csv(records, records_path);
    return SEPLOGIT_OK;
  });
}

seplogit_status seplogit_bench_summary(const char* records_path, char** out_text) {
  if (require(records_path && out_text, "bench_summary: path and out must be non-NULL"))
    return SEPLOGIT_ERR_USAGE;
  return guarded([&] {
    const std::string text = seplogit::bench_summary(seplogit::read_bench_csv(records_path));
    char* copy = new char[text.size() + 1];
    std::memcpy(copy, text.c_str(), text.size() + 1);
    *out_text = copy;
    return SEPLOGIT_OK;
  });
}

void seplogit_string_free(char* text) { delete[] text; }

}  // extern "C"
