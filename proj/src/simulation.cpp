#include "seplogit/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "seplogit/estimators.hpp"
#include "seplogit/ising.hpp"
#include "seplogit/parallel.hpp"
#include "seplogit/rng.hpp"

namespace seplogit {

const char* to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::Chain: return "chain";
    case StructureKind::ThreeNearestNeighbor: return "3nn";
    case StructureKind::ScaleFree: return "scale-free";
  }
  return "?";
}

StructureKind structure_from_string(const std::string& s) {
  if (s == "chain") return StructureKind::Chain;
  if (s == "3nn" || s == "three_nearest_neighbor" || s == "three-nearest-neighbor")
    return StructureKind::ThreeNearestNeighbor;
  if (s == "scale-free" || s == "scale_free" || s == "scalefree")
    return StructureKind::ScaleFree;
  throw DataError("unknown structure '" + s + "' (expected chain|3nn|scale-free)");
}

void SimulationDesign::validate() const {
  if (p < 2) throw DataError("design: p must be >= 2");
  if (K < 1) throw DataError("design: K must be >= 1");
  if (n < 1) throw DataError("design: n must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DataError("design: rho must be in [0, 1]");
  if (replicates < 1) throw DataError("design: replicates must be >= 1");
}

std::string SimulationDesign::id() const {
  char rho_buf[32];
  std::snprintf(rho_buf, sizeof(rho_buf), "%g", rho);
  return std::string(to_string(structure)) + "_p" + std::to_string(p) + "_K" +
         std::to_string(K) + "_n" + std::to_string(n) + "_rho" + rho_buf;
}

EdgeSet generate_common_structure(StructureKind kind, std::size_t p, std::uint64_t seed) {
  if (p < 2) throw DataError("structure: p must be >= 2");
  EdgeSet edges;
  switch (kind) {
    case StructureKind::Chain: {
      for (std::size_t j = 0; j + 1 < p; ++j) edges.emplace_back(j, j + 1);
      break;
    }
    case StructureKind::ThreeNearestNeighbor: {
      Rng rng(seed);
      std::vector<double> x(p), y(p);
      for (std::size_t i = 0; i < p; ++i) {
        x[i] = rng.uniform01();
        y[i] = rng.uniform01();
      }
      std::set<std::pair<std::size_t, std::size_t>> dedup;
      const std::size_t neighbors = std::min<std::size_t>(3, p - 1);
      for (std::size_t i = 0; i < p; ++i) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(p - 1);
        for (std::size_t l = 0; l < p; ++l) {
          if (l == i) continue;
          const double dx = x[i] - x[l];
          const double dy = y[i] - y[l];
          dist.emplace_back(dx * dx + dy * dy, l);
        }
        std::sort(dist.begin(), dist.end());
        for (std::size_t t = 0; t < neighbors; ++t) {
          const std::size_t l = dist[t].second;
          dedup.emplace(std::min(i, l), std::max(i, l));
        }
      }
      edges.assign(dedup.begin(), dedup.end());
      break;
    }
    case StructureKind::ScaleFree: {
      // Preferential attachment, one edge per arriving node: a tree.
      Rng rng(seed);
      std::vector<std::size_t> degree(p, 0);
      edges.emplace_back(0, 1);
      degree[0] = degree[1] = 1;
      for (std::size_t i = 2; i < p; ++i) {
        const std::size_t total = 2 * (i - 1);
        std::size_t t = static_cast<std::size_t>(rng.below(total));
        std::size_t target = 0;
        for (std::size_t l = 0; l < i; ++l) {
          if (t < degree[l]) {
            target = l;
            break;
          }
          t -= degree[l];
        }
        edges.emplace_back(target, i);
        ++degree[target];
        ++degree[i];
      }
      std::sort(edges.begin(), edges.end());
      break;
    }
  }
  return edges;
}

namespace {

double draw_weight(Rng& rng) {
  const double mag = rng.uniform(0.5, 1.0);
  return rng.bernoulli(0.5) ? mag : -mag;
}

}  // namespace

StratifiedTruth build_stratified_parameters(const EdgeSet& common, std::size_t p, double rho,
                                            std::size_t K, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DataError("truth: rho must be in [0, 1]");
  if (K < 1) throw DataError("truth: K must be >= 1");
  for (const auto& [j, l] : common)
    if (j >= l || l >= p) throw DataError("truth: invalid common edge");

  Rng rng(seed);

  // Shared weights on the common structure.
  std::vector<double> common_weights(common.size());
  for (auto& w : common_weights) w = draw_weight(rng);

  // Candidate pairs for stratum-specific edges: everything off the common
  // structure, in canonical order.
  std::set<std::pair<std::size_t, std::size_t>> common_set(common.begin(), common.end());
  EdgeSet candidates;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = j + 1; l < p; ++l)
      if (!common_set.count({j, l})) candidates.emplace_back(j, l);

  const std::size_t m = static_cast<std::size_t>(
      std::llround(rho * static_cast<double>(common.size())));
  if (m > candidates.size())
    throw DataError("truth: " + std::to_string(m) +
                    " stratum-specific edges requested but only " +
                    std::to_string(candidates.size()) + " non-common pairs exist");

  std::vector<IsingParameters> params(K, IsingParameters(p));
  std::vector<EdgeSet> specific(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t e = 0; e < common.size(); ++e)
      params[k].set_interaction(common[e].first, common[e].second, common_weights[e]);
    const auto picks = rng.sample_without_replacement(candidates.size(), m);
    for (std::size_t idx : picks) {
      const auto [j, l] = candidates[idx];
      params[k].set_interaction(j, l, draw_weight(rng));
      specific[k].emplace_back(j, l);
    }
    std::sort(specific[k].begin(), specific[k].end());
  }

  StratifiedTruth out{StratifiedIsingParameters(std::move(params)),
                      std::vector<std::uint8_t>(num_pairs(p), 0), common, std::move(specific)};
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = j + 1; l < p; ++l) {
      const double first = out.params.stratum(0).interaction(j, l);
      bool all_same = true;
      for (std::size_t k = 1; k < K; ++k)
        if (out.params.stratum(k).interaction(j, l) != first) {
          all_same = false;
          break;
        }
      out.z_star[pair_index(j, l, p)] = all_same ? 0 : 1;
    }
  }
  return out;
}

double acc_s(const StratifiedIsingParameters& truth, const StratifiedGraphEstimate& estimate) {
  const std::size_t p = truth.num_nodes();
  const std::size_t K = truth.num_strata();
  if (estimate.num_nodes() != p || estimate.num_strata() != K)
    throw DataError("acc_s: truth and estimate dimensions differ");

  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t agree = 0;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t l = j + 1; l < p; ++l) {
        const bool truth_nz = truth.stratum(k).interaction(j, l) != 0.0;
        const bool est_nz = std::abs(estimate.edge_weights(j, l)[k]) > kFuseTol;
        if (truth_nz == est_nz) ++agree;
      }
    }
    total += static_cast<double>(agree) / static_cast<double>(num_pairs(p));
  }
  return total / static_cast<double>(K);
}

double acc_h(std::span<const std::uint8_t> z_star, const StratifiedGraphEstimate& estimate) {
  const std::size_t p = estimate.num_nodes();
  if (z_star.size() != num_pairs(p))
    throw DataError("acc_h: indicator length does not match the estimate");
  std::size_t agree = 0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = j + 1; l < p; ++l) {
      const bool truth_het = z_star[pair_index(j, l, p)] != 0;
      if (truth_het == estimate.heterogeneous(j, l)) ++agree;
    }
  return static_cast<double>(agree) / static_cast<double>(num_pairs(p));
}

StratifiedDataset sample_dataset(const StratifiedTruth& truth, std::size_t n,
                                 std::uint64_t seed) {
  const std::size_t K = truth.params.num_strata();
  const std::size_t p = truth.params.num_nodes();
  StratifiedDataset data;
  for (std::size_t k = 0; k < K; ++k) {
    data.strata.push_back(sample(truth.params.stratum(k), n, Rng::derive(seed, k)));
    data.stratum_names.push_back("s" + std::to_string(k + 1));
  }
  for (std::size_t j = 0; j < p; ++j) data.variable_names.push_back("v" + std::to_string(j + 1));
  return data;
}

std::vector<BenchmarkRecord> run_benchmark(const SimulationDesign& design,
                                           const std::vector<EstimatorSpec>& estimators,
                                           const BenchOptions& opts) {
  design.validate();
  if (estimators.empty()) throw DataError("benchmark: no estimators requested");

  const int R = design.replicates;
  const std::size_t E = estimators.size();

  // Truths and datasets are derived per replicate so the whole sweep is
  // reproducible regardless of scheduling.
  std::vector<StratifiedTruth> truths;
  std::vector<StratifiedDataset> datasets;
  truths.reserve(R);
  datasets.reserve(R);
  for (int r = 0; r < R; ++r) {
    const std::uint64_t child = Rng::derive(design.seed, static_cast<std::uint64_t>(r));
    const EdgeSet common =
        generate_common_structure(design.structure, design.p, Rng::derive(child, 0));
    truths.push_back(
        build_stratified_parameters(common, design.p, design.rho, design.K, Rng::derive(child, 1)));
    datasets.push_back(sample_dataset(truths.back(), design.n, Rng::derive(child, 2)));
  }

  std::vector<BenchmarkRecord> records(static_cast<std::size_t>(R) * E);
  parallel_for(records.size(), opts.jobs, [&](std::size_t idx) {
    const int r = static_cast<int>(idx / E);
    const std::size_t e = idx % E;

    BenchmarkRecord rec;
    rec.design_id = design.id();
    rec.structure = design.structure;
    rec.p = design.p;
    rec.K = design.K;
    rec.rho = design.rho;
    rec.replicate = r;
    rec.estimator = to_string(estimators[e].kind);

    const auto start = std::chrono::steady_clock::now();
    try {
      FitOptions fit = opts.fit;
      fit.jobs = 1;  // parallelism lives at the (replicate, estimator) level
      const SelectionResult sel = select_by_grid(datasets[r], estimators[e], opts.grid, fit);
      const StratifiedGraphEstimate graph = symmetrize(sel.fits, opts.rule);
      rec.acc_s = acc_s(truths[r].params, graph);
      rec.acc_h = acc_h(truths[r].z_star, graph);
      rec.lambda1 = sel.chosen.lambda1;
      rec.lambda2 = sel.chosen.lambda2.empty() ? 0.0 : sel.chosen.lambda2.front();
      rec.df = sel.df;
    } catch (const std::exception& ex) {
      rec.failed = true;
      rec.error = ex.what();
    }
    if (opts.record_timing) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      rec.seconds = std::chrono::duration<double>(elapsed).count();
    }
    records[idx] = std::move(rec);
  });
  return records;
}

}  // namespace seplogit
