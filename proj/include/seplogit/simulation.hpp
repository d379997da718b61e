#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seplogit/selection.hpp"
#include "seplogit/types.hpp"

namespace seplogit {

enum class StructureKind { Chain, ThreeNearestNeighbor, ScaleFree };

const char* to_string(StructureKind kind);
StructureKind structure_from_string(const std::string& s);

struct SimulationDesign {
  StructureKind structure = StructureKind::Chain;
  std::size_t p = 10;
  std::size_t K = 3;
  std::size_t n = 500;      // observations per stratum
  double rho = 0.0;         // stratum-specific / common edge ratio
  int replicates = 1;
  std::uint64_t seed = 0;

  void validate() const;
  std::string id() const;
};

using EdgeSet = std::vector<std::pair<std::size_t, std::size_t>>;  // j < l, sorted

/// Common structure shared by all strata: chain (j, j+1); three nearest
/// neighbors of p uniform points on the unit square; or a preferential
/// attachment tree.
EdgeSet generate_common_structure(StructureKind kind, std::size_t p, std::uint64_t seed);

/// Simulation ground truth: per-stratum parameters, the heterogeneity
/// indicator over pairs, and the edge bookkeeping behind them.
struct StratifiedTruth {
  StratifiedIsingParameters params;
  std::vector<std::uint8_t> z_star;  // num_pairs(p)
  EdgeSet common;
  std::vector<EdgeSet> specific;  // per stratum
};

/// Common edges get one weight shared across strata; each stratum then
/// receives round(rho * |common|) extra edges outside the common structure.
/// All weights are drawn uniformly from [-1,-0.5] u [0.5,1]; main effects
/// are zero. z_star flags pairs whose K values are not all equal.
StratifiedTruth build_stratified_parameters(const EdgeSet& common, std::size_t p, double rho,
                                            std::size_t K, std::uint64_t seed);

/// Support-recovery accuracy averaged over strata:
/// mean_k #{pairs where truth and estimate agree on nonzero-ness} / (p(p-1)/2).
double acc_s(const StratifiedIsingParameters& truth, const StratifiedGraphEstimate& estimate);

/// Heterogeneity-recovery accuracy:
/// #{pairs where z_star and the estimated indicator agree} / (p(p-1)/2).
double acc_h(std::span<const std::uint8_t> z_star, const StratifiedGraphEstimate& estimate);

struct BenchmarkRecord {
  std::string design_id;
  StructureKind structure = StructureKind::Chain;
  std::size_t p = 0, K = 0;
  double rho = 0.0;
  int replicate = 0;
  std::string estimator;
  double acc_s = 0.0, acc_h = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double df = 0.0;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct BenchOptions {
  GridSpec grid;
  SymmetrizationRule rule;
  FitOptions fit;
  int jobs = 1;
  bool record_timing = true;
};

/// Runs every estimator on `replicates` independently generated datasets:
/// a child seed is derived per replicate, the truth rebuilt, n observations
/// per stratum sampled, the estimator fitted with BIC grid selection and
/// symmetrized, and Acc.S / Acc.H scored against the truth. Per-replicate
/// failures are recorded without aborting the sweep. Fully reproducible
/// given design.seed.
std::vector<BenchmarkRecord> run_benchmark(const SimulationDesign& design,
                                           const std::vector<EstimatorSpec>& estimators,
                                           const BenchOptions& opts = {});

/// Dataset sampled from the truth (exact sampling when p allows it, Gibbs
/// otherwise), with labels s1..sK and variables v1..vp.
StratifiedDataset sample_dataset(const StratifiedTruth& truth, std::size_t n,
                                 std::uint64_t seed);

}  // namespace seplogit
