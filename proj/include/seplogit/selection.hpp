#pragma once

#include <optional>
#include <vector>

#include "seplogit/estimators.hpp"
#include "seplogit/types.hpp"

namespace seplogit {

struct GridSpec {
  int lambda1_count = 10;
  int lambda2_count = 10;
  double min_ratio = 0.01;  // smallest grid point relative to the anchor

  void validate() const {
    if (lambda1_count < 1 || lambda2_count < 1)
      throw DataError("grid: counts must be >= 1");
    if (!(min_ratio > 0.0) || min_ratio > 1.0)
      throw DataError("grid: min_ratio must be in (0, 1]");
  }
};

struct GridPointScore {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double bic = 0.0;
  double df = 0.0;
};

struct SelectionResult {
  PenaltySpec chosen;
  double bic = 0.0;
  double df = 0.0;
  std::vector<GridPointScore> surface;
  std::vector<NodewiseCoefficients> fits;  // at the chosen grid point
  // Indep per-node mode: chosen lambda per (node, stratum).
  std::optional<std::vector<std::vector<double>>> per_node_lambdas;
};

/// BIC = sum_j [ -2 sum_k L(theta_j^(k); stratum k) + df_j log(sum_k n_k) ].
/// df_j counts distinct values: for fits without a decomposition, comp of
/// each slope coordinate's K-vector plus the number of distinct intercepts;
/// for shared/deviation fits, the nonzero free parameters (shared slopes and
/// all deviations) plus one for the unpenalized shared intercept.
/// Returns (bic, total df).
std::pair<double, double> bic_score(const std::vector<NodewiseCoefficients>& fits,
                                    const StratifiedDataset& data);

/// Fits the estimator at every point of a log-spaced (lambda1, lambda2) grid
/// anchored at the pooled-problem lambda_max, scores each point with
/// bic_score, and returns the minimizer (ties broken toward larger lambdas).
/// Node-wise sweeps run concurrently (opts.jobs) and are warm-started along
/// the grid.
SelectionResult select_by_grid(const StratifiedDataset& data, const EstimatorSpec& estimator,
                               const GridSpec& grid, const FitOptions& opts = {});

/// Indep-SepLogit with a separate lambda chosen per (node, stratum) by the
/// per-fit BIC -2 L + df log(n_k).
SelectionResult select_indep_per_node(const StratifiedDataset& data, const GridSpec& grid,
                                      const FitOptions& opts = {});

/// Anchor for the default grids: the largest pooled-problem lambda_max over
/// nodes. Throws when every node has a constant pooled response.
double grid_anchor(const StratifiedDataset& data);

std::vector<double> log_spaced_grid(double anchor, int count, double min_ratio);

}  // namespace seplogit
