#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "seplogit/logistic.hpp"
#include "seplogit/types.hpp"

namespace seplogit {

struct FitOptions {
  SolverOptions solver;
  FusedOptions fused;
  enum class Lambda2Scale { Common, SqrtN } lambda2_scale = Lambda2Scale::Common;
  int jobs = 1;
};

/// Per-coefficient adaptive weights for the data-shared estimator, built from
/// unpenalized fits: shared coefficients use the pooled MLE, stratum
/// deviations use the gap between the per-stratum and pooled MLEs.
/// gamma[j][k] has length p (intercept deviation first, then slopes);
/// mu_slopes[j] has length p-1.
struct AdaptiveWeights {
  std::vector<Eigen::VectorXd> mu_slopes;
  std::vector<std::vector<Eigen::VectorXd>> gamma;
};

inline constexpr double kAdaptiveWeightCap = 1e6;

/// Design matrix [1 | U_{-j}] for the regression of node j within one
/// stratum, and the corresponding penalized logistic problem (intercept
/// unpenalized, unit weights on the slopes).
Eigen::MatrixXd nodewise_design(const BinaryObservationMatrix& m, std::size_t j);
Eigen::VectorXd nodewise_response(const BinaryObservationMatrix& m, std::size_t j);
LogisticProblem nodewise_problem(const BinaryObservationMatrix& m, std::size_t j);

/// Stacked per-node problem shared by the data-shared and reference-stratum
/// estimators. Columns: a block of p shared columns [1 | U_{-j}] over all
/// rows, then one p-column block per (non-reference) stratum that is zero
/// outside that stratum's rows. The object owns the design, so a
/// regularization-grid sweep can reuse it and warm-start from the previous
/// solution.
class StackedNodeProblem {
 public:
  static StackedNodeProblem datashared(const StratifiedDataset& data, std::size_t node);
  static StackedNodeProblem reflasso(const StratifiedDataset& data, std::size_t node,
                                     std::size_t reference);

  /// Solves at the given penalties (lambda2k is per stratum; the reference
  /// entry, if any, is ignored). Fills shared_part and deviations.
  NodewiseCoefficients solve(double lambda1, const std::vector<double>& lambda2k,
                             const AdaptiveWeights* adaptive, const SolverOptions& opts);

  /// Log-likelihood of the stacked problem at the last solution.
  double last_loglik() const { return last_loglik_; }
  void reset_warm_start() { warm_.resize(0); }

 private:
  StackedNodeProblem() = default;
  LogisticProblem problem_;
  std::size_t node_ = 0, p_ = 0, K_ = 0;
  std::optional<std::size_t> reference_;
  std::vector<std::size_t> block_start_;  // per stratum; reference -> npos
  Eigen::VectorXd warm_;
  double last_loglik_ = 0.0;
};

/// Per-stratum lasso logistic regressions, one independent fit per (node,
/// stratum). A stratum where the response is constant yields an
/// intercept-only fit at the magnitude cap, flagged degenerate.
std::vector<NodewiseCoefficients> fit_indep_seplogit(const StratifiedDataset& data,
                                                     const std::vector<double>& lambdas,
                                                     const FitOptions& opts = {});

/// Joint fit per node across strata with the fused penalty
/// lambda2 * sum_{k1<k2} ||theta^(k1) - theta^(k2)||_1 over whole coefficient
/// vectors (intercepts included) plus lambda1 on slopes.
std::vector<NodewiseCoefficients> fit_fused_seplogit(const StratifiedDataset& data,
                                                     double lambda1, double lambda2,
                                                     const FitOptions& opts = {});

/// Data-shared decomposition theta^(k) = mu + gamma^(k), reduced to one
/// weighted lasso on stacked data: the shared intercept is unpenalized,
/// shared slopes carry lambda1, each stratum block (intercept deviation
/// included) carries lambda2k[k].
std::vector<NodewiseCoefficients> fit_datashared_seplogit(
    const StratifiedDataset& data, double lambda1, const std::vector<double>& lambda2k,
    const AdaptiveWeights* adaptive = nullptr, const FitOptions& opts = {});

std::vector<double> expand_lambda2(double lambda2, const StratifiedDataset& data,
                                   FitOptions::Lambda2Scale scale);

AdaptiveWeights compute_adaptive_weights(const StratifiedDataset& data,
                                         const FitOptions& opts = {});

/// Reference-stratum reparametrization theta^(k) = theta^(r) + gamma^(k) with
/// gamma^(r) = 0: the reference block's slopes carry lambda1, each other
/// stratum's deviation block carries lambda2.
std::vector<NodewiseCoefficients> fit_reflasso_seplogit(const StratifiedDataset& data,
                                                        std::size_t reference, double lambda1,
                                                        double lambda2,
                                                        const FitOptions& opts = {});

/// Resolves the two directed estimates of every pair into one K-vector.
/// MIN/MAX pick the candidate with lower/higher complexity (comp), ties going
/// to the lower node index; AND keeps a stratum's edge only when both
/// directions are nonzero (smaller magnitude wins), OR when either is
/// (larger magnitude wins).
StratifiedGraphEstimate symmetrize(const std::vector<NodewiseCoefficients>& fits,
                                   const SymmetrizationRule& rule);

}  // namespace seplogit
