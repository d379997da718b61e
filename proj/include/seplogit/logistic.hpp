#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "seplogit/types.hpp"

namespace seplogit {

/// One penalized logistic regression: binary response, dense design, and a
/// per-column penalty layout. Columns with penalized[m] == 0 (typically the
/// intercept) are never shrunk; for the others the applied penalty is
/// lambda * weights[m].
struct LogisticProblem {
  Eigen::MatrixXd design;          // n x d
  Eigen::VectorXd response;        // n, entries 0/1
  std::vector<std::uint8_t> penalized;  // d
  Eigen::VectorXd weights;         // d, nonnegative

  void validate() const;
};

struct SolverOptions {
  double tol = 1e-7;       // stop when max coefficient change < tol
  double kkt_tol = 1e-7;   // subgradient optimality target
  int max_iter = 10000;    // outer iterations
  double coef_cap = kCoefCap;
  bool record_objective = false;
};

struct SolverReport {
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  bool cap_hit = false;
  std::vector<double> objective_trace;  // filled when record_objective
};

/// Minimizes -L(theta) + lambda * sum_m penalized_m * weights_m * |theta_m|
/// over the box |theta_m| <= coef_cap, where L is the logistic log-likelihood
/// (sum over observations). Cyclic coordinate descent on iteratively
/// reweighted quadratic approximations, with a monotonicity backtracking
/// safeguard. Convergence is declared on the subgradient (KKT) residual.
/// `warm_start`, when given and of matching size, seeds the iterate.
SolverReport fit_weighted_lasso_logistic(const LogisticProblem& problem, double lambda,
                                         const SolverOptions& opts = {},
                                         const Eigen::VectorXd* warm_start = nullptr);

/// Unpenalized fit (lambda = 0, all columns free), used for adaptive weights.
SolverReport fit_logistic_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                              const SolverOptions& opts = {});

/// Smallest lambda at which the all-zero solution of the penalized
/// coordinates satisfies the KKT conditions:
///   max_m |x_m^T (y - ybar)| / weights_m over penalized columns.
/// Throws DataError when the response is constant.
double lambda_max(const LogisticProblem& problem);

/// Logistic log-likelihood sum_i [y_i eta_i - log(1 + exp(eta_i))] at the
/// given coefficients.
double log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                      const Eigen::VectorXd& coefficients);

struct FusedOptions {
  double tol_abs = 1e-9;
  double tol_rel = 1e-9;
  int max_iter = 20000;
  double rho_init = 1.0;
  bool adaptive_rho = true;
  double coef_cap = kCoefCap;
};

/// ADMM state that may be carried between related calls (e.g. neighbouring
/// points of a regularization grid) to warm-start the solver.
struct FusedWarmState {
  bool valid = false;
  double rho = 1.0;
  std::vector<Eigen::VectorXd> theta, z, u;
};

/// Jointly minimizes, over K coefficient vectors theta^(k) sharing d columns,
///   sum_k [ -L_k(theta^(k)) + lambda1 * sum_m pen_m w_m |theta^(k)_m| ]
///     + lambda2 * sum_{k1<k2} || theta^(k1) - theta^(k2) ||_1
/// where the fused term runs over all d coordinates (intercept included).
/// ADMM with an exact per-coordinate fused proximal step; the returned
/// coefficients are the consensus variables, which carry exact zeros and
/// exact fusions. kkt_residual reports max(primal, dual) residual.
std::vector<SolverReport> fit_fused_logistic(const std::vector<LogisticProblem>& problems,
                                             double lambda1, double lambda2,
                                             const FusedOptions& opts = {},
                                             FusedWarmState* warm = nullptr);

namespace detail {

/// Exact minimizer of
///   sum_k q/2 (z_k - a_k)^2 + l1 sum_k |z_k| + l2 sum_{k1<k2} |z_k1 - z_k2|
/// subject to |z_k| <= cap. The minimizer preserves the ordering of the
/// targets, so after sorting the pairwise term is linear in the order
/// statistics and the problem reduces to isotonic regression of separable
/// convex functions, solved by pool-adjacent-violators with a closed-form
/// (soft-threshold + clamp) block minimizer.
void fused_prox(std::span<const double> targets, double q, double l1, double l2,
                double cap, std::span<double> out);

double log1pexp(double x);
double sigmoid(double x);

}  // namespace detail

}  // namespace seplogit
