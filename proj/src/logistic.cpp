#include "seplogit/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seplogit {

namespace detail {

double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

void LogisticProblem::validate() const {
  const auto n = design.rows();
  const auto d = design.cols();
  if (n == 0 || d == 0) throw DataError("logistic problem: empty design");
  if (response.size() != n) throw DataError("logistic problem: response length mismatch");
  if (static_cast<Eigen::Index>(penalized.size()) != d)
    throw DataError("logistic problem: penalty flag length mismatch");
  if (weights.size() != d) throw DataError("logistic problem: weight length mismatch");
  if (!design.allFinite()) throw DataError("logistic problem: design has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i)
    if (response[i] != 0.0 && response[i] != 1.0)
      throw DataError("logistic problem: response entries must be 0 or 1");
  for (Eigen::Index m = 0; m < d; ++m)
    if (!(weights[m] >= 0.0) || !std::isfinite(weights[m]))
      throw DataError("logistic problem: weights must be nonnegative and finite");
}

double log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                      const Eigen::VectorXd& coefficients) {
  const Eigen::VectorXd eta = design * coefficients;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += response[i] * eta[i] - detail::log1pexp(eta[i]);
  return ll;
}

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Penalized objective -L(theta) + sum_m omega_m |theta_m|.
double penalized_objective(const LogisticProblem& prob, const Eigen::VectorXd& omega,
                           const Eigen::VectorXd& theta) {
  double obj = -log_likelihood(prob.design, prob.response, theta);
  for (Eigen::Index m = 0; m < theta.size(); ++m)
    if (omega[m] > 0.0) obj += omega[m] * std::abs(theta[m]);
  return obj;
}

/// Subgradient residual of the box-constrained penalized problem at theta,
/// given the smooth-part gradient g = X^T (p - y).
double kkt_residual(const Eigen::VectorXd& g, const Eigen::VectorXd& omega,
                    const Eigen::VectorXd& theta, double cap) {
  double worst = 0.0;
  for (Eigen::Index m = 0; m < theta.size(); ++m) {
    const double t = theta[m];
    double viol;
    if (t >= cap - 1e-12) {
      viol = std::max(0.0, g[m] + omega[m]);
    } else if (t <= -cap + 1e-12) {
      viol = std::max(0.0, -(g[m] - omega[m]));
    } else if (t > 0.0) {
      viol = std::abs(g[m] + omega[m]);
    } else if (t < 0.0) {
      viol = std::abs(g[m] - omega[m]);
    } else {
      viol = std::max(0.0, std::abs(g[m]) - omega[m]);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace

SolverReport fit_weighted_lasso_logistic(const LogisticProblem& prob, double lambda,
                                         const SolverOptions& opts,
                                         const Eigen::VectorXd* warm_start) {
  prob.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw DataError("lasso: lambda must be nonnegative and finite");

  const Eigen::Index n = prob.design.rows();
  const Eigen::Index d = prob.design.cols();
  const double cap = opts.coef_cap;

  // Effective per-coordinate penalty.
  Eigen::VectorXd omega(d);
  for (Eigen::Index m = 0; m < d; ++m)
    omega[m] = prob.penalized[m] ? lambda * prob.weights[m] : 0.0;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  if (warm_start && warm_start->size() == d)
    theta = warm_start->cwiseMax(-cap).cwiseMin(cap);
  Eigen::VectorXd eta = prob.design * theta;
  Eigen::VectorXd prob_i(n), var_i(n), wres(n), curv(d);

  SolverReport report;
  double objective = penalized_objective(prob, omega, theta);
  if (opts.record_objective) report.objective_trace.push_back(objective);

  int iter = 0;
  double kkt = std::numeric_limits<double>::infinity();
  for (iter = 1; iter <= opts.max_iter; ++iter) {
    // IRLS quadratic approximation at the current iterate.
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = detail::sigmoid(eta[i]);
      prob_i[i] = pi;
      var_i[i] = std::max(pi * (1.0 - pi), 1e-6);
      wres[i] = prob.response[i] - pi;  // v_i * (z_i - eta_i)
    }
    for (Eigen::Index m = 0; m < d; ++m)
      curv[m] = prob.design.col(m).cwiseAbs2().dot(var_i);

    // Inner cyclic coordinate descent on the quadratic. The stop rule is on
    // |delta| * curvature, the scale of the gradient residual each update
    // leaves behind, so the outer KKT target stays reachable. Full sweeps
    // alternate with sweeps over the active (nonzero or unpenalized) set.
    const Eigen::VectorXd theta_before = theta;
    const double inner_tol = 0.1 * opts.kkt_tol;
    auto update = [&](Eigen::Index m) {
      if (curv[m] <= 1e-12) return 0.0;
      const double num = prob.design.col(m).dot(wres) + curv[m] * theta[m];
      double candidate = soft_threshold(num, omega[m]) / curv[m];
      candidate = std::clamp(candidate, -cap, cap);
      const double delta = candidate - theta[m];
      if (delta != 0.0) {
        wres -= delta * var_i.cwiseProduct(prob.design.col(m));
        theta[m] = candidate;
      }
      return std::abs(delta) * curv[m];
    };
    std::vector<Eigen::Index> active;
    active.reserve(d);
    for (int pass = 0; pass < 50; ++pass) {
      double full_delta = 0.0;
      active.clear();
      for (Eigen::Index m = 0; m < d; ++m) {
        full_delta = std::max(full_delta, update(m));
        if (theta[m] != 0.0 || omega[m] == 0.0) active.push_back(m);
      }
      if (full_delta < inner_tol) break;
      for (int sweep = 0; sweep < 1000; ++sweep) {
        double active_delta = 0.0;
        for (Eigen::Index m : active) active_delta = std::max(active_delta, update(m));
        if (active_delta < inner_tol) break;
      }
    }

    // Safeguard: the IRLS direction is a descent direction, so backtracking
    // toward the previous iterate restores monotone decrease if the full
    // quadratic step overshoots.
    eta = prob.design * theta;
    double new_objective = penalized_objective(prob, omega, theta);
    if (new_objective > objective + 1e-12) {
      double t = 0.5;
      const Eigen::VectorXd direction = theta - theta_before;
      while (t > 1e-6) {
        Eigen::VectorXd trial = theta_before + t * direction;
        const double trial_obj = penalized_objective(prob, omega, trial);
        if (trial_obj <= objective + 1e-12) {
          theta = std::move(trial);
          new_objective = trial_obj;
          break;
        }
        t *= 0.5;
      }
      if (new_objective > objective + 1e-12) theta = theta_before;
      eta = prob.design * theta;
      new_objective = penalized_objective(prob, omega, theta);
    }
    const double outer_delta = (theta - theta_before).cwiseAbs().maxCoeff();
    objective = new_objective;
    if (opts.record_objective) report.objective_trace.push_back(objective);

    // True-gradient optimality check.
    for (Eigen::Index i = 0; i < n; ++i) prob_i[i] = detail::sigmoid(eta[i]);
    const Eigen::VectorXd grad = prob.design.transpose() * (prob_i - prob.response);
    kkt = kkt_residual(grad, omega, theta, cap);
    if (kkt <= opts.kkt_tol) break;
    if (outer_delta < opts.tol) break;
  }

  report.coefficients = theta;
  report.objective = objective;
  report.iterations = std::min(iter, opts.max_iter);
  report.kkt_residual = kkt;
  report.converged = kkt <= opts.kkt_tol;
  report.cap_hit = (theta.cwiseAbs().maxCoeff() >= cap - 1e-9);
  return report;
}

SolverReport fit_logistic_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                              const SolverOptions& opts) {
  LogisticProblem prob;
  prob.design = design;
  prob.response = response;
  prob.penalized.assign(design.cols(), 0);
  prob.weights = Eigen::VectorXd::Ones(design.cols());
  return fit_weighted_lasso_logistic(prob, 0.0, opts);
}

double lambda_max(const LogisticProblem& prob) {
  prob.validate();
  const double ybar = prob.response.mean();
  if (ybar <= 0.0 || ybar >= 1.0)
    throw DataError("lambda_max: response is constant");
  const Eigen::VectorXd centered = prob.response.array() - ybar;
  double best = 0.0;
  for (Eigen::Index m = 0; m < prob.design.cols(); ++m) {
    if (!prob.penalized[m] || prob.weights[m] <= 0.0) continue;
    best = std::max(best, std::abs(prob.design.col(m).dot(centered)) / prob.weights[m]);
  }
  return best;
}

}  // namespace seplogit
