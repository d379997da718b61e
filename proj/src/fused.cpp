#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "seplogit/logistic.hpp"

namespace seplogit {

namespace detail {

namespace {
struct Block {
  double sum_targets;  // sum of a_i over the block
  double sum_coef;     // sum of the order-statistic coefficients c_i
  int count;
  double value;
};

double block_minimizer(const Block& b, double q, double l1, double l2, double cap) {
  // argmin over v of sum_{i in B} [ q/2 (v - a_i)^2 + l2 c_i v + l1 |v| ],
  // clamped into the box.
  double v = 0.0;
  const double num = q * b.sum_targets - l2 * b.sum_coef;
  const double t = l1 * b.count;
  if (num > t) v = (num - t) / (q * b.count);
  else if (num < -t) v = (num + t) / (q * b.count);
  return std::clamp(v, -cap, cap);
}
}  // namespace

void fused_prox(std::span<const double> targets, double q, double l1, double l2,
                double cap, std::span<double> out) {
  const std::size_t K = targets.size();
  if (out.size() != K) throw std::invalid_argument("fused_prox: output size mismatch");
  if (!(q > 0.0)) throw std::invalid_argument("fused_prox: quadratic weight must be positive");

  if (K == 1) {
    const double t = l1 / q;
    double v = 0.0;
    if (targets[0] > t) v = targets[0] - t;
    else if (targets[0] < -t) v = targets[0] + t;
    out[0] = std::clamp(v, -cap, cap);
    return;
  }

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });

  // In sorted order the pairwise term is linear: coefficient of the i-th
  // order statistic (1-indexed) is 2i - K - 1, valid on the monotone cone.
  std::vector<Block> stack;
  stack.reserve(K);
  for (std::size_t i = 0; i < K; ++i) {
    Block b{targets[order[i]], static_cast<double>(2 * (i + 1)) - static_cast<double>(K) - 1.0,
            1, 0.0};
    b.value = block_minimizer(b, q, l1, l2, cap);
    stack.push_back(b);
    while (stack.size() >= 2 && stack[stack.size() - 2].value > stack.back().value) {
      Block merged{stack[stack.size() - 2].sum_targets + stack.back().sum_targets,
                   stack[stack.size() - 2].sum_coef + stack.back().sum_coef,
                   stack[stack.size() - 2].count + stack.back().count, 0.0};
      merged.value = block_minimizer(merged, q, l1, l2, cap);
      stack.pop_back();
      stack.back() = merged;
    }
  }

  std::size_t rank = 0;
  for (const Block& b : stack)
    for (int c = 0; c < b.count; ++c) out[order[rank++]] = b.value;
}

}  // namespace detail

namespace {

/// theta-update subproblem: argmin -L(theta) + rho/2 ||theta - v||^2,
/// solved by damped Newton warm-started at `theta`. The gradient tolerance
/// tracks the ADMM tolerance: a subproblem solved only to eps displaces the
/// ADMM fixed point by roughly eps over the local curvature.
void ridge_logistic_newton(const LogisticProblem& prob, const Eigen::VectorXd& v, double rho,
                           double admm_tol_abs, Eigen::VectorXd& theta) {
  const Eigen::Index n = prob.design.rows();
  const double grad_tol = std::max(0.05 * admm_tol_abs * (1.0 + rho),
                                   1e-14 * static_cast<double>(n));

  Eigen::VectorXd eta = prob.design * theta;
  auto objective = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& et) {
    double obj = 0.5 * rho * (th - v).squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i)
      obj += detail::log1pexp(et[i]) - prob.response[i] * et[i];
    return obj;
  };
  double obj = objective(theta, eta);

  // Near the optimum the per-step decrease drops below double rounding on
  // the objective, so the acceptance test tolerates noise-level increases;
  // the iteration cap bounds any dithering at that floor.
  const double obj_noise = 1e-13 * (1.0 + std::abs(obj));
  Eigen::VectorXd probs(n), w(n);
  for (int it = 0; it < 60; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      probs[i] = detail::sigmoid(eta[i]);
      w[i] = std::max(probs[i] * (1.0 - probs[i]), 1e-9);
    }
    Eigen::VectorXd grad = prob.design.transpose() * (probs - prob.response) + rho * (theta - v);
    if (grad.cwiseAbs().maxCoeff() <= grad_tol) break;

    Eigen::MatrixXd hess = prob.design.transpose() * w.asDiagonal() * prob.design;
    hess.diagonal().array() += rho;
    Eigen::VectorXd step = hess.llt().solve(-grad);
    if (step.cwiseAbs().maxCoeff() <= 1e-16 * (1.0 + theta.cwiseAbs().maxCoeff())) break;

    double t = 1.0;
    bool accepted = false;
    while (t > 1e-8) {
      Eigen::VectorXd trial = theta + t * step;
      Eigen::VectorXd trial_eta = prob.design * trial;
      const double trial_obj = objective(trial, trial_eta);
      if (trial_obj <= obj + obj_noise) {
        theta = std::move(trial);
        eta = std::move(trial_eta);
        obj = trial_obj;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
}

double fused_objective(const std::vector<LogisticProblem>& problems,
                       const std::vector<Eigen::VectorXd>& z, double lambda1, double lambda2) {
  const std::size_t K = problems.size();
  const Eigen::Index d = problems.front().design.cols();
  double obj = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    obj -= log_likelihood(problems[k].design, problems[k].response, z[k]);
    for (Eigen::Index m = 0; m < d; ++m)
      if (problems[k].penalized[m])
        obj += lambda1 * problems[k].weights[m] * std::abs(z[k][m]);
  }
  for (std::size_t k1 = 0; k1 < K; ++k1)
    for (std::size_t k2 = k1 + 1; k2 < K; ++k2)
      obj += lambda2 * (z[k1] - z[k2]).cwiseAbs().sum();
  return obj;
}

}  // namespace

std::vector<SolverReport> fit_fused_logistic(const std::vector<LogisticProblem>& problems,
                                             double lambda1, double lambda2,
                                             const FusedOptions& opts, FusedWarmState* warm) {
  if (problems.empty()) throw DataError("fused: need at least one stratum problem");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
    throw DataError("fused: penalties must be nonnegative and finite");
  const std::size_t K = problems.size();
  const Eigen::Index d = problems.front().design.cols();
  for (const auto& prob : problems) {
    prob.validate();
    if (prob.design.cols() != d)
      throw DataError("fused: all strata must share the design column count");
    if (prob.penalized != problems.front().penalized)
      throw DataError("fused: penalty layout must match across strata");
  }

  std::vector<Eigen::VectorXd> theta(K), z(K), u(K);
  double rho = opts.rho_init;
  if (warm && warm->valid && warm->theta.size() == K && warm->theta[0].size() == d) {
    theta = warm->theta;
    z = warm->z;
    u = warm->u;
    rho = warm->rho;
  } else {
    for (std::size_t k = 0; k < K; ++k) {
      theta[k] = Eigen::VectorXd::Zero(d);
      z[k] = Eigen::VectorXd::Zero(d);
      u[k] = Eigen::VectorXd::Zero(d);
    }
  }

  const double sqrt_total = std::sqrt(static_cast<double>(K * d));
  std::vector<double> targets(K), prox_out(K);
  double primal_inf = 0.0, dual_inf = 0.0;
  bool converged = false;
  int iter = 0;

  for (iter = 1; iter <= opts.max_iter; ++iter) {
    for (std::size_t k = 0; k < K; ++k)
      ridge_logistic_newton(problems[k], z[k] - u[k], rho, opts.tol_abs, theta[k]);

    const std::vector<Eigen::VectorXd> z_prev = z;
    for (Eigen::Index m = 0; m < d; ++m) {
      for (std::size_t k = 0; k < K; ++k) targets[k] = theta[k][m] + u[k][m];
      const double l1 =
          problems.front().penalized[m] ? lambda1 * problems.front().weights[m] : 0.0;
      detail::fused_prox(targets, rho, l1, lambda2, opts.coef_cap, prox_out);
      for (std::size_t k = 0; k < K; ++k) z[k][m] = prox_out[k];
    }

    double primal_sq = 0.0, dual_sq = 0.0, theta_sq = 0.0, z_sq = 0.0, u_sq = 0.0;
    primal_inf = dual_inf = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::VectorXd r = theta[k] - z[k];
      const Eigen::VectorXd s = z[k] - z_prev[k];
      u[k] += r;
      primal_sq += r.squaredNorm();
      dual_sq += s.squaredNorm();
      theta_sq += theta[k].squaredNorm();
      z_sq += z[k].squaredNorm();
      u_sq += u[k].squaredNorm();
      primal_inf = std::max(primal_inf, r.cwiseAbs().maxCoeff());
      dual_inf = std::max(dual_inf, rho * s.cwiseAbs().maxCoeff());
    }
    const double eps_primal =
        sqrt_total * opts.tol_abs + opts.tol_rel * std::sqrt(std::max(theta_sq, z_sq));
    const double eps_dual =
        sqrt_total * opts.tol_abs + opts.tol_rel * rho * std::sqrt(u_sq);
    const double primal = std::sqrt(primal_sq);
    const double dual = rho * std::sqrt(dual_sq);
    if (primal <= eps_primal && dual <= eps_dual) {
      converged = true;
      break;
    }

    if (opts.adaptive_rho && iter % 10 == 0) {
      if (primal > 10.0 * dual && rho < 1e8) {
        rho *= 2.0;
        for (auto& uk : u) uk *= 0.5;
      } else if (dual > 10.0 * primal && rho > 1e-4) {
        rho *= 0.5;
        for (auto& uk : u) uk *= 2.0;
      }
    }
  }

  if (warm) {
    warm->valid = true;
    warm->rho = rho;
    warm->theta = theta;
    warm->z = z;
    warm->u = u;
  }

  const double objective = fused_objective(problems, z, lambda1, lambda2);
  std::vector<SolverReport> reports(K);
  for (std::size_t k = 0; k < K; ++k) {
    reports[k].coefficients = z[k];
    reports[k].objective = objective;
    reports[k].iterations = std::min(iter, opts.max_iter);
    reports[k].converged = converged;
    reports[k].kkt_residual = std::max(primal_inf, dual_inf);
    reports[k].cap_hit = (z[k].cwiseAbs().maxCoeff() >= opts.coef_cap - 1e-9);
  }
  return reports;
}

}  // namespace seplogit
