#include "seplogit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seplogit/parallel.hpp"

namespace seplogit {

Eigen::MatrixXd nodewise_design(const BinaryObservationMatrix& m, std::size_t j) {
  const std::size_t n = m.num_rows();
  const std::size_t p = m.num_cols();
  Eigen::MatrixXd design(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    std::size_t c = 1;
    for (std::size_t l = 0; l < p; ++l)
      if (l != j) design(i, c++) = m(i, l);
  }
  return design;
}

Eigen::VectorXd nodewise_response(const BinaryObservationMatrix& m, std::size_t j) {
  Eigen::VectorXd y(m.num_rows());
  for (std::size_t i = 0; i < m.num_rows(); ++i) y[i] = m(i, j);
  return y;
}

LogisticProblem nodewise_problem(const BinaryObservationMatrix& m, std::size_t j) {
  LogisticProblem prob;
  prob.design = nodewise_design(m, j);
  prob.response = nodewise_response(m, j);
  prob.penalized.assign(m.num_cols(), 1);
  prob.penalized[0] = 0;  // intercept
  prob.weights = Eigen::VectorXd::Ones(m.num_cols());
  return prob;
}

namespace {

bool constant_response(const Eigen::VectorXd& y) {
  const double ybar = y.mean();
  return ybar <= 0.0 || ybar >= 1.0;
}

NodewiseCoefficients make_empty_fit(std::size_t node, std::size_t p, std::size_t K) {
  NodewiseCoefficients out;
  out.node = node;
  out.p = p;
  out.intercepts.assign(K, 0.0);
  out.slopes.assign(K, std::vector<double>(p - 1, 0.0));
  out.degenerate.assign(K, 0);
  return out;
}

constexpr std::size_t kNoBlock = static_cast<std::size_t>(-1);

}  // namespace

StackedNodeProblem StackedNodeProblem::datashared(const StratifiedDataset& data,
                                                  std::size_t node) {
  StackedNodeProblem out;
  out.node_ = node;
  out.p_ = data.num_vars();
  out.K_ = data.num_strata();
  out.reference_ = std::nullopt;

  const std::size_t p = out.p_;
  const std::size_t K = out.K_;
  const std::size_t N = data.total_rows();
  const std::size_t d = p * (K + 1);

  out.problem_.design = Eigen::MatrixXd::Zero(N, d);
  out.problem_.response.resize(N);
  out.problem_.penalized.assign(d, 1);
  out.problem_.penalized[0] = 0;  // shared intercept
  out.problem_.weights = Eigen::VectorXd::Zero(d);
  out.block_start_.assign(K, kNoBlock);

  std::size_t row = 0;
  for (std::size_t k = 0; k < K; ++k) {
    out.block_start_[k] = p * (1 + k);
    const auto& m = data.strata[k];
    for (std::size_t i = 0; i < m.num_rows(); ++i, ++row) {
      out.problem_.response[row] = m(i, node);
      out.problem_.design(row, 0) = 1.0;
      std::size_t c = 1;
      for (std::size_t l = 0; l < p; ++l)
        if (l != node) out.problem_.design(row, c++) = m(i, l);
      out.problem_.design.row(row).segment(out.block_start_[k], p) =
          out.problem_.design.row(row).segment(0, p);
    }
  }
  return out;
}

StackedNodeProblem StackedNodeProblem::reflasso(const StratifiedDataset& data, std::size_t node,
                                                std::size_t reference) {
  if (reference >= data.num_strata())
    throw DataError("reflasso: reference stratum out of range");
  StackedNodeProblem out;
  out.node_ = node;
  out.p_ = data.num_vars();
  out.K_ = data.num_strata();
  out.reference_ = reference;

  const std::size_t p = out.p_;
  const std::size_t K = out.K_;
  const std::size_t N = data.total_rows();
  const std::size_t d = p * K;  // reference block + K-1 deviation blocks

  out.problem_.design = Eigen::MatrixXd::Zero(N, d);
  out.problem_.response.resize(N);
  out.problem_.penalized.assign(d, 1);
  out.problem_.penalized[0] = 0;  // reference intercept
  out.problem_.weights = Eigen::VectorXd::Zero(d);
  out.block_start_.assign(K, kNoBlock);

  std::size_t next_block = p;
  for (std::size_t k = 0; k < K; ++k) {
    if (k == reference) continue;
    out.block_start_[k] = next_block;
    next_block += p;
  }

  std::size_t row = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = data.strata[k];
    for (std::size_t i = 0; i < m.num_rows(); ++i, ++row) {
      out.problem_.response[row] = m(i, node);
      out.problem_.design(row, 0) = 1.0;
      std::size_t c = 1;
      for (std::size_t l = 0; l < p; ++l)
        if (l != node) out.problem_.design(row, c++) = m(i, l);
      if (out.block_start_[k] != kNoBlock)
        out.problem_.design.row(row).segment(out.block_start_[k], p) =
            out.problem_.design.row(row).segment(0, p);
    }
  }
  return out;
}

NodewiseCoefficients StackedNodeProblem::solve(double lambda1,
                                               const std::vector<double>& lambda2k,
                                               const AdaptiveWeights* adaptive,
                                               const SolverOptions& opts) {
  const std::size_t p = p_;
  const std::size_t K = K_;
  if (lambda2k.size() != K)
    throw DataError("stacked solve: need one lambda2 per stratum");

  // Fold the absolute penalty amounts into the per-column weights and run
  // the solver at lambda = 1, so shared and stratum blocks can carry
  // different lambdas in one solve.
  for (std::size_t c = 1; c < p; ++c) {
    const double aw = adaptive ? adaptive->mu_slopes[node_][c - 1] : 1.0;
    problem_.weights[c] = lambda1 * aw;
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (block_start_[k] == kNoBlock) continue;
    for (std::size_t c = 0; c < p; ++c) {
      const double aw = adaptive ? adaptive->gamma[node_][k][c] : 1.0;
      problem_.weights[block_start_[k] + c] = lambda2k[k] * aw;
    }
  }

  const SolverReport rep = fit_weighted_lasso_logistic(
      problem_, 1.0, opts, warm_.size() > 0 ? &warm_ : nullptr);
  warm_ = rep.coefficients;
  last_loglik_ = log_likelihood(problem_.design, problem_.response, rep.coefficients);

  NodewiseCoefficients fit = make_empty_fit(node_, p, K);
  std::vector<double> shared(rep.coefficients.data(), rep.coefficients.data() + p);
  std::vector<std::vector<double>> gamma(K, std::vector<double>(p, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    if (block_start_[k] == kNoBlock) continue;
    for (std::size_t c = 0; c < p; ++c) gamma[k][c] = rep.coefficients[block_start_[k] + c];
  }
  for (std::size_t k = 0; k < K; ++k) {
    fit.intercepts[k] = shared[0] + gamma[k][0];
    for (std::size_t c = 0; c + 1 < p; ++c) fit.slopes[k][c] = shared[c + 1] + gamma[k][c + 1];
    if (rep.cap_hit) fit.degenerate[k] = 1;
  }
  fit.shared_part = std::move(shared);
  fit.deviations = std::move(gamma);
  return fit;
}

std::vector<NodewiseCoefficients> fit_indep_seplogit(const StratifiedDataset& data,
                                                     const std::vector<double>& lambdas,
                                                     const FitOptions& opts) {
  data.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();
  if (lambdas.size() != K) throw DataError("indep: need one lambda per stratum");
  for (double l : lambdas)
    if (!(l >= 0.0) || !std::isfinite(l))
      throw DataError("indep: lambdas must be nonnegative and finite");

  std::vector<NodewiseCoefficients> fits(p);
  parallel_for(p, opts.jobs, [&](std::size_t j) {
    NodewiseCoefficients fit = make_empty_fit(j, p, K);
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::VectorXd y = nodewise_response(data.strata[k], j);
      if (constant_response(y)) {
        fit.intercepts[k] = y.mean() >= 1.0 ? kCoefCap : -kCoefCap;
        fit.degenerate[k] = 1;
        continue;
      }
      LogisticProblem prob = nodewise_problem(data.strata[k], j);
      const SolverReport rep = fit_weighted_lasso_logistic(prob, lambdas[k], opts.solver);
      fit.intercepts[k] = rep.coefficients[0];
      for (std::size_t c = 0; c + 1 < p; ++c) fit.slopes[k][c] = rep.coefficients[c + 1];
      if (rep.cap_hit) fit.degenerate[k] = 1;
    }
    fits[j] = std::move(fit);
  });
  return fits;
}

std::vector<NodewiseCoefficients> fit_fused_seplogit(const StratifiedDataset& data,
                                                     double lambda1, double lambda2,
                                                     const FitOptions& opts) {
  data.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();

  std::vector<NodewiseCoefficients> fits(p);
  parallel_for(p, opts.jobs, [&](std::size_t j) {
    std::vector<LogisticProblem> problems;
    problems.reserve(K);
    for (std::size_t k = 0; k < K; ++k) problems.push_back(nodewise_problem(data.strata[k], j));
    const auto reports = fit_fused_logistic(problems, lambda1, lambda2, opts.fused);

    NodewiseCoefficients fit = make_empty_fit(j, p, K);
    for (std::size_t k = 0; k < K; ++k) {
      fit.intercepts[k] = reports[k].coefficients[0];
      for (std::size_t c = 0; c + 1 < p; ++c) fit.slopes[k][c] = reports[k].coefficients[c + 1];
      if (reports[k].cap_hit) fit.degenerate[k] = 1;
    }
    fits[j] = std::move(fit);
  });
  return fits;
}

std::vector<double> expand_lambda2(double lambda2, const StratifiedDataset& data,
                                   FitOptions::Lambda2Scale scale) {
  const std::size_t K = data.num_strata();
  std::vector<double> out(K, lambda2);
  if (scale == FitOptions::Lambda2Scale::SqrtN) {
    const double total = static_cast<double>(data.total_rows());
    for (std::size_t k = 0; k < K; ++k)
      out[k] = lambda2 * std::sqrt(static_cast<double>(data.rows(k)) / total);
  }
  return out;
}

std::vector<NodewiseCoefficients> fit_datashared_seplogit(
    const StratifiedDataset& data, double lambda1, const std::vector<double>& lambda2k,
    const AdaptiveWeights* adaptive, const FitOptions& opts) {
  data.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();
  if (lambda2k.size() != K) throw DataError("datashared: need one lambda2 per stratum");
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1))
    throw DataError("datashared: lambda1 must be nonnegative and finite");
  for (double l : lambda2k)
    if (!(l >= 0.0) || !std::isfinite(l))
      throw DataError("datashared: lambda2 must be nonnegative and finite");

  std::vector<NodewiseCoefficients> fits(p);
  parallel_for(p, opts.jobs, [&](std::size_t j) {
    StackedNodeProblem node = StackedNodeProblem::datashared(data, j);
    fits[j] = node.solve(lambda1, lambda2k, adaptive, opts.solver);
  });
  return fits;
}

AdaptiveWeights compute_adaptive_weights(const StratifiedDataset& data, const FitOptions& opts) {
  data.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();

  auto weight_of = [](double estimate) {
    const double mag = std::abs(estimate);
    if (mag <= 1.0 / kAdaptiveWeightCap) return kAdaptiveWeightCap;
    return std::clamp(1.0 / mag, 1.0 / kCoefCap, kAdaptiveWeightCap);
  };

  AdaptiveWeights out;
  out.mu_slopes.assign(p, Eigen::VectorXd::Ones(p - 1));
  out.gamma.assign(p, std::vector<Eigen::VectorXd>(K, Eigen::VectorXd::Ones(p)));

  SolverOptions mle_opts = opts.solver;
  mle_opts.kkt_tol = std::max(opts.solver.kkt_tol, 1e-6);

  parallel_for(p, opts.jobs, [&](std::size_t j) {
    // Pooled unpenalized fit for the shared part.
    const std::size_t N = data.total_rows();
    Eigen::MatrixXd pooled_design(N, p);
    Eigen::VectorXd pooled_y(N);
    std::size_t row = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& m = data.strata[k];
      for (std::size_t i = 0; i < m.num_rows(); ++i, ++row) {
        pooled_y[row] = m(i, j);
        pooled_design(row, 0) = 1.0;
        std::size_t c = 1;
        for (std::size_t l = 0; l < p; ++l)
          if (l != j) pooled_design(row, c++) = m(i, l);
      }
    }
    Eigen::VectorXd pooled_mle = Eigen::VectorXd::Zero(p);
    if (!constant_response(pooled_y))
      pooled_mle = fit_logistic_mle(pooled_design, pooled_y, mle_opts).coefficients;
    for (std::size_t c = 1; c < p; ++c) out.mu_slopes[j][c - 1] = weight_of(pooled_mle[c]);

    // Per-stratum unpenalized fits; deviations are measured against the
    // pooled coefficients.
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::VectorXd y = nodewise_response(data.strata[k], j);
      Eigen::VectorXd stratum_mle = pooled_mle;
      if (!constant_response(y)) {
        const Eigen::MatrixXd design = nodewise_design(data.strata[k], j);
        stratum_mle = fit_logistic_mle(design, y, mle_opts).coefficients;
      }
      for (std::size_t c = 0; c < p; ++c)
        out.gamma[j][k][c] = weight_of(stratum_mle[c] - pooled_mle[c]);
    }
  });
  return out;
}

std::vector<NodewiseCoefficients> fit_reflasso_seplogit(const StratifiedDataset& data,
                                                        std::size_t reference, double lambda1,
                                                        double lambda2, const FitOptions& opts) {
  data.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();
  if (reference >= K) throw DataError("reflasso: reference stratum out of range");

  const std::vector<double> lambda2k(K, lambda2);
  std::vector<NodewiseCoefficients> fits(p);
  parallel_for(p, opts.jobs, [&](std::size_t j) {
    StackedNodeProblem node = StackedNodeProblem::reflasso(data, j, reference);
    fits[j] = node.solve(lambda1, lambda2k, nullptr, opts.solver);
  });
  return fits;
}

StratifiedGraphEstimate symmetrize(const std::vector<NodewiseCoefficients>& fits,
                                   const SymmetrizationRule& rule) {
  if (fits.empty()) throw DataError("symmetrize: no fits");
  const std::size_t p = fits.front().p;
  const std::size_t K = fits.front().intercepts.size();
  if (fits.size() != p) throw DataError("symmetrize: need one fit per node");
  for (std::size_t j = 0; j < p; ++j)
    if (fits[j].node != j || fits[j].p != p || fits[j].intercepts.size() != K)
      throw DataError("symmetrize: inconsistent node-wise fits");

  StratifiedGraphEstimate out(p, K);
  std::vector<double> s_j(K), s_l(K), chosen(K);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = j + 1; l < p; ++l) {
      for (std::size_t k = 0; k < K; ++k) {
        s_j[k] = fits[j].slope(k, l);
        s_l[k] = fits[l].slope(k, j);
      }
      switch (rule.rule) {
        case Rule::Min:
        case Rule::Max: {
          const int cj = comp(s_j);
          const int cl = comp(s_l);
          const bool pick_j = cj == cl ? true : (rule.rule == Rule::Min ? cj < cl : cj > cl);
          chosen = pick_j ? s_j : s_l;
          break;
        }
        case Rule::And:
          for (std::size_t k = 0; k < K; ++k) {
            const bool bj = std::abs(s_j[k]) > kFuseTol;
            const bool bl = std::abs(s_l[k]) > kFuseTol;
            chosen[k] = (bj && bl) ? (std::abs(s_j[k]) <= std::abs(s_l[k]) ? s_j[k] : s_l[k]) : 0.0;
          }
          break;
        case Rule::Or:
          for (std::size_t k = 0; k < K; ++k) {
            const bool bj = std::abs(s_j[k]) > kFuseTol;
            const bool bl = std::abs(s_l[k]) > kFuseTol;
            if (bj || bl)
              chosen[k] = std::abs(s_j[k]) >= std::abs(s_l[k]) ? s_j[k] : s_l[k];
            else
              chosen[k] = 0.0;
          }
          break;
      }
      out.set_edge(j, l, chosen);
    }
  }
  return out;
}

}  // namespace seplogit
