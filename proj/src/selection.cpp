#include "seplogit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seplogit/parallel.hpp"

namespace seplogit {

namespace {

/// Log-likelihood of one node-wise fit, summed over strata, evaluated
/// directly on the binary data.
double node_loglik(const NodewiseCoefficients& fit, const StratifiedDataset& data) {
  const std::size_t p = data.num_vars();
  const std::size_t j = fit.node;
  double ll = 0.0;
  for (std::size_t k = 0; k < data.num_strata(); ++k) {
    const auto& m = data.strata[k];
    for (std::size_t i = 0; i < m.num_rows(); ++i) {
      double eta = fit.intercepts[k];
      std::size_t c = 0;
      for (std::size_t l = 0; l < p; ++l) {
        if (l == j) continue;
        if (m(i, l) != 0) eta += fit.slopes[k][c];
        ++c;
      }
      const double y = m(i, j);
      ll += y * eta - detail::log1pexp(eta);
    }
  }
  return ll;
}

double nodewise_df(const NodewiseCoefficients& fit) {
  const std::size_t K = fit.intercepts.size();
  if (fit.shared_part && fit.deviations) {
    // Free parameters of the decomposition: nonzero shared slopes and
    // nonzero deviations, plus the unpenalized shared intercept.
    int nz = 1;
    for (std::size_t c = 1; c < fit.p; ++c)
      if (std::abs((*fit.shared_part)[c]) > kFuseTol) ++nz;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t c = 0; c < fit.p; ++c)
        if (std::abs((*fit.deviations)[k][c]) > kFuseTol) ++nz;
    return nz;
  }
  // Fused-lasso convention: distinct non-null values per slope coordinate,
  // distinct values for the (unpenalized) intercepts.
  int df = count_distinct(fit.intercepts);
  std::vector<double> values(K);
  for (std::size_t c = 0; c + 1 < fit.p; ++c) {
    for (std::size_t k = 0; k < K; ++k) values[k] = fit.slopes[k][c];
    df += comp(values);
  }
  return df;
}

LogisticProblem pooled_problem(const StratifiedDataset& data, std::size_t j) {
  const std::size_t p = data.num_vars();
  const std::size_t N = data.total_rows();
  LogisticProblem prob;
  prob.design.resize(N, p);
  prob.response.resize(N);
  std::size_t row = 0;
  for (const auto& m : data.strata) {
    for (std::size_t i = 0; i < m.num_rows(); ++i, ++row) {
      prob.response[row] = m(i, j);
      prob.design(row, 0) = 1.0;
      std::size_t c = 1;
      for (std::size_t l = 0; l < p; ++l)
        if (l != j) prob.design(row, c++) = m(i, l);
    }
  }
  prob.penalized.assign(p, 1);
  prob.penalized[0] = 0;
  prob.weights = Eigen::VectorXd::Ones(p);
  return prob;
}

bool is_constant(const Eigen::VectorXd& y) {
  const double ybar = y.mean();
  return ybar <= 0.0 || ybar >= 1.0;
}

NodewiseCoefficients coefficients_from_vectors(std::size_t node, std::size_t p, std::size_t K,
                                               const std::vector<Eigen::VectorXd>& per_stratum,
                                               const std::vector<std::uint8_t>& cap_hit) {
  NodewiseCoefficients fit;
  fit.node = node;
  fit.p = p;
  fit.intercepts.assign(K, 0.0);
  fit.slopes.assign(K, std::vector<double>(p - 1, 0.0));
  fit.degenerate.assign(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    fit.intercepts[k] = per_stratum[k][0];
    for (std::size_t c = 0; c + 1 < p; ++c) fit.slopes[k][c] = per_stratum[k][c + 1];
    fit.degenerate[k] = cap_hit[k];
  }
  return fit;
}

}  // namespace

std::pair<double, double> bic_score(const std::vector<NodewiseCoefficients>& fits,
                                    const StratifiedDataset& data) {
  data.validate();
  const std::size_t p = data.num_vars();
  if (fits.size() != p) throw DataError("bic: need one fit per node");
  const std::size_t K = data.num_strata();
  for (const auto& f : fits)
    if (f.p != p || f.intercepts.size() != K)
      throw DataError("bic: fit dimensions do not match the dataset");

  const double log_n = std::log(static_cast<double>(data.total_rows()));
  double bic = 0.0, df_total = 0.0;
  for (const auto& fit : fits) {
    const double df = nodewise_df(fit);
    bic += -2.0 * node_loglik(fit, data) + df * log_n;
    df_total += df;
  }
  return {bic, df_total};
}

double grid_anchor(const StratifiedDataset& data) {
  data.validate();
  double anchor = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < data.num_vars(); ++j) {
    const LogisticProblem prob = pooled_problem(data, j);
    if (is_constant(prob.response)) continue;
    anchor = std::max(anchor, lambda_max(prob));
    any = true;
  }
  if (!any)
    throw DataError(
        "grid: every node has a constant pooled response; no non-degenerate fit exists");
  return anchor;
}

std::vector<double> log_spaced_grid(double anchor, int count, double min_ratio) {
  std::vector<double> grid(count, 0.0);
  if (anchor <= 0.0) return grid;  // all zeros
  if (count == 1) {
    grid[0] = anchor;
    return grid;
  }
  for (int i = 0; i < count; ++i)
    grid[i] = anchor * std::pow(min_ratio, static_cast<double>(i) / (count - 1));
  return grid;
}

SelectionResult select_by_grid(const StratifiedDataset& data, const EstimatorSpec& estimator,
                               const GridSpec& grid, const FitOptions& opts) {
  data.validate();
  grid.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();
  if (estimator.kind == EstimatorKind::RefLasso && estimator.reference >= K)
    throw DataError("select: reference stratum out of range");

  const double anchor = grid_anchor(data);
  const std::vector<double> l1_grid = log_spaced_grid(anchor, grid.lambda1_count, grid.min_ratio);
  const bool has_l2 = estimator.kind != EstimatorKind::Indep;
  const std::vector<double> l2_grid =
      has_l2 ? log_spaced_grid(anchor, grid.lambda2_count, grid.min_ratio)
             : std::vector<double>{0.0};
  const std::size_t G = l1_grid.size() * l2_grid.size();

  AdaptiveWeights adaptive;
  const bool use_adaptive = estimator.kind == EstimatorKind::DataSharedAdaptive;
  if (use_adaptive) adaptive = compute_adaptive_weights(data, opts);

  const double log_n = std::log(static_cast<double>(data.total_rows()));

  struct NodeSweep {
    std::vector<double> loglik, df;
    std::vector<NodewiseCoefficients> fits;
  };
  std::vector<NodeSweep> sweeps(p);

  parallel_for(p, opts.jobs, [&](std::size_t j) {
    NodeSweep sweep;
    sweep.loglik.assign(G, 0.0);
    sweep.df.assign(G, 0.0);
    sweep.fits.resize(G);

    switch (estimator.kind) {
      case EstimatorKind::Indep: {
        std::vector<LogisticProblem> problems;
        std::vector<std::uint8_t> constant(K, 0);
        for (std::size_t k = 0; k < K; ++k) {
          LogisticProblem prob = nodewise_problem(data.strata[k], j);
          constant[k] = is_constant(prob.response);
          problems.push_back(std::move(prob));
        }
        std::vector<Eigen::VectorXd> warm(K, Eigen::VectorXd::Zero(p));
        for (std::size_t g = 0; g < l1_grid.size(); ++g) {
          std::vector<Eigen::VectorXd> coefs(K);
          std::vector<std::uint8_t> caps(K, 0);
          double ll = 0.0;
          for (std::size_t k = 0; k < K; ++k) {
            if (constant[k]) {
              coefs[k] = Eigen::VectorXd::Zero(p);
              coefs[k][0] = problems[k].response.mean() >= 1.0 ? kCoefCap : -kCoefCap;
              caps[k] = 1;
            } else {
              const SolverReport rep =
                  fit_weighted_lasso_logistic(problems[k], l1_grid[g], opts.solver, &warm[k]);
              coefs[k] = rep.coefficients;
              warm[k] = rep.coefficients;
              caps[k] = rep.cap_hit;
            }
            ll += log_likelihood(problems[k].design, problems[k].response, coefs[k]);
          }
          NodewiseCoefficients fit = coefficients_from_vectors(j, p, K, coefs, caps);
          sweep.loglik[g] = ll;
          sweep.df[g] = nodewise_df(fit);
          sweep.fits[g] = std::move(fit);
        }
        break;
      }
      case EstimatorKind::Fused: {
        std::vector<LogisticProblem> problems;
        problems.reserve(K);
        for (std::size_t k = 0; k < K; ++k)
          problems.push_back(nodewise_problem(data.strata[k], j));
        FusedWarmState warm;
        for (std::size_t i1 = 0; i1 < l1_grid.size(); ++i1) {
          for (std::size_t i2 = 0; i2 < l2_grid.size(); ++i2) {
            const std::size_t g = i1 * l2_grid.size() + i2;
            const auto reports =
                fit_fused_logistic(problems, l1_grid[i1], l2_grid[i2], opts.fused, &warm);
            std::vector<Eigen::VectorXd> coefs(K);
            std::vector<std::uint8_t> caps(K, 0);
            double ll = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
              coefs[k] = reports[k].coefficients;
              caps[k] = reports[k].cap_hit;
              ll += log_likelihood(problems[k].design, problems[k].response, coefs[k]);
            }
            NodewiseCoefficients fit = coefficients_from_vectors(j, p, K, coefs, caps);
            sweep.loglik[g] = ll;
            sweep.df[g] = nodewise_df(fit);
            sweep.fits[g] = std::move(fit);
          }
        }
        break;
      }
      case EstimatorKind::DataShared:
      case EstimatorKind::DataSharedAdaptive:
      case EstimatorKind::RefLasso: {
        StackedNodeProblem node =
            estimator.kind == EstimatorKind::RefLasso
                ? StackedNodeProblem::reflasso(data, j, estimator.reference)
                : StackedNodeProblem::datashared(data, j);
        for (std::size_t i1 = 0; i1 < l1_grid.size(); ++i1) {
          for (std::size_t i2 = 0; i2 < l2_grid.size(); ++i2) {
            const std::size_t g = i1 * l2_grid.size() + i2;
            const std::vector<double> l2k =
                estimator.kind == EstimatorKind::RefLasso
                    ? std::vector<double>(K, l2_grid[i2])
                    : expand_lambda2(l2_grid[i2], data, opts.lambda2_scale);
            NodewiseCoefficients fit =
                node.solve(l1_grid[i1], l2k, use_adaptive ? &adaptive : nullptr, opts.solver);
            sweep.loglik[g] = node.last_loglik();
            sweep.df[g] = nodewise_df(fit);
            sweep.fits[g] = std::move(fit);
          }
        }
        break;
      }
    }
    sweeps[j] = std::move(sweep);
  });

  // Combine node scores and pick the minimizer; iterating from the largest
  // lambdas first makes ties resolve toward larger penalties.
  SelectionResult result;
  result.surface.resize(G);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_g = 0;
  for (std::size_t i1 = 0; i1 < l1_grid.size(); ++i1) {
    for (std::size_t i2 = 0; i2 < l2_grid.size(); ++i2) {
      const std::size_t g = i1 * l2_grid.size() + i2;
      double bic = 0.0, df = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        bic += -2.0 * sweeps[j].loglik[g] + sweeps[j].df[g] * log_n;
        df += sweeps[j].df[g];
      }
      if (!std::isfinite(bic))
        throw NumericError("select: BIC is not finite at lambda1=" + std::to_string(l1_grid[i1]) +
                           ", lambda2=" + std::to_string(l2_grid[i2]));
      result.surface[g] = {l1_grid[i1], l2_grid[i2], bic, df};
      if (bic < best) {
        best = bic;
        best_g = g;
      }
    }
  }

  result.bic = result.surface[best_g].bic;
  result.df = result.surface[best_g].df;
  result.chosen.lambda1 = result.surface[best_g].lambda1;
  if (has_l2) {
    const bool expand = opts.lambda2_scale == FitOptions::Lambda2Scale::SqrtN &&
                        (estimator.kind == EstimatorKind::DataShared ||
                         estimator.kind == EstimatorKind::DataSharedAdaptive);
    result.chosen.lambda2 =
        expand ? expand_lambda2(result.surface[best_g].lambda2, data, opts.lambda2_scale)
               : std::vector<double>{result.surface[best_g].lambda2};
  }
  result.fits.reserve(p);
  for (std::size_t j = 0; j < p; ++j) result.fits.push_back(std::move(sweeps[j].fits[best_g]));
  return result;
}

SelectionResult select_indep_per_node(const StratifiedDataset& data, const GridSpec& grid,
                                      const FitOptions& opts) {
  data.validate();
  grid.validate();
  const std::size_t p = data.num_vars();
  const std::size_t K = data.num_strata();

  std::vector<NodewiseCoefficients> fits(p);
  std::vector<std::vector<double>> chosen(p, std::vector<double>(K, 0.0));

  parallel_for(p, opts.jobs, [&](std::size_t j) {
    NodewiseCoefficients fit;
    fit.node = j;
    fit.p = p;
    fit.intercepts.assign(K, 0.0);
    fit.slopes.assign(K, std::vector<double>(p - 1, 0.0));
    fit.degenerate.assign(K, 0);

    for (std::size_t k = 0; k < K; ++k) {
      LogisticProblem prob = nodewise_problem(data.strata[k], j);
      if (is_constant(prob.response)) {
        fit.intercepts[k] = prob.response.mean() >= 1.0 ? kCoefCap : -kCoefCap;
        fit.degenerate[k] = 1;
        continue;
      }
      const double anchor = lambda_max(prob);
      const std::vector<double> l_grid =
          log_spaced_grid(anchor, grid.lambda1_count, grid.min_ratio);
      const double log_nk = std::log(static_cast<double>(data.rows(k)));
      double best = std::numeric_limits<double>::infinity();
      Eigen::VectorXd best_coef = Eigen::VectorXd::Zero(p);
      double best_lambda = l_grid.front();
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
      for (double lambda : l_grid) {
        const SolverReport rep = fit_weighted_lasso_logistic(prob, lambda, opts.solver, &warm);
        warm = rep.coefficients;
        int df = 1;
        for (Eigen::Index c = 1; c < rep.coefficients.size(); ++c)
          if (std::abs(rep.coefficients[c]) > kFuseTol) ++df;
        const double bic =
            -2.0 * log_likelihood(prob.design, prob.response, rep.coefficients) + df * log_nk;
        if (bic < best) {
          best = bic;
          best_coef = rep.coefficients;
          best_lambda = lambda;
        }
      }
      chosen[j][k] = best_lambda;
      fit.intercepts[k] = best_coef[0];
      for (std::size_t c = 0; c + 1 < p; ++c) fit.slopes[k][c] = best_coef[c + 1];
    }
    fits[j] = std::move(fit);
  });

  SelectionResult result;
  result.fits = std::move(fits);
  const auto [bic, df] = bic_score(result.fits, data);
  result.bic = bic;
  result.df = df;
  result.per_node_lambdas = std::move(chosen);
  return result;
}

}  // namespace seplogit
