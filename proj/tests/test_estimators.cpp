#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "seplogit/estimators.hpp"
#include "seplogit/ising.hpp"
#include "seplogit/logistic.hpp"
#include "seplogit/rng.hpp"
#include "seplogit/simulation.hpp"
#include "testutil.hpp"

using namespace seplogit;

namespace {

StratifiedDataset chain_dataset(std::size_t p, std::size_t K, std::size_t n, double rho,
                                std::uint64_t seed) {
  const EdgeSet common = generate_common_structure(StructureKind::Chain, p, Rng::derive(seed, 0));
  const StratifiedTruth truth =
      build_stratified_parameters(common, p, rho, K, Rng::derive(seed, 1));
  return sample_dataset(truth, n, Rng::derive(seed, 2));
}

/// Lasso fit on all strata concatenated; the pooled oracle.
Eigen::VectorXd pooled_lasso(const StratifiedDataset& data, std::size_t j, double lambda) {
  const std::size_t p = data.num_vars();
  const std::size_t N = data.total_rows();
  LogisticProblem prob;
  prob.design.resize(N, p);
  prob.response.resize(N);
  std::size_t row = 0;
  for (const auto& m : data.strata)
    for (std::size_t i = 0; i < m.num_rows(); ++i, ++row) {
      prob.response[row] = m(i, j);
      prob.design(row, 0) = 1.0;
      std::size_t c = 1;
      for (std::size_t l = 0; l < p; ++l)
        if (l != j) prob.design(row, c++) = m(i, l);
    }
  prob.penalized.assign(p, 1);
  prob.penalized[0] = 0;
  prob.weights = Eigen::VectorXd::Ones(p);
  return fit_weighted_lasso_logistic(prob, lambda).coefficients;
}

double max_lambda_max(const StratifiedDataset& data) {
  double lmax = 0.0;
  for (std::size_t j = 0; j < data.num_vars(); ++j)
    for (std::size_t k = 0; k < data.num_strata(); ++k)
      lmax = std::max(lmax, lambda_max(nodewise_problem(data.strata[k], j)));
  return lmax;
}

}  // namespace

TEST_CASE("indep: saturating lambdas zero every slope") {
  const StratifiedDataset data = chain_dataset(5, 2, 200, 0.5, 10);
  const double lmax = max_lambda_max(data);
  const auto fits = fit_indep_seplogit(data, {1.01 * lmax, 1.01 * lmax});
  for (const auto& fit : fits)
    for (const auto& slopes : fit.slopes)
      for (double s : slopes) CHECK(s == 0.0);
}

TEST_CASE("indep with K=1 equals a single node-wise lasso") {
  const StratifiedDataset data = chain_dataset(5, 1, 300, 0.0, 11);
  const double lambda = 3.0;
  const auto fits = fit_indep_seplogit(data, {lambda});
  for (std::size_t j = 0; j < 5; ++j) {
    const SolverReport ref =
        fit_weighted_lasso_logistic(nodewise_problem(data.strata[0], j), lambda);
    CHECK(fits[j].intercepts[0] == ref.coefficients[0]);
    for (std::size_t c = 0; c + 1 < 5; ++c)
      CHECK(fits[j].slopes[0][c] == ref.coefficients[c + 1]);
  }
}

TEST_CASE("indep flags constant-response strata as degenerate") {
  RawTable t;
  t.variable_names = {"a", "b", "c"};
  Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    t.labels.push_back(i < 20 ? "x" : "y");
    // Variable a is constantly 1 in stratum x.
    t.rows.push_back({i < 20 ? 1.0 : (rng.bernoulli(0.5) ? 1.0 : 0.0),
                      rng.bernoulli(0.5) ? 1.0 : 0.0, rng.bernoulli(0.4) ? 1.0 : 0.0});
  }
  const StratifiedDataset data = validate_dataset(t);
  const auto fits = fit_indep_seplogit(data, {0.5, 0.5});
  CHECK(fits[0].degenerate[0] == 1);
  CHECK(fits[0].intercepts[0] == kCoefCap);
  for (double s : fits[0].slopes[0]) CHECK(s == 0.0);
  CHECK(fits[0].degenerate[1] == 0);
}

TEST_CASE("fused at lambda2 = 0 equals indep at the same lambda1") {
  const StratifiedDataset data = chain_dataset(4, 3, 150, 0.5, 12);
  const double lambda1 = 2.0;
  const auto fused = fit_fused_seplogit(data, lambda1, 0.0);
  const auto indep = fit_indep_seplogit(data, {lambda1, lambda1, lambda1});
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(fused[j].intercepts[k] - indep[j].intercepts[k]) <= 1e-6);
      for (std::size_t c = 0; c + 1 < 4; ++c)
        CHECK(std::abs(fused[j].slopes[k][c] - indep[j].slopes[k][c]) <= 1e-6);
    }
}

TEST_CASE("fused at huge lambda2 fully fuses and matches the pooled oracle") {
  const StratifiedDataset data = chain_dataset(4, 3, 150, 1.0, 13);
  const double lambda1 = 1.0;
  const auto fused = fit_fused_seplogit(data, lambda1, 1e6);
  for (std::size_t j = 0; j < 4; ++j) {
    // comp of each pair's K-vector is at most 1.
    for (std::size_t c = 0; c + 1 < 4; ++c) {
      std::vector<double> values(3);
      for (std::size_t k = 0; k < 3; ++k) values[k] = fused[j].slopes[k][c];
      CHECK(comp(values) <= 1);
    }
    // And equals the concatenated-data lasso with K copies of the l1 term.
    const Eigen::VectorXd oracle = pooled_lasso(data, j, 3.0 * lambda1);
    for (std::size_t c = 0; c + 1 < 4; ++c)
      CHECK(std::abs(fused[j].slopes[0][c] - oracle[c + 1]) <= 1e-5);
  }
}

TEST_CASE("fused on identical strata returns identical coefficient vectors") {
  StratifiedDataset data = chain_dataset(4, 1, 200, 0.0, 14);
  data.strata.push_back(data.strata[0]);
  data.strata.push_back(data.strata[0]);
  data.stratum_names = {"a", "b", "c"};
  const auto fused = fit_fused_seplogit(data, 1.0, 0.3);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t c = 0; c + 1 < 4; ++c) {
      CHECK(fused[j].slopes[0][c] == fused[j].slopes[1][c]);
      CHECK(fused[j].slopes[1][c] == fused[j].slopes[2][c]);
    }
}

TEST_CASE("datashared with K=1 and huge lambda2 reduces to the plain lasso") {
  const StratifiedDataset data = chain_dataset(5, 1, 250, 0.0, 15);
  const double lambda1 = 2.0;
  const auto fits = fit_datashared_seplogit(data, lambda1, {1e6});
  for (std::size_t j = 0; j < 5; ++j) {
    REQUIRE(fits[j].deviations.has_value());
    for (double g : (*fits[j].deviations)[0]) CHECK(std::abs(g) <= 1e-8);
    const SolverReport ref =
        fit_weighted_lasso_logistic(nodewise_problem(data.strata[0], j), lambda1);
    CHECK(std::abs(fits[j].intercepts[0] - ref.coefficients[0]) <= 1e-5);
    for (std::size_t c = 0; c + 1 < 5; ++c)
      CHECK(std::abs(fits[j].slopes[0][c] - ref.coefficients[c + 1]) <= 1e-5);
  }
}

TEST_CASE("datashared with huge lambda2 pools all strata") {
  const StratifiedDataset data = chain_dataset(4, 3, 150, 1.0, 16);
  const double lambda1 = 1.5;
  const auto fits = fit_datashared_seplogit(data, lambda1, {1e6, 1e6, 1e6});
  for (std::size_t j = 0; j < 4; ++j) {
    const Eigen::VectorXd oracle = pooled_lasso(data, j, lambda1);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(fits[j].intercepts[k] - oracle[0]) <= 1e-5);
      for (std::size_t c = 0; c + 1 < 4; ++c)
        CHECK(std::abs(fits[j].slopes[k][c] - oracle[c + 1]) <= 1e-5);
    }
  }
}

TEST_CASE("datashared decomposition is additively consistent") {
  const StratifiedDataset data = chain_dataset(4, 2, 200, 0.5, 17);
  const auto fits = fit_datashared_seplogit(data, 1.0, {0.8, 0.8});
  for (const auto& fit : fits) CHECK_NOTHROW(fit.check_decomposition());
}

TEST_CASE("datashared shared part solves the weighted median problem") {
  const StratifiedDataset data = chain_dataset(5, 3, 300, 0.75, 18);
  const double lambda1 = 1.2;
  const std::vector<double> lambda2k{0.9, 0.9, 0.9};
  const auto fits = fit_datashared_seplogit(data, lambda1, lambda2k);

  // h(m) = lambda1 |m| + sum_k lambda2k |theta_k - m| is piecewise linear
  // with kinks at 0 and the theta_k, so scanning those candidates finds its
  // minimum.
  for (const auto& fit : fits) {
    for (std::size_t c = 0; c + 1 < 5; ++c) {
      const double mu = (*fit.shared_part)[c + 1];
      std::vector<double> thetas(3);
      for (std::size_t k = 0; k < 3; ++k) thetas[k] = fit.slopes[k][c];
      auto h = [&](double m) {
        double v = lambda1 * std::abs(m);
        for (std::size_t k = 0; k < 3; ++k) v += lambda2k[k] * std::abs(thetas[k] - m);
        return v;
      };
      double best = h(0.0);
      for (double t : thetas) best = std::min(best, h(t));
      CHECK(h(mu) <= best + 1e-5);
    }
  }
}

TEST_CASE("datashared penalty cannot be reduced along the degenerate direction") {
  const StratifiedDataset data = chain_dataset(4, 3, 200, 0.5, 19);
  const double lambda1 = 1.0;
  const std::vector<double> lambda2k{0.7, 0.7, 0.7};
  const auto fits = fit_datashared_seplogit(data, lambda1, lambda2k);
  for (const auto& fit : fits) {
    const auto& mu = *fit.shared_part;
    const auto& gamma = *fit.deviations;
    for (std::size_t c = 0; c < 4; ++c) {
      auto penalty = [&](double dmu) {
        double v = c == 0 ? 0.0 : lambda1 * std::abs(mu[c] + dmu);
        for (std::size_t k = 0; k < 3; ++k) v += lambda2k[k] * std::abs(gamma[k][c] - dmu);
        return v;
      };
      for (double delta : {1e-3, -1e-3})
        CHECK(penalty(delta) >= penalty(0.0) - 1e-8);
    }
  }
}

TEST_CASE("adaptive weights follow the reciprocal-with-caps rule") {
  const StratifiedDataset data = chain_dataset(4, 2, 250, 0.5, 20);
  const AdaptiveWeights weights = compute_adaptive_weights(data);
  REQUIRE(weights.mu_slopes.size() == 4);
  REQUIRE(weights.gamma.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    for (Eigen::Index c = 0; c < weights.mu_slopes[j].size(); ++c) {
      CHECK(weights.mu_slopes[j][c] >= 1.0 / kCoefCap);
      CHECK(weights.mu_slopes[j][c] <= kAdaptiveWeightCap);
    }
    for (std::size_t k = 0; k < 2; ++k)
      for (Eigen::Index c = 0; c < weights.gamma[j][k].size(); ++c) {
        CHECK(weights.gamma[j][k][c] >= 1.0 / kCoefCap);
        CHECK(weights.gamma[j][k][c] <= kAdaptiveWeightCap);
      }
  }
}

TEST_CASE("adaptive fit fuses at least as often on homogeneous data") {
  // rho = 0: all strata identical in truth, so deviations should vanish;
  // adaptive weights sharpen that.
  const StratifiedDataset data = chain_dataset(5, 3, 400, 0.0, 21);
  const double lambda1 = 2.0;
  const std::vector<double> lambda2k{1.0, 1.0, 1.0};
  const AdaptiveWeights weights = compute_adaptive_weights(data);
  const auto plain = fit_datashared_seplogit(data, lambda1, lambda2k);
  const auto adaptive = fit_datashared_seplogit(data, lambda1, lambda2k, &weights);

  auto zero_deviation_count = [](const std::vector<NodewiseCoefficients>& fits) {
    int zeros = 0;
    for (const auto& fit : fits)
      for (const auto& g : *fit.deviations)
        for (double v : g)
          if (v == 0.0) ++zeros;
    return zeros;
  };
  CHECK(zero_deviation_count(adaptive) >= zero_deviation_count(plain));
}

TEST_CASE("reflasso with K=1 reduces to the plain node-wise lasso") {
  const StratifiedDataset data = chain_dataset(4, 1, 200, 0.0, 22);
  const double lambda1 = 1.5;
  const auto fits = fit_reflasso_seplogit(data, 0, lambda1, 123.0);
  for (std::size_t j = 0; j < 4; ++j) {
    const SolverReport ref =
        fit_weighted_lasso_logistic(nodewise_problem(data.strata[0], j), lambda1);
    CHECK(std::abs(fits[j].intercepts[0] - ref.coefficients[0]) <= 1e-6);
    for (std::size_t c = 0; c + 1 < 4; ++c)
      CHECK(std::abs(fits[j].slopes[0][c] - ref.coefficients[c + 1]) <= 1e-6);
  }
}

TEST_CASE("reflasso with huge lambda2 pins every stratum to the reference fit") {
  const StratifiedDataset data = chain_dataset(4, 3, 150, 1.0, 23);
  const double lambda1 = 1.5;
  const auto fits = fit_reflasso_seplogit(data, 1, lambda1, 1e6);
  for (std::size_t j = 0; j < 4; ++j) {
    // gamma == 0 for every stratum, so the shared criterion is the pooled
    // lasso at lambda1 itself (one copy of the penalty).
    const Eigen::VectorXd oracle = pooled_lasso(data, j, lambda1);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(fits[j].intercepts[k] - oracle[0]) <= 1e-5);
      for (std::size_t c = 0; c + 1 < 4; ++c)
        CHECK(std::abs(fits[j].slopes[k][c] - oracle[c + 1]) <= 1e-5);
    }
  }
}

TEST_CASE("reflasso on identical strata zeroes all deviations") {
  StratifiedDataset data = chain_dataset(4, 1, 200, 0.0, 24);
  data.strata.push_back(data.strata[0]);
  data.stratum_names = {"a", "b"};
  // The zero-deviation solution is stationary only once lambda2 covers the
  // per-stratum slope gradient left by lambda1, i.e. lambda2 >= lambda1 / K.
  const auto fits = fit_reflasso_seplogit(data, 0, 1.0, 0.75);
  for (const auto& fit : fits) {
    REQUIRE(fit.deviations.has_value());
    for (double v : (*fit.deviations)[1]) CHECK(v == 0.0);
  }
}

namespace {
NodewiseCoefficients manual_fit(std::size_t node, std::size_t p,
                                std::vector<std::vector<double>> slopes) {
  NodewiseCoefficients fit;
  fit.node = node;
  fit.p = p;
  fit.intercepts.assign(slopes.size(), 0.0);
  fit.slopes = std::move(slopes);
  fit.degenerate.assign(fit.intercepts.size(), 0);
  return fit;
}
}  // namespace

TEST_CASE("symmetrize MIN and MAX pick by complexity") {
  // Node 0 sees (0.5, 0.5, 0.5) for the pair, node 1 sees (0.4, 0.4, 0.9).
  std::vector<NodewiseCoefficients> fits;
  fits.push_back(manual_fit(0, 2, {{0.5}, {0.5}, {0.5}}));
  fits.push_back(manual_fit(1, 2, {{0.4}, {0.4}, {0.9}}));

  const auto min_graph = symmetrize(fits, {Rule::Min, {}});
  CHECK(min_graph.edge_weights(0, 1) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK_FALSE(min_graph.heterogeneous(0, 1));

  const auto max_graph = symmetrize(fits, {Rule::Max, {}});
  CHECK(max_graph.edge_weights(0, 1) == std::vector<double>{0.4, 0.4, 0.9});
  CHECK(max_graph.heterogeneous(0, 1));
}

TEST_CASE("symmetrize ties go to the lower node index") {
  std::vector<NodewiseCoefficients> fits;
  fits.push_back(manual_fit(0, 2, {{0.3}}));
  fits.push_back(manual_fit(1, 2, {{0.6}}));
  const auto graph = symmetrize(fits, {Rule::Min, {}});
  CHECK(graph.edge_weights(0, 1)[0] == 0.3);
  const auto maxg = symmetrize(fits, {Rule::Max, {}});
  CHECK(maxg.edge_weights(0, 1)[0] == 0.3);
}

TEST_CASE("symmetrize AND/OR with K=1 mirror the classic rules") {
  std::vector<NodewiseCoefficients> fits;
  fits.push_back(manual_fit(0, 2, {{0.3}}));
  fits.push_back(manual_fit(1, 2, {{0.0}}));

  const auto and_graph = symmetrize(fits, {Rule::And, {}});
  CHECK(and_graph.edge_weights(0, 1)[0] == 0.0);

  const auto or_graph = symmetrize(fits, {Rule::Or, {}});
  CHECK(or_graph.edge_weights(0, 1)[0] == 0.3);
}

TEST_CASE("symmetrize null pair stays absent with no heterogeneity") {
  std::vector<NodewiseCoefficients> fits;
  fits.push_back(manual_fit(0, 2, {{0.0}, {0.0}, {0.0}}));
  fits.push_back(manual_fit(1, 2, {{0.0}, {0.0}, {0.0}}));
  for (Rule rule : {Rule::Min, Rule::Max, Rule::And, Rule::Or}) {
    const auto graph = symmetrize(fits, {rule, {}});
    CHECK(graph.edge_weights(0, 1) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK_FALSE(graph.heterogeneous(0, 1));
  }
}

TEST_CASE("comp of the MIN selection never exceeds the MAX selection") {
  const StratifiedDataset data = chain_dataset(5, 3, 200, 0.75, 25);
  const auto fits = fit_fused_seplogit(data, 1.0, 0.5);
  const auto min_graph = symmetrize(fits, {Rule::Min, {}});
  const auto max_graph = symmetrize(fits, {Rule::Max, {}});
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t l = j + 1; l < 5; ++l)
      CHECK(comp(min_graph.edge_weights(j, l)) <= comp(max_graph.edge_weights(j, l)));
}

TEST_CASE("fused homogeneity is monotone in lambda2") {
  const StratifiedDataset data = chain_dataset(4, 3, 250, 0.5, 26);
  int prev = std::numeric_limits<int>::max();
  for (double lambda2 : {0.0, 0.3, 1.0, 3.0, 10.0}) {
    const auto fits = fit_fused_seplogit(data, 1.0, lambda2);
    const auto graph = symmetrize(fits, {Rule::Min, {}});
    int total = 0;
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t l = j + 1; l < 4; ++l) total += comp(graph.edge_weights(j, l));
    CHECK(total <= prev);
    prev = total;
  }
}

TEST_CASE("stratum relabeling permutes outputs and leaves heterogeneity fixed") {
  const StratifiedDataset data = chain_dataset(4, 3, 200, 0.75, 27);
  StratifiedDataset permuted;
  const std::vector<std::size_t> perm{2, 0, 1};
  for (std::size_t k : perm) {
    permuted.strata.push_back(data.strata[k]);
    permuted.stratum_names.push_back(data.stratum_names[k]);
  }
  permuted.variable_names = data.variable_names;

  SUBCASE("indep") {
    const auto base = fit_indep_seplogit(data, {1.0, 1.0, 1.0});
    const auto moved = fit_indep_seplogit(permuted, {1.0, 1.0, 1.0});
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        CHECK(moved[j].intercepts[k] == base[j].intercepts[perm[k]]);
  }
  SUBCASE("fused") {
    const auto base = fit_fused_seplogit(data, 1.0, 0.5);
    const auto moved = fit_fused_seplogit(permuted, 1.0, 0.5);
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t c = 0; c + 1 < 4; ++c)
          CHECK(std::abs(moved[j].slopes[k][c] - base[j].slopes[perm[k]][c]) <= 1e-9);
    const auto bg = symmetrize(base, {Rule::Min, {}});
    const auto mg = symmetrize(moved, {Rule::Min, {}});
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t l = j + 1; l < 4; ++l)
        CHECK(bg.heterogeneous(j, l) == mg.heterogeneous(j, l));
  }
  SUBCASE("datashared") {
    const auto base = fit_datashared_seplogit(data, 1.0, {0.7, 0.7, 0.7});
    const auto moved = fit_datashared_seplogit(permuted, 1.0, {0.7, 0.7, 0.7});
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t c = 0; c + 1 < 4; ++c)
          CHECK(std::abs(moved[j].slopes[k][c] - base[j].slopes[perm[k]][c]) <= 5e-6);
  }
}
