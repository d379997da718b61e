#include "seplogit/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace seplogit {

void StratifiedDataset::validate() const {
  if (strata.empty()) throw DataError("dataset: need at least one stratum");
  if (stratum_names.size() != strata.size())
    throw DataError("dataset: stratum name count mismatch");
  const std::size_t p = strata.front().num_cols();
  if (variable_names.size() != p)
    throw DataError("dataset: variable name count mismatch");
  for (std::size_t k = 0; k < strata.size(); ++k) {
    if (strata[k].num_cols() != p)
      throw DataError("dataset: stratum '" + stratum_names[k] +
                      "' has a different variable count");
    if (strata[k].num_rows() == 0)
      throw DataError("dataset: stratum '" + stratum_names[k] + "' is empty");
  }
}

StratifiedDataset validate_dataset(const RawTable& raw) {
  if (raw.rows.empty()) throw DataError("dataset: no data rows");
  if (raw.labels.size() != raw.rows.size())
    throw DataError("dataset: label/row count mismatch");
  const std::size_t p = raw.variable_names.size();
  if (p < 2) throw DataError("dataset: need at least 2 value columns");

  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    if (raw.rows[i].size() != p)
      throw DataError("dataset: ragged row " + std::to_string(i + 1) + " has " +
                      std::to_string(raw.rows[i].size()) + " cells, expected " +
                      std::to_string(p));
    for (std::size_t j = 0; j < p; ++j) {
      const double v = raw.rows[i][j];
      if (!(v == 0.0 || v == 1.0))
        throw DataError("dataset: non-binary value at row " + std::to_string(i + 1) +
                        ", column '" + raw.variable_names[j] + "'");
    }
  }

  // Group rows by label, strata ordered by first appearance.
  std::vector<std::string> names;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < raw.labels.size(); ++i) {
    auto it = index.find(raw.labels[i]);
    if (it == index.end()) {
      index.emplace(raw.labels[i], names.size());
      names.push_back(raw.labels[i]);
      members.emplace_back();
      it = index.find(raw.labels[i]);
    }
    members[it->second].push_back(i);
  }

  StratifiedDataset out;
  out.stratum_names = names;
  out.variable_names = raw.variable_names;
  for (const auto& rows : members) {
    BinaryObservationMatrix m(rows.size(), p);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < p; ++j)
        m.set(r, j, raw.rows[rows[r]][j] == 1.0 ? 1 : 0);
    out.strata.push_back(std::move(m));
  }
  out.validate();
  return out;
}

int comp(std::span<const double> values, double tol) {
  std::vector<double> nonnull;
  nonnull.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("comp: values must be finite");
    if (std::abs(v) > tol) nonnull.push_back(v);
  }
  std::sort(nonnull.begin(), nonnull.end());
  int distinct = 0;
  double anchor = 0.0;
  for (std::size_t i = 0; i < nonnull.size(); ++i) {
    if (i == 0 || nonnull[i] - anchor > tol) {
      ++distinct;
      anchor = nonnull[i];
    }
  }
  return distinct;
}

int count_distinct(std::span<const double> values, double tol) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  int distinct = 0;
  double anchor = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == 0 || v[i] - anchor > tol) {
      ++distinct;
      anchor = v[i];
    }
  }
  return distinct;
}

bool all_equal(std::span<const double> values, double tol) {
  if (values.empty()) return true;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo <= tol;
}

void NodewiseCoefficients::check_decomposition() const {
  if (!shared_part || !deviations) return;
  const auto& mu = *shared_part;
  const auto& gamma = *deviations;
  if (mu.size() != p || gamma.size() != intercepts.size())
    throw DataError("nodewise coefficients: decomposition shape mismatch");
  for (std::size_t k = 0; k < intercepts.size(); ++k) {
    if (gamma[k].size() != p)
      throw DataError("nodewise coefficients: deviation shape mismatch");
    if (std::abs(intercepts[k] - (mu[0] + gamma[k][0])) > 1e-12)
      throw DataError("nodewise coefficients: intercept != shared + deviation");
    for (std::size_t c = 0; c + 1 < p; ++c)
      if (std::abs(slopes[k][c] - (mu[c + 1] + gamma[k][c + 1])) > 1e-12)
        throw DataError("nodewise coefficients: slope != shared + deviation");
  }
}

void PenaltySpec::validate(std::size_t K) const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(lambda1)) throw DataError("penalty: lambda1 must be finite and nonnegative");
  if (!lambda2.empty() && lambda2.size() != 1 && lambda2.size() != K)
    throw DataError("penalty: lambda2 must be scalar or one value per stratum");
  for (double v : lambda2)
    if (!ok(v)) throw DataError("penalty: lambda2 must be finite and nonnegative");
  if (adaptive_weights)
    for (double v : *adaptive_weights)
      if (!ok(v)) throw DataError("penalty: adaptive weights must be finite and nonnegative");
}

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Indep: return "indep";
    case EstimatorKind::Fused: return "fused";
    case EstimatorKind::DataShared: return "datashared";
    case EstimatorKind::DataSharedAdaptive: return "datashared-adaptive";
    case EstimatorKind::RefLasso: return "reflasso";
  }
  return "?";
}

const char* to_string(Rule rule) {
  switch (rule) {
    case Rule::And: return "and";
    case Rule::Or: return "or";
    case Rule::Min: return "min";
    case Rule::Max: return "max";
  }
  return "?";
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "indep") return EstimatorKind::Indep;
  if (s == "fused") return EstimatorKind::Fused;
  if (s == "datashared") return EstimatorKind::DataShared;
  if (s == "datashared-adaptive") return EstimatorKind::DataSharedAdaptive;
  if (s == "reflasso") return EstimatorKind::RefLasso;
  throw DataError("unknown estimator '" + s +
                  "' (expected indep|fused|datashared|datashared-adaptive|reflasso)");
}

Rule rule_from_string(const std::string& s) {
  if (s == "and") return Rule::And;
  if (s == "or") return Rule::Or;
  if (s == "min") return Rule::Min;
  if (s == "max") return Rule::Max;
  throw DataError("unknown symmetrization rule '" + s + "' (expected and|or|min|max)");
}

}  // namespace seplogit
