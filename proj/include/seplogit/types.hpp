#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace seplogit {

/// Tolerance used when deciding that two fitted values are fused (equal) or
/// that a value is null. Iterative solvers only converge approximately, so
/// exact comparisons would never fire on their output.
inline constexpr double kFuseTol = 1e-8;

/// Magnitude cap on the logit scale; guards node-wise fits against perfect
/// separation, which finite binary designs make likely when the penalty is
/// weak.
inline constexpr double kCoefCap = 30.0;

/// Invalid or inconsistent input data (bad cells, dimension mismatches,
/// unparsable files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (solver did not converge, quantity not computable).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t num_pairs(std::size_t p) { return p * (p - 1) / 2; }

/// Index of the unordered pair {j, l}, j != l, into a packed upper-triangular
/// store of length p(p-1)/2. Row-major over rows j < l.
inline std::size_t pair_index(std::size_t j, std::size_t l, std::size_t p) {
  if (j == l || j >= p || l >= p)
    throw std::out_of_range("pair_index: need j != l, both < p");
  if (j > l) std::swap(j, l);
  return j * p - j * (j + 1) / 2 + (l - j - 1);
}

/// Main effects and pairwise interactions of one binary quadratic exponential
/// (Ising) model. Interactions are stored once, for j < l; the accessor is
/// symmetric by construction.
class IsingParameters {
 public:
  explicit IsingParameters(std::size_t p)
      : p_(p), main_(p, 0.0), inter_(num_pairs(p), 0.0) {
    if (p == 0) throw DataError("IsingParameters: node count must be positive");
  }

  std::size_t num_nodes() const { return p_; }

  double main(std::size_t j) const { return main_.at(j); }
  void set_main(std::size_t j, double v) {
    require_finite(v);
    main_.at(j) = v;
  }

  double interaction(std::size_t j, std::size_t l) const {
    return inter_[pair_index(j, l, p_)];
  }
  void set_interaction(std::size_t j, std::size_t l, double v) {
    require_finite(v);
    inter_[pair_index(j, l, p_)] = v;
  }

  const std::vector<double>& main_effects() const { return main_; }
  const std::vector<double>& interactions() const { return inter_; }

 private:
  static void require_finite(double v) {
    if (!std::isfinite(v)) throw DataError("IsingParameters: entries must be finite");
  }

  std::size_t p_;
  std::vector<double> main_;
  std::vector<double> inter_;
};

/// K Ising parameter vectors sharing a node count, one per stratum.
class StratifiedIsingParameters {
 public:
  explicit StratifiedIsingParameters(std::vector<IsingParameters> per_stratum)
      : per_stratum_(std::move(per_stratum)) {
    if (per_stratum_.empty())
      throw DataError("StratifiedIsingParameters: need at least one stratum");
    const std::size_t p = per_stratum_.front().num_nodes();
    for (const auto& m : per_stratum_)
      if (m.num_nodes() != p)
        throw DataError("StratifiedIsingParameters: all strata must share p");
  }

  std::size_t num_strata() const { return per_stratum_.size(); }
  std::size_t num_nodes() const { return per_stratum_.front().num_nodes(); }
  const IsingParameters& stratum(std::size_t k) const { return per_stratum_.at(k); }
  IsingParameters& stratum(std::size_t k) { return per_stratum_.at(k); }

 private:
  std::vector<IsingParameters> per_stratum_;
};

/// Dense n x p matrix with entries in {0, 1}, row-major.
class BinaryObservationMatrix {
 public:
  BinaryObservationMatrix(std::size_t n, std::size_t p)
      : n_(n), p_(p), values_(n * p, 0) {}

  std::size_t num_rows() const { return n_; }
  std::size_t num_cols() const { return p_; }

  std::uint8_t operator()(std::size_t i, std::size_t j) const {
    return values_[i * p_ + j];
  }
  void set(std::size_t i, std::size_t j, std::uint8_t v) {
    if (v > 1) throw DataError("BinaryObservationMatrix: entries must be 0 or 1");
    values_[i * p_ + j] = v;
  }

  std::span<const std::uint8_t> row(std::size_t i) const {
    return {values_.data() + i * p_, p_};
  }

 private:
  std::size_t n_, p_;
  std::vector<std::uint8_t> values_;
};

/// K binary observation matrices sharing a variable count, plus stratum
/// labels in first-appearance order.
struct StratifiedDataset {
  std::vector<BinaryObservationMatrix> strata;
  std::vector<std::string> stratum_names;
  std::vector<std::string> variable_names;

  std::size_t num_strata() const { return strata.size(); }
  std::size_t num_vars() const { return strata.empty() ? 0 : strata.front().num_cols(); }
  std::size_t rows(std::size_t k) const { return strata.at(k).num_rows(); }
  std::size_t total_rows() const {
    std::size_t n = 0;
    for (const auto& s : strata) n += s.num_rows();
    return n;
  }
  void validate() const;
};

/// Tabular input as parsed from a delimiter-separated file: one stratum label
/// plus p numeric cells per row.
struct RawTable {
  std::vector<std::string> variable_names;
  std::vector<std::string> labels;        // one per row
  std::vector<std::vector<double>> rows;  // cells per row
};

/// Groups rows by stratum label (first-appearance order) and checks every
/// cell is exactly 0 or 1. Rejects ragged rows and non-binary cells with the
/// offending row/column named.
StratifiedDataset validate_dataset(const RawTable& raw);

/// Number of distinct non-null values in a vector of fitted coefficients.
/// Values within `tol` of zero are null; values within `tol` of each other
/// count once.
int comp(std::span<const double> values, double tol = kFuseTol);

/// Number of distinct values (zero counts as a value), same tolerance rules.
int count_distinct(std::span<const double> values, double tol = kFuseTol);

/// True when all entries agree pairwise within `tol` (max - min <= tol).
bool all_equal(std::span<const double> values, double tol = kFuseTol);

/// Per-node, per-stratum logistic coefficients for the regression of node
/// `node` on the remaining variables: intercepts[k] and slopes[k][c] where
/// column c runs over l = 0..p-1 skipping `node`. Estimators based on a
/// shared/deviation decomposition also fill shared_part (length p:
/// intercept then slopes) and deviations (K vectors of length p).
struct NodewiseCoefficients {
  std::size_t node = 0;
  std::size_t p = 0;
  std::vector<double> intercepts;               // K
  std::vector<std::vector<double>> slopes;      // K x (p-1)
  std::optional<std::vector<double>> shared_part;
  std::optional<std::vector<std::vector<double>>> deviations;
  std::vector<std::uint8_t> degenerate;         // K, constant-response flags

  /// Column index of variable l in the slope vectors (l != node).
  std::size_t column_of(std::size_t l) const {
    if (l == node || l >= p) throw std::out_of_range("column_of: bad variable index");
    return l < node ? l : l - 1;
  }
  double slope(std::size_t k, std::size_t l) const {
    return slopes.at(k)[column_of(l)];
  }

  /// Checks intercepts/slopes equal shared_part + deviations entrywise
  /// (within 1e-12) when the decomposition is present.
  void check_decomposition() const;
};

/// Symmetrized per-pair, per-stratum coefficients plus the heterogeneity
/// indicator. Invariant held by construction: z(j,l) == 0 iff the K entries
/// of edge_weights(j,l) are all equal (within kFuseTol).
class StratifiedGraphEstimate {
 public:
  StratifiedGraphEstimate(std::size_t p, std::size_t K)
      : p_(p), K_(K), weights_(num_pairs(p), std::vector<double>(K, 0.0)),
        het_(num_pairs(p), 0) {
    if (p < 2 || K < 1) throw DataError("StratifiedGraphEstimate: need p >= 2, K >= 1");
  }

  std::size_t num_nodes() const { return p_; }
  std::size_t num_strata() const { return K_; }

  const std::vector<double>& edge_weights(std::size_t j, std::size_t l) const {
    return weights_[pair_index(j, l, p_)];
  }
  bool heterogeneous(std::size_t j, std::size_t l) const {
    return het_[pair_index(j, l, p_)] != 0;
  }

  void set_edge(std::size_t j, std::size_t l, std::vector<double> values) {
    if (values.size() != K_)
      throw DataError("StratifiedGraphEstimate: value vector must have K entries");
    const std::size_t idx = pair_index(j, l, p_);
    het_[idx] = all_equal(values) ? 0 : 1;
    weights_[idx] = std::move(values);
  }

 private:
  std::size_t p_, K_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::uint8_t> het_;
};

/// Penalty configuration: lambda1 for the sparsity term, lambda2 either
/// common or per-stratum, optional per-coefficient adaptive weights.
struct PenaltySpec {
  double lambda1 = 0.0;
  std::vector<double> lambda2;  // size 1 (common) or K
  std::optional<std::vector<double>> adaptive_weights;

  void validate(std::size_t K) const;
  double lambda2_for(std::size_t k) const {
    if (lambda2.empty()) return 0.0;
    return lambda2.size() == 1 ? lambda2[0] : lambda2.at(k);
  }
};

enum class EstimatorKind {
  Indep,
  Fused,
  DataShared,
  DataSharedAdaptive,
  RefLasso,
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::DataShared;
  std::size_t reference = 0;  // stratum index, RefLasso only
};

enum class Rule { And, Or, Min, Max };

/// How to resolve the two directed estimates of each pair into one vector.
/// tie_break fixes the choice when both candidates have equal complexity.
struct SymmetrizationRule {
  Rule rule = Rule::Min;
  enum class TieBreak { LowerNode } tie_break = TieBreak::LowerNode;
};

const char* to_string(EstimatorKind kind);
const char* to_string(Rule rule);
EstimatorKind estimator_from_string(const std::string& s);
Rule rule_from_string(const std::string& s);

}  // namespace seplogit
