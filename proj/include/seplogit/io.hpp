#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seplogit/selection.hpp"
#include "seplogit/simulation.hpp"
#include "seplogit/types.hpp"

namespace seplogit {

/// Dataset files are delimiter-separated text with a header row; the first
/// column holds the stratum label, the remaining columns binary 0/1 values.
RawTable read_dataset_csv(const std::string& path);
StratifiedDataset read_dataset(const std::string& path);
void write_dataset_csv(const StratifiedDataset& data, const std::string& path);

/// Shortest round-trip decimal representation; used everywhere a double is
/// serialized so that equal inputs produce byte-identical files.
std::string format_double(double v);

struct EdgeTriple {
  std::size_t j = 0, l = 0;         // 0-based here, 1-based in files
  std::vector<double> values;       // K entries
};

/// Metadata embedded in estimate files; enough to rerun the fit.
struct SelectionMeta {
  std::string estimator;
  std::string rule;
  std::optional<std::string> reference;
  GridSpec grid;
  std::string lambda2_scale = "common";
  std::uint64_t seed = 0;
  double min_odds_ratio = 1.0;
  double lambda1 = 0.0;
  std::vector<double> lambda2;
  double bic = 0.0;
  double df = 0.0;
};

struct EstimateDocument {
  std::size_t p = 0, K = 0;
  std::vector<std::string> stratum_names, variable_names;
  SelectionMeta selection;
  std::vector<std::vector<double>> main_effects;  // K x p node-wise intercepts
  std::vector<EdgeTriple> interactions;           // pairs passing the odds-ratio filter
  std::vector<std::pair<std::size_t, std::size_t>> heterogeneous_pairs;  // all Zhat = 1
  std::vector<std::pair<std::size_t, std::size_t>> degenerate_fits;      // (node, stratum)
};

/// Assembles the document from a selection result; pairs are kept when any
/// stratum has exp(|coefficient|) >= min_odds_ratio (and is nonzero).
EstimateDocument make_estimate_document(const StratifiedDataset& data,
                                        const SelectionResult& result,
                                        const StratifiedGraphEstimate& graph,
                                        SelectionMeta meta);

void write_estimate_json(const EstimateDocument& doc, const std::string& path);
EstimateDocument read_estimate_json(const std::string& path);

struct TruthDocument {
  std::size_t p = 0, K = 0;
  std::vector<std::string> stratum_names, variable_names;
  std::string structure;
  double rho = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> main_effects;  // K x p
  std::vector<EdgeTriple> interactions;           // all pairs nonzero somewhere
  std::vector<std::pair<std::size_t, std::size_t>> heterogeneous_pairs;  // Z* = 1
};

TruthDocument make_truth_document(const StratifiedTruth& truth, const SimulationDesign& design);
void write_truth_json(const TruthDocument& doc, const std::string& path);
TruthDocument read_truth_json(const std::string& path);

void write_bench_csv(const std::vector<BenchmarkRecord>& records, const std::string& path);
std::vector<BenchmarkRecord> read_bench_csv(const std::string& path);

/// Per-(design, estimator) mean metrics over non-failed replicates, as a
/// printable table.
std::string bench_summary(const std::vector<BenchmarkRecord>& records);

enum class GraphFormat { Structured, Dot };
GraphFormat graph_format_from_string(const std::string& s);

/// Writes one graph document per stratum to <prefix>_<stratum>.<ext>,
/// keeping edges with a nonzero stratum coefficient and
/// exp(|coefficient|) >= min_odds_ratio. Returns the written paths.
std::vector<std::string> export_graphs(const EstimateDocument& doc, GraphFormat format,
                                       double min_odds_ratio, const std::string& prefix);

}  // namespace seplogit
