#include "seplogit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace seplogit {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_line(const std::string& line, char delim = ',') {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

double parse_double(const std::string& token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw DataError("cannot parse number '" + token + "' at " + where);
  return value;
}

void check_label(const std::string& s, const char* what) {
  if (s.empty()) throw DataError(std::string(what) + " must not be empty");
  if (s.find_first_of(",\r\n\"") != std::string::npos)
    throw DataError(std::string(what) + " '" + s + "' contains a delimiter or quote");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return std::string(buf, ptr);
}

RawTable read_dataset_csv(const std::string& path) {
  const std::string content = read_file(path);
  RawTable table;
  std::size_t line_no = 0;
  std::string::size_type start = 0;
  bool saw_header = false;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    std::string line = content.substr(
        start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? content.size() + 1 : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (start > content.size()) break;  // trailing newline
      if (!saw_header && line_no == 1)
        throw DataError(path + ": empty header line");
      throw DataError(path + ": empty line " + std::to_string(line_no));
    }
    auto fields = split_line(line);
    if (!saw_header) {
      if (fields.size() < 3)
        throw DataError(path + ": header must have a stratum column and at least 2 value columns");
      table.variable_names.assign(fields.begin() + 1, fields.end());
      saw_header = true;
      continue;
    }
    if (fields.size() != table.variable_names.size() + 1)
      throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.variable_names.size() + 1));
    table.labels.push_back(fields[0]);
    std::vector<double> row(fields.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c)
      row[c - 1] = parse_double(fields[c], path + " line " + std::to_string(line_no));
    table.rows.push_back(std::move(row));
  }
  if (!saw_header) throw DataError(path + ": empty file");
  if (table.rows.empty()) throw DataError(path + ": no data rows");
  return table;
}

StratifiedDataset read_dataset(const std::string& path) {
  return validate_dataset(read_dataset_csv(path));
}

void write_dataset_csv(const StratifiedDataset& data, const std::string& path) {
  data.validate();
  for (const auto& s : data.stratum_names) check_label(s, "stratum label");
  for (const auto& v : data.variable_names) check_label(v, "variable name");

  std::string out = "stratum";
  for (const auto& v : data.variable_names) {
    out += ',';
    out += v;
  }
  out += '\n';
  for (std::size_t k = 0; k < data.num_strata(); ++k) {
    const auto& m = data.strata[k];
    for (std::size_t i = 0; i < m.num_rows(); ++i) {
      out += data.stratum_names[k];
      for (std::size_t j = 0; j < m.num_cols(); ++j) {
        out += ',';
        out += m(i, j) ? '1' : '0';
      }
      out += '\n';
    }
  }
  write_file(path, out);
}

namespace {

ordered_json triples_to_json(const std::vector<EdgeTriple>& triples) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : triples) {
    ordered_json e;
    e["j"] = t.j + 1;
    e["l"] = t.l + 1;
    e["values"] = t.values;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<EdgeTriple> triples_from_json(const ordered_json& arr, const std::string& path) {
  std::vector<EdgeTriple> out;
  for (const auto& e : arr) {
    EdgeTriple t;
    const std::size_t j = e.at("j").get<std::size_t>();
    const std::size_t l = e.at("l").get<std::size_t>();
    if (j < 1 || l < 1) throw DataError(path + ": interaction indices are 1-based");
    t.j = j - 1;
    t.l = l - 1;
    t.values = e.at("values").get<std::vector<double>>();
    out.push_back(std::move(t));
  }
  return out;
}

ordered_json pairs_to_json(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  ordered_json arr = ordered_json::array();
  for (const auto& [j, l] : pairs) {
    ordered_json e;
    e["j"] = j + 1;
    e["l"] = l + 1;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_from_json(const ordered_json& arr) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : arr)
    out.emplace_back(e.at("j").get<std::size_t>() - 1, e.at("l").get<std::size_t>() - 1);
  return out;
}

ordered_json parse_json_file(const std::string& path, const char* expected_format) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(path + ": " + ex.what());
  }
  if (!doc.is_object() || doc.value("format", "") != expected_format)
    throw DataError(path + ": not a " + std::string(expected_format) + " document");
  return doc;
}

}  // namespace

EstimateDocument make_estimate_document(const StratifiedDataset& data,
                                        const SelectionResult& result,
                                        const StratifiedGraphEstimate& graph,
                                        SelectionMeta meta) {
  const std::size_t p = graph.num_nodes();
  const std::size_t K = graph.num_strata();
  EstimateDocument doc;
  doc.p = p;
  doc.K = K;
  doc.stratum_names = data.stratum_names;
  doc.variable_names = data.variable_names;
  doc.selection = std::move(meta);

  doc.main_effects.assign(K, std::vector<double>(p, 0.0));
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < K; ++k)
      doc.main_effects[k][j] = result.fits[j].intercepts[k];

  const double threshold = std::max(doc.selection.min_odds_ratio, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = j + 1; l < p; ++l) {
      const auto& values = graph.edge_weights(j, l);
      double best_or = 0.0;
      bool any_nonzero = false;
      for (double v : values) {
        if (std::abs(v) > kFuseTol) {
          any_nonzero = true;
          best_or = std::max(best_or, std::exp(std::abs(v)));
        }
      }
      if (any_nonzero && best_or >= threshold)
        doc.interactions.push_back({j, l, values});
      if (graph.heterogeneous(j, l)) doc.heterogeneous_pairs.emplace_back(j, l);
    }
  }

  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < K; ++k)
      if (result.fits[j].degenerate[k]) doc.degenerate_fits.emplace_back(j, k);
  return doc;
}

void write_estimate_json(const EstimateDocument& doc, const std::string& path) {
  ordered_json j;
  j["format"] = "seplogit-estimate";
  j["version"] = 1;
  j["p"] = doc.p;
  j["K"] = doc.K;
  j["stratum_names"] = doc.stratum_names;
  j["variable_names"] = doc.variable_names;
  ordered_json sel;
  sel["estimator"] = doc.selection.estimator;
  sel["rule"] = doc.selection.rule;
  if (doc.selection.reference) sel["reference"] = *doc.selection.reference;
  sel["grid"] = {{"lambda1_count", doc.selection.grid.lambda1_count},
                 {"lambda2_count", doc.selection.grid.lambda2_count},
                 {"min_ratio", doc.selection.grid.min_ratio}};
  sel["lambda2_scale"] = doc.selection.lambda2_scale;
  sel["seed"] = doc.selection.seed;
  sel["min_odds_ratio"] = doc.selection.min_odds_ratio;
  sel["lambda1"] = doc.selection.lambda1;
  sel["lambda2"] = doc.selection.lambda2;
  sel["bic"] = doc.selection.bic;
  sel["df"] = doc.selection.df;
  j["selection"] = std::move(sel);
  j["main_effects"] = doc.main_effects;
  j["interactions"] = triples_to_json(doc.interactions);
  j["heterogeneity"] = pairs_to_json(doc.heterogeneous_pairs);
  ordered_json degen = ordered_json::array();
  for (const auto& [node, k] : doc.degenerate_fits) {
    ordered_json e;
    e["node"] = node + 1;
    e["stratum"] = k + 1;
    degen.push_back(std::move(e));
  }
  j["degenerate_fits"] = std::move(degen);
  write_file(path, j.dump(2) + "\n");
}

EstimateDocument read_estimate_json(const std::string& path) {
  const ordered_json j = parse_json_file(path, "seplogit-estimate");
  EstimateDocument doc;
  try {
    doc.p = j.at("p").get<std::size_t>();
    doc.K = j.at("K").get<std::size_t>();
    doc.stratum_names = j.at("stratum_names").get<std::vector<std::string>>();
    doc.variable_names = j.at("variable_names").get<std::vector<std::string>>();
    const auto& sel = j.at("selection");
    doc.selection.estimator = sel.at("estimator").get<std::string>();
    doc.selection.rule = sel.at("rule").get<std::string>();
    if (sel.contains("reference"))
      doc.selection.reference = sel.at("reference").get<std::string>();
    doc.selection.grid.lambda1_count = sel.at("grid").at("lambda1_count").get<int>();
    doc.selection.grid.lambda2_count = sel.at("grid").at("lambda2_count").get<int>();
    doc.selection.grid.min_ratio = sel.at("grid").at("min_ratio").get<double>();
    doc.selection.lambda2_scale = sel.value("lambda2_scale", "common");
    doc.selection.seed = sel.at("seed").get<std::uint64_t>();
    doc.selection.min_odds_ratio = sel.at("min_odds_ratio").get<double>();
    doc.selection.lambda1 = sel.at("lambda1").get<double>();
    doc.selection.lambda2 = sel.at("lambda2").get<std::vector<double>>();
    doc.selection.bic = sel.at("bic").get<double>();
    doc.selection.df = sel.at("df").get<double>();
    doc.main_effects = j.at("main_effects").get<std::vector<std::vector<double>>>();
    doc.interactions = triples_from_json(j.at("interactions"), path);
    doc.heterogeneous_pairs = pairs_from_json(j.at("heterogeneity"));
    for (const auto& e : j.at("degenerate_fits"))
      doc.degenerate_fits.emplace_back(e.at("node").get<std::size_t>() - 1,
                                       e.at("stratum").get<std::size_t>() - 1);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(path + ": " + ex.what());
  }
  if (doc.stratum_names.size() != doc.K || doc.variable_names.size() != doc.p)
    throw DataError(path + ": name lists do not match p/K");
  for (const auto& t : doc.interactions)
    if (t.j >= doc.p || t.l >= doc.p || t.values.size() != doc.K)
      throw DataError(path + ": malformed interaction triple");
  return doc;
}

TruthDocument make_truth_document(const StratifiedTruth& truth, const SimulationDesign& design) {
  const std::size_t p = truth.params.num_nodes();
  const std::size_t K = truth.params.num_strata();
  TruthDocument doc;
  doc.p = p;
  doc.K = K;
  for (std::size_t k = 0; k < K; ++k) doc.stratum_names.push_back("s" + std::to_string(k + 1));
  for (std::size_t j = 0; j < p; ++j) doc.variable_names.push_back("v" + std::to_string(j + 1));
  doc.structure = to_string(design.structure);
  doc.rho = design.rho;
  doc.n = design.n;
  doc.seed = design.seed;
  doc.main_effects.assign(K, std::vector<double>(p, 0.0));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < p; ++j) doc.main_effects[k][j] = truth.params.stratum(k).main(j);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = j + 1; l < p; ++l) {
      std::vector<double> values(K);
      bool any = false;
      for (std::size_t k = 0; k < K; ++k) {
        values[k] = truth.params.stratum(k).interaction(j, l);
        any = any || values[k] != 0.0;
      }
      if (any) doc.interactions.push_back({j, l, std::move(values)});
      if (truth.z_star[pair_index(j, l, p)]) doc.heterogeneous_pairs.emplace_back(j, l);
    }
  }
  return doc;
}

void write_truth_json(const TruthDocument& doc, const std::string& path) {
  ordered_json j;
  j["format"] = "seplogit-truth";
  j["version"] = 1;
  j["p"] = doc.p;
  j["K"] = doc.K;
  j["stratum_names"] = doc.stratum_names;
  j["variable_names"] = doc.variable_names;
  j["design"] = {{"structure", doc.structure},
                 {"rho", doc.rho},
                 {"n", doc.n},
                 {"seed", doc.seed}};
  j["main_effects"] = doc.main_effects;
  j["interactions"] = triples_to_json(doc.interactions);
  j["heterogeneity"] = pairs_to_json(doc.heterogeneous_pairs);
  write_file(path, j.dump(2) + "\n");
}

TruthDocument read_truth_json(const std::string& path) {
  const ordered_json j = parse_json_file(path, "seplogit-truth");
  TruthDocument doc;
  try {
    doc.p = j.at("p").get<std::size_t>();
    doc.K = j.at("K").get<std::size_t>();
    doc.stratum_names = j.at("stratum_names").get<std::vector<std::string>>();
    doc.variable_names = j.at("variable_names").get<std::vector<std::string>>();
    doc.structure = j.at("design").at("structure").get<std::string>();
    doc.rho = j.at("design").at("rho").get<double>();
    doc.n = j.at("design").at("n").get<std::size_t>();
    doc.seed = j.at("design").at("seed").get<std::uint64_t>();
    doc.main_effects = j.at("main_effects").get<std::vector<std::vector<double>>>();
    doc.interactions = triples_from_json(j.at("interactions"), path);
    doc.heterogeneous_pairs = pairs_from_json(j.at("heterogeneity"));
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(path + ": " + ex.what());
  }
  return doc;
}

void write_bench_csv(const std::vector<BenchmarkRecord>& records, const std::string& path) {
  std::string out =
      "design,structure,p,K,rho,replicate,estimator,acc_s,acc_h,lambda1,lambda2,df,seconds\n";
  for (const auto& r : records) {
    out += r.design_id;
    out += ',';
    out += to_string(r.structure);
    out += ',';
    out += std::to_string(r.p);
    out += ',';
    out += std::to_string(r.K);
    out += ',';
    out += format_double(r.rho);
    out += ',';
    out += std::to_string(r.replicate);
    out += ',';
    out += r.estimator;
    if (r.failed) {
      out += ",,,,,";
    } else {
      out += ',';
      out += format_double(r.acc_s);
      out += ',';
      out += format_double(r.acc_h);
      out += ',';
      out += format_double(r.lambda1);
      out += ',';
      out += format_double(r.lambda2);
      out += ',';
      out += format_double(r.df);
    }
    out += ',';
    out += format_double(r.seconds);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<BenchmarkRecord> read_bench_csv(const std::string& path) {
  const std::string content = read_file(path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::vector<BenchmarkRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 13)
      throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(f.size()) + " fields, expected 13");
    const std::string where = path + " line " + std::to_string(line_no);
    BenchmarkRecord r;
    r.design_id = f[0];
    r.structure = structure_from_string(f[1]);
    r.p = static_cast<std::size_t>(parse_double(f[2], where));
    r.K = static_cast<std::size_t>(parse_double(f[3], where));
    r.rho = parse_double(f[4], where);
    r.replicate = static_cast<int>(parse_double(f[5], where));
    r.estimator = f[6];
    if (f[7].empty()) {
      r.failed = true;
    } else {
      r.acc_s = parse_double(f[7], where);
      r.acc_h = parse_double(f[8], where);
      r.lambda1 = parse_double(f[9], where);
      r.lambda2 = parse_double(f[10], where);
      r.df = parse_double(f[11], where);
    }
    r.seconds = parse_double(f[12], where);
    records.push_back(std::move(r));
  }
  return records;
}

std::string bench_summary(const std::vector<BenchmarkRecord>& records) {
  struct Group {
    std::string design, estimator;
    double acc_s = 0.0, acc_h = 0.0, seconds = 0.0;
    int n = 0, failed = 0;
  };
  std::vector<Group> groups;
  auto find = [&](const std::string& d, const std::string& e) -> Group& {
    for (auto& g : groups)
      if (g.design == d && g.estimator == e) return g;
    groups.push_back({d, e, 0.0, 0.0, 0.0, 0, 0});
    return groups.back();
  };
  for (const auto& r : records) {
    Group& g = find(r.design_id, r.estimator);
    if (r.failed) {
      ++g.failed;
      continue;
    }
    g.acc_s += r.acc_s;
    g.acc_h += r.acc_h;
    g.seconds += r.seconds;
    ++g.n;
  }

  std::string out = "design estimator replicates mean_acc_s mean_acc_h mean_seconds failed\n";
  char buf[256];
  for (const auto& g : groups) {
    const double n = std::max(g.n, 1);
    std::snprintf(buf, sizeof(buf), "%s %s %d %.4f %.4f %.3f %d\n", g.design.c_str(),
                  g.estimator.c_str(), g.n, g.acc_s / n, g.acc_h / n, g.seconds / n, g.failed);
    out += buf;
  }
  return out;
}

GraphFormat graph_format_from_string(const std::string& s) {
  if (s == "structured" || s == "json") return GraphFormat::Structured;
  if (s == "dot") return GraphFormat::Dot;
  throw DataError("unknown export format '" + s + "' (expected structured|dot)");
}

namespace {

std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out.empty() ? std::string("stratum") : out;
}

}  // namespace

std::vector<std::string> export_graphs(const EstimateDocument& doc, GraphFormat format,
                                       double min_odds_ratio, const std::string& prefix) {
  if (min_odds_ratio < 0.0) throw DataError("export: min odds ratio must be nonnegative");
  const double threshold = std::max(min_odds_ratio, 1.0);
  std::vector<std::string> written;
  for (std::size_t k = 0; k < doc.K; ++k) {
    struct Edge {
      std::size_t j, l;
      double weight;
    };
    std::vector<Edge> edges;
    for (const auto& t : doc.interactions) {
      const double v = t.values.at(k);
      if (std::abs(v) <= kFuseTol) continue;
      if (std::exp(std::abs(v)) < threshold) continue;
      edges.push_back({t.j, t.l, v});
    }

    const std::string stem = prefix + "_" + sanitize_filename(doc.stratum_names[k]);
    if (format == GraphFormat::Structured) {
      ordered_json g;
      g["format"] = "seplogit-graph";
      g["stratum"] = doc.stratum_names[k];
      g["min_odds_ratio"] = min_odds_ratio;
      g["nodes"] = doc.variable_names;
      ordered_json arr = ordered_json::array();
      for (const auto& e : edges) {
        ordered_json je;
        je["source"] = doc.variable_names[e.j];
        je["target"] = doc.variable_names[e.l];
        je["weight"] = e.weight;
        je["odds_ratio"] = std::exp(e.weight);
        arr.push_back(std::move(je));
      }
      g["edges"] = std::move(arr);
      const std::string path = stem + ".json";
      write_file(path, g.dump(2) + "\n");
      written.push_back(path);
    } else {
      std::string out = "graph \"" + doc.stratum_names[k] + "\" {\n";
      for (const auto& v : doc.variable_names) out += "  \"" + v + "\";\n";
      for (const auto& e : edges) {
        out += "  \"" + doc.variable_names[e.j] + "\" -- \"" + doc.variable_names[e.l] +
               "\" [label=\"" + format_double(std::exp(e.weight)) + "\", weight=\"" +
               format_double(e.weight) + "\"];\n";
      }
      out += "}\n";
      const std::string path = stem + ".dot";
      write_file(path, out);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace seplogit
