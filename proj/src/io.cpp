#include "liabval/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "liabval/errors.hpp"

namespace liabval {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(line, "column " + column + ": '" + s + "' is not a finite number");
  }
  return v;
}

int parse_int(const std::string& s, std::size_t line, const std::string& column) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(line, "column " + column + ": '" + s + "' is not an integer");
  }
  return v;
}

struct Row {
  NodeSpec spec;
  std::vector<double> flows;  // x_o, x_f_1..x_f_m
  std::size_t line;
};

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(what + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw DataError(what + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    Eigen::VectorXd row = vector_from_json(j[r], what + " row");
    if (static_cast<std::size_t>(row.size()) != cols) throw DataError(what + " rows differ in length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) throw DataError(where + ": missing field '" + name + "'");
  return j.at(name);
}

std::vector<double> doubles(const json& j, const std::string& what) {
  Eigen::VectorXd v = vector_from_json(j, what);
  return {v.data(), v.data() + v.size()};
}

}  // namespace

TreeInput read_tree_csv(std::istream& in, const std::vector<double>& discount) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  const std::vector<std::string> fixed{"node_id", "parent_id", "time", "branch_prob", "density", "x_o"};
  if (header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    fail(line_no, "header must start with node_id,parent_id,time,branch_prob,density,x_o");
  }
  const std::size_t m = header.size() - fixed.size();
  for (std::size_t k = 0; k < m; ++k) {
    if (header[fixed.size() + k] != "x_f_" + std::to_string(k + 1)) {
      fail(line_no, "expected column x_f_" + std::to_string(k + 1) + ", found '" +
                        header[fixed.size() + k] + "'");
    }
  }

  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      fail(line_no, "expected " + std::to_string(header.size()) + " columns, found " +
                        std::to_string(cells.size()));
    }
    Row row;
    row.line = line_no;
    row.spec.label = cells[0];
    if (row.spec.label.empty()) fail(line_no, "empty node_id");
    if (!cells[1].empty()) row.spec.parent = cells[1];
    row.spec.time = parse_int(cells[2], line_no, "time");
    row.spec.branch_prob = parse_double(cells[3], line_no, "branch_prob");
    row.spec.density = parse_double(cells[4], line_no, "density");
    for (std::size_t k = 5; k < cells.size(); ++k) {
      if (!row.spec.parent) {
        if (!cells[k].empty()) fail(line_no, "root row must leave flow columns empty");
        row.flows.push_back(0.0);
      } else {
        row.flows.push_back(parse_double(cells[k], line_no, header[k]));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("tree file has no node rows");

  std::map<std::string, std::vector<std::size_t>> siblings;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].spec.parent) siblings[*rows[i].spec.parent].push_back(i);
  }
  std::size_t renormalized = 0;
  for (const auto& [parent, group] : siblings) {
    double sum = 0.0;
    for (std::size_t i : group) sum += rows[i].spec.branch_prob;
    if (sum != 1.0 && std::abs(sum - 1.0) <= kProbabilityTolerance) {
      for (std::size_t i : group) rows[i].spec.branch_prob /= sum;
      ++renormalized;
    }
  }

  std::vector<NodeSpec> specs;
  for (const auto& r : rows) specs.push_back(r.spec);
  TreeInput out{ScenarioTree::from_specs(specs), {}, renormalized};
  const auto n = static_cast<Eigen::Index>(out.tree.size());
  out.flows.liability = NodeValues::Zero(n);
  out.flows.instruments = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(m));
  if (!discount.empty() && discount.size() < static_cast<std::size_t>(out.tree.horizon())) {
    throw DataError("discount curve has " + std::to_string(discount.size()) +
                    " factors but the tree has " + std::to_string(out.tree.horizon()) + " periods");
  }
  for (double d : discount) {
    if (!(d > 0.0) || !std::isfinite(d)) throw DataError("discount factors must be positive and finite");
  }
  for (const auto& r : rows) {
    const auto id = static_cast<Eigen::Index>(*out.tree.find(r.spec.label));
    const double factor = (discount.empty() || r.spec.time == 0) ? 1.0 : discount[static_cast<std::size_t>(r.spec.time - 1)];
    out.flows.liability[id] = factor * r.flows[0];
    for (std::size_t k = 0; k < m; ++k) {
      out.flows.instruments(id, static_cast<Eigen::Index>(k)) = factor * r.flows[k + 1];
    }
  }
  return out;
}

TreeInput load_tree_csv(const std::filesystem::path& path, const std::vector<double>& discount) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tree file " + path.string());
  try {
    return read_tree_csv(in, discount);
  } catch (const DataError& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

GaussianModel<double> gaussian_model_from_json(const json& j) {
  const std::string where = "gaussian model";
  const int n = field(j, "n", where).get<int>();
  const int T = field(j, "T", where).get<int>();
  const int m = field(j, "m", where).get<int>();
  auto rows = [&](const char* name) {
    const json& a = field(j, name, where);
    if (!a.is_array() || a.size() != static_cast<std::size_t>(std::max(T, 0))) {
      throw DataError(where + ": " + name + " needs one row per period");
    }
    std::vector<Eigen::VectorXd> out;
    for (std::size_t t = 0; t < a.size(); ++t) out.push_back(vector_from_json(a[t], name));
    return out;
  };
  std::vector<GaussianModel<double>::Loading> loadings;
  const json& b = field(j, "B", where);
  if (!b.is_array()) throw DataError(where + ": B must be a list of {t, s, matrix}");
  for (const auto& entry : b) {
    loadings.push_back({field(entry, "t", "B entry").get<int>(), field(entry, "s", "B entry").get<int>(),
                        matrix_from_json(field(entry, "matrix", "B entry"), "B matrix")});
  }
  return GaussianModel<double>(n, T, m, rows("A"), loadings, rows("lambda"));
}

RiskMeasureSpec risk_measure_from_json(const json& j) {
  const std::string kind = field(j, "kind", "risk_measure").get<std::string>();
  if (kind == "var") return RiskMeasureSpec::value_at_risk(field(j, "u", "risk_measure").get<double>());
  if (kind == "es") return RiskMeasureSpec::expected_shortfall(field(j, "u", "risk_measure").get<double>());
  if (kind == "mixture") {
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : field(j, "atoms", "risk_measure")) {
      if (!a.is_array() || a.size() != 2) throw DataError("mixture atoms must be [level, weight] pairs");
      atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
    return RiskMeasureSpec::mixture(std::move(atoms));
  }
  throw DataError("risk_measure kind must be var, es or mixture, not '" + kind + "'");
}

json risk_measure_to_json(const RiskMeasureSpec& spec) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PointMass>) {
          return {{"kind", "var"}, {"u", 1.0 - m.level}};
        } else if constexpr (std::is_same_v<M, UniformTail>) {
          return {{"kind", "es"}, {"u", m.u}};
        } else {
          json atoms = json::array();
          for (const auto& [q, w] : m.atoms) atoms.push_back({q, w});
          return {{"kind", "mixture"}, {"atoms", atoms}};
        }
      },
      spec.mixture());
}

IidInput iid_from_json(const json& j) {
  const json& periods = field(j, "periods", "iid model");
  if (!periods.is_array() || periods.empty()) throw DataError("iid model: periods must be a non-empty array");
  IidInput out;
  const bool normal = periods[0].contains("sd");
  for (const auto& p : periods) {
    if (p.contains("sd") != normal) throw DataError("iid model: periods mix normal and discrete laws");
    if (normal) {
      out.normal.push_back({field(p, "mean_p", "period").get<double>(), field(p, "mean_q", "period").get<double>(),
                            field(p, "sd", "period").get<double>()});
    } else {
      out.discrete.push_back({doubles(field(p, "values", "period"), "values"),
                              doubles(field(p, "p", "period"), "p"), doubles(field(p, "q", "period"), "q")});
    }
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace liabval
