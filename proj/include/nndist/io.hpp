#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "nndist/bounds.hpp"
#include "nndist/constraints.hpp"
#include "nndist/distribution.hpp"
#include "nndist/estimator.hpp"
#include "nndist/network.hpp"
#include "nndist/quadrature.hpp"

namespace nndist::io {

using nlohmann::json;

inline constexpr std::size_t kDefaultWidth = 4;

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericalError("cannot format double");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text, std::string_view what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text == "inf") return kInf;
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw SchemaError("cannot parse '" + std::string(text) + "' as a number in " +
                      std::string(what));
  return v;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical dump; object keys are already sorted by nlohmann::json.
inline std::string config_hash(const json& config) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.dump());
  return os.str();
}

namespace detail {

inline const json& require(const json& j, const char* key, std::string_view owner) {
  if (!j.is_object()) throw SchemaError(std::string(owner) + " must be a JSON object");
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(std::string(owner) + " is missing field '" + key + "'");
  return *it;
}

inline double number(const json& j, std::string_view what) {
  if (j.is_string() && j.get<std::string>() == "inf") return kInf;
  if (!j.is_number()) throw SchemaError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline std::size_t count(const json& j, std::string_view what) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw SchemaError(std::string(what) + " must be a non-negative integer");
  return j.get<std::size_t>();
}

inline std::vector<double> numbers(const json& j, std::string_view what) {
  if (!j.is_array()) throw SchemaError(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

inline json number_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

}  // namespace detail

// ---- vectors and matrices ---------------------------------------------------

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Row-major nested arrays.
inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Vector vector_from_json(const json& j, std::string_view what) {
  const auto v = detail::numbers(j, what);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Matrix matrix_from_json(const json& j, std::string_view what) {
  if (!j.is_array()) throw SchemaError(std::string(what) + " must be an array of rows");
  Matrix m;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = detail::numbers(j[i], what);
    if (i == 0) m.resize(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != m.cols())
      throw ShapeError(std::string(what) + " has ragged rows");
    for (std::size_t c = 0; c < row.size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

// ---- network ----------------------------------------------------------------

inline json to_json(const ActivationProfile& a) {
  json j = {{"kind", std::string(to_string(a.kind))}, {"q", detail::number_json(a.q)}};
  if (a.kind == ActivationKind::leaky_relu) j["slope"] = a.slope;
  return j;
}

inline ActivationProfile activation_from_json(const json& j) {
  if (j.is_string()) {
    const auto kind = activation_kind_from_string(j.get<std::string>());
    return activation_profile(kind, default_window(kind));
  }
  const auto& k = detail::require(j, "kind", "activation");
  if (!k.is_string()) throw SchemaError("activation kind must be a string");
  const auto kind = activation_kind_from_string(k.get<std::string>());
  const double q = j.contains("q") ? detail::number(j["q"], "activation q") : default_window(kind);
  const double slope = j.contains("slope") ? detail::number(j["slope"], "activation slope") : 0.01;
  return activation_profile(kind, q, slope);
}

inline json to_json(const NetworkSpec& s) {
  json acts = json::array();
  for (const auto& a : s.activations) acts.push_back(to_json(a));
  return {{"h", s.input_dim}, {"d", s.depth}, {"widths", s.widths}, {"activations", acts}};
}

/// Accepts `widths` with d-1 hidden widths, or d entries whose last repeats
/// the one before it (the output layer listed explicitly). Without `widths`,
/// every hidden layer gets `width` (default 4). `activations` may be one
/// entry, applied to every hidden layer, or one per hidden layer.
inline NetworkSpec network_spec_from_json(const json& j) {
  NetworkSpec s;
  s.input_dim = detail::count(detail::require(j, "h", "network"), "network h");
  s.depth = detail::count(detail::require(j, "d", "network"), "network d");
  if (s.depth < 2) throw ValidationError("depth d must be >= 2");
  if (j.contains("widths")) {
    const auto& w = j["widths"];
    if (!w.is_array()) throw SchemaError("network widths must be an array");
    for (const auto& e : w) s.widths.push_back(detail::count(e, "network width"));
    if (s.widths.size() == s.depth && s.widths.size() >= 2 &&
        s.widths.back() == s.widths[s.widths.size() - 2])
      s.widths.pop_back();
  } else {
    const std::size_t width =
        j.contains("width") ? detail::count(j["width"], "network width") : kDefaultWidth;
    s.widths.assign(s.depth - 1, width);
  }
  const auto& acts = detail::require(j, "activations", "network");
  if (acts.is_array()) {
    for (const auto& a : acts) s.activations.push_back(activation_from_json(a));
    if (s.activations.size() == 1) s.activations.assign(s.depth - 1, s.activations.front());
  } else {
    s.activations.assign(s.depth - 1, activation_from_json(acts));
  }
  s.validate();
  return s;
}

inline json to_json(const NetworkParams& p) {
  json layers = json::array();
  for (const auto& w : p.layers) layers.push_back(to_json(w));
  return {{"layers", layers}, {"output", to_json(p.output)}};
}

inline NetworkParams params_from_json(const json& j, const NetworkSpec& spec) {
  NetworkParams p;
  const auto& layers = detail::require(j, "layers", "params");
  if (!layers.is_array()) throw SchemaError("params layers must be an array");
  for (const auto& l : layers) p.layers.push_back(matrix_from_json(l, "params layer"));
  p.output = vector_from_json(detail::require(j, "output", "params"), "params output");
  check_shapes(spec, p);
  return p;
}

// ---- constraints -----------------------------------------------------------

inline json to_json(const ConstraintSet& cs) {
  return {{"kind", std::string(to_string(cs.kind))}, {"radii", cs.radii}};
}

inline ConstraintSet constraints_from_json(const json& j) {
  ConstraintSet cs;
  const auto& k = detail::require(j, "kind", "constraints");
  if (!k.is_string()) throw SchemaError("constraint kind must be a string");
  cs.kind = norm_kind_from_string(k.get<std::string>());
  cs.radii = detail::numbers(detail::require(j, "radii", "constraints"), "constraint radii");
  for (double r : cs.radii)
    if (!(r > 0.0) || !std::isfinite(r))
      throw ValidationError("constraint radii must be finite and positive");
  return cs;
}

// ---- distributions ---------------------------------------------------------

inline json to_json(const DistributionSpec& d) {
  if (d.is_gaussian()) {
    const auto& g = d.as_gaussian();
    return {{"type", "gaussian"}, {"mean", to_json(g.mean)}, {"tau", g.tau}, {"gamma", d.gamma}};
  }
  const auto& f = d.as_finite();
  return {{"type", "finite"},
          {"points", to_json(f.points)},
          {"probs", to_json(f.probs)},
          {"gamma", d.gamma}};
}

/// gamma defaults to the tightest admissible value: max(|mean|, tau) for a
/// Gaussian, the largest support norm for a finite distribution.
inline DistributionSpec distribution_from_json(const json& j) {
  const auto& t = detail::require(j, "type", "distribution");
  if (!t.is_string()) throw SchemaError("distribution type must be a string");
  const std::string type = t.get<std::string>();
  if (type == "gaussian") {
    Vector mean = vector_from_json(detail::require(j, "mean", "gaussian"), "gaussian mean");
    const double tau = j.contains("tau") ? detail::number(j["tau"], "gaussian tau") : 1.0;
    const double gamma = j.contains("gamma") ? detail::number(j["gamma"], "gaussian gamma")
                                             : std::max(mean.norm(), tau);
    return DistributionSpec::gaussian(std::move(mean), tau, gamma);
  }
  if (type == "finite") {
    Matrix points = matrix_from_json(detail::require(j, "points", "finite"), "finite points");
    Vector probs = vector_from_json(detail::require(j, "probs", "finite"), "finite probs");
    const double gamma = j.contains("gamma") ? detail::number(j["gamma"], "finite gamma")
                                             : points.rowwise().norm().maxCoeff();
    return DistributionSpec::finite(std::move(points), std::move(probs), gamma);
  }
  throw SchemaError("unknown distribution type '" + type + "'");
}

// ---- solver configs --------------------------------------------------------

inline json to_json(const AscentConfig& c) {
  return {{"restarts", c.restarts}, {"steps", c.steps},         {"step_size", c.step_size},
          {"decay", c.decay},       {"init_scale", c.init_scale}, {"tolerance", c.tolerance},
          {"normalized", c.normalized}};
}

/// Fields override `base`; the seed always comes from the command line.
inline AscentConfig ascent_from_json(const json& j, AscentConfig base = {}) {
  if (!j.is_object()) throw SchemaError("ascent config must be a JSON object");
  if (j.contains("restarts")) base.restarts = detail::count(j["restarts"], "ascent restarts");
  if (j.contains("steps")) base.steps = detail::count(j["steps"], "ascent steps");
  if (j.contains("step_size")) base.step_size = detail::number(j["step_size"], "ascent step_size");
  if (j.contains("decay")) base.decay = detail::number(j["decay"], "ascent decay");
  if (j.contains("init_scale"))
    base.init_scale = detail::number(j["init_scale"], "ascent init_scale");
  if (j.contains("tolerance")) base.tolerance = detail::number(j["tolerance"], "ascent tolerance");
  if (j.contains("normalized")) {
    if (!j["normalized"].is_boolean()) throw SchemaError("ascent normalized must be true or false");
    base.normalized = j["normalized"].get<bool>();
  }
  base.validate();
  return base;
}

inline json to_json(const QuadratureConfig& q) {
  return {{"rule", q.rule == QuadratureRule::adaptive_simpson ? "adaptive_simpson" : "gauss_hermite"},
          {"nodes", q.nodes},
          {"tolerance", q.tolerance},
          {"half_width", q.half_width}};
}

inline QuadratureConfig quadrature_from_json(const json& j, QuadratureConfig base = {}) {
  if (!j.is_object()) throw SchemaError("quadrature config must be a JSON object");
  if (j.contains("rule")) {
    const std::string r = j["rule"].is_string() ? j["rule"].get<std::string>() : "";
    if (r == "adaptive_simpson") base.rule = QuadratureRule::adaptive_simpson;
    else if (r == "gauss_hermite") base.rule = QuadratureRule::gauss_hermite;
    else throw SchemaError("unknown quadrature rule '" + r + "'");
  }
  if (j.contains("nodes")) base.nodes = detail::count(j["nodes"], "quadrature nodes");
  if (j.contains("tolerance"))
    base.tolerance = detail::number(j["tolerance"], "quadrature tolerance");
  if (j.contains("half_width"))
    base.half_width = detail::number(j["half_width"], "quadrature half_width");
  base.validate();
  return base;
}

// ---- results ---------------------------------------------------------------

inline json to_json(const EstimateResult& r, bool with_witness) {
  json j = {{"value", r.value},
            {"restart_values", r.restart_values},
            {"sign", r.sign},
            {"best_restart", r.best_restart}};
  if (with_witness) j["witness"] = to_json(r.witness);
  return j;
}

inline json to_json(const BoundReport& b) {
  json pre = json::array();
  for (const auto& p : b.preconditions)
    pre.push_back({{"description", p.description}, {"satisfied", p.satisfied}});
  return {{"name", b.name},
          {"side", std::string(to_string(b.side))},
          {"constant", b.constant_factor},
          {"rate", b.rate_description},
          {"rate_at_nm", b.rate_factor},
          {"total", b.total},
          {"preconditions", pre},
          {"preconditions_ok", b.preconditions_ok()}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("malformed JSON in '" + path + "': " + e.what());
  }
}

// ---- CSV -------------------------------------------------------------------

/// Rows are buffered, sorted by their leading key columns, and written with a
/// provenance comment and a header, so output bytes do not depend on the order
/// in which results were produced.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  using Cell = std::variant<std::string, double, long long>;

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size())
      throw ShapeError("csv row has " + std::to_string(row.size()) + " cells, header has " +
                       std::to_string(header_.size()));
    rows_.push_back(std::move(row));
  }

  /// Lexicographic over the first `keys` columns; strings compare as text,
  /// numbers numerically. Stable, so ties keep insertion order.
  void sort_by(std::size_t keys) {
    std::stable_sort(rows_.begin(), rows_.end(), [keys](const auto& a, const auto& b) {
      for (std::size_t k = 0; k < keys; ++k) {
        if (a[k] == b[k]) continue;
        if (a[k].index() != b[k].index()) return a[k].index() < b[k].index();
        return a[k] < b[k];
      }
      return false;
    });
  }

  std::size_t size() const { return rows_.size(); }

  void write(std::ostream& os, const std::string& hash, std::uint64_t seed) const {
    os << "# config_hash=" << hash << " seed=" << seed << '\n';
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << render(row[i]);
      os << '\n';
    }
  }

  void write_file(const std::string& path, const std::string& hash, std::uint64_t seed) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    write(out, hash, seed);
  }

 private:
  static std::string render(const Cell& c) {
    if (auto s = std::get_if<std::string>(&c)) return *s;
    if (auto d = std::get_if<double>(&c)) return format_double(*d);
    return std::to_string(std::get<long long>(c));
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Parsed CSV: comment lines skipped, first remaining line is the header.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw SchemaError("csv is missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvData read_csv(std::istream& in) {
  CsvData data;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      data.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != data.header.size())
        throw SchemaError("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(data.header.size()));
      data.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw SchemaError("csv has no header row");
  return data;
}

inline CsvData read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in);
}

/// One row per sample, columns x1..xh.
inline void write_samples(std::ostream& os, const SampleSet& s) {
  os << "# seed=" << s.seed << '\n';
  for (std::size_t c = 0; c < s.dim(); ++c) os << (c ? "," : "") << 'x' << (c + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < s.rows.rows(); ++i) {
    for (Eigen::Index c = 0; c < s.rows.cols(); ++c)
      os << (c ? "," : "") << format_double(s.rows(i, c));
    os << '\n';
  }
}

/// Every column is read as one coordinate; the header names are not checked.
inline SampleSet read_samples(std::istream& in, std::string_view what = "samples") {
  const CsvData data = read_csv(in);
  if (data.rows.empty()) throw ValidationError(std::string(what) + " file has no rows");
  SampleSet s;
  s.rows.resize(static_cast<Eigen::Index>(data.rows.size()),
                static_cast<Eigen::Index>(data.header.size()));
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    for (std::size_t c = 0; c < data.header.size(); ++c)
      s.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_double(data.rows[i][c], what);
  return s;
}

inline SampleSet read_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_samples(in, path);
}

}  // namespace nndist::io
