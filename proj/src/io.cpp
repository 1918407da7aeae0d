#include "collapse/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "collapse/error.hpp"

namespace collapse::io {
namespace {

double to_double(const json& x, const std::string& what) {
  if (!x.is_number()) throw Error(ErrorCode::invalid_argument, what + ": expected a number");
  return x.get<double>();
}

const json& require(const json& doc, const char* key, const std::string& what) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(ErrorCode::invalid_argument, what + ": missing field \"" + key + "\"");
  }
  return doc.at(key);
}

}  // namespace

Eigen::VectorXd vector_from_json(const json& v) {
  if (!v.is_array()) throw Error(ErrorCode::invalid_argument, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = to_double(v[i], "vector entry");
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array()) throw Error(ErrorCode::invalid_argument, "expected an array of rows");
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw Error(ErrorCode::shape_mismatch, "matrix rows must be arrays of equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(rows[i][j], "matrix entry");
    }
  }
  return out;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

RawModel parse_model(const json& doc) {
  RawModel raw;
  const json& k = require(doc, "k", "model");
  if (!k.is_number_integer()) throw Error(ErrorCode::invalid_argument, "model: \"k\" must be an integer");
  raw.k = k.get<int>();
  raw.q = vector_from_json(require(doc, "Q", "model"));
  const json& f = doc.contains("features") ? doc.at("features") : json::array();
  raw.features = matrix_from_json(f);
  if (f.empty()) raw.features = Eigen::MatrixXd(0, raw.k > 0 ? raw.k : 0);
  raw.alpha = doc.contains("alpha") ? vector_from_json(doc.at("alpha")) : Eigen::VectorXd(0);
  return raw;
}

json model_to_json(const RawModel& model) {
  return {{"k", model.k}, {"Q", to_json(model.q)}, {"features", to_json(model.features)}, {"alpha", to_json(model.alpha)}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, path.string() + ": " + e.what());
  }
}

ConstrainedModel load_model(const std::filesystem::path& path) {
  const json doc = read_json(path);
  // A sweep config carries the model under "model", inline or as a relative path.
  if (!doc.contains("k") && doc.contains("model")) {
    const json& m = doc.at("model");
    if (m.is_string()) return load_model(path.parent_path() / m.get<std::string>());
    return validate_model(parse_model(m));
  }
  return validate_model(parse_model(doc));
}

std::vector<int> read_sample(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<int> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int symbol = 0;
    std::string rest;
    if (!(ls >> symbol) || (ls >> rest)) {
      throw Error(ErrorCode::invalid_argument, path.string() + ":" + std::to_string(lineno) + ": expected one integer symbol");
    }
    out.push_back(symbol);
  }
  return out;
}

GridSpec parse_grid(const json& doc) {
  GridSpec g;
  for (const auto& t : require(doc, "theta", "grid")) g.theta.push_back(vector_from_json(t));
  if (doc.contains("alpha")) {
    for (const auto& a : doc.at("alpha")) g.alpha.push_back(vector_from_json(a));
    if (g.alpha.size() != g.theta.size()) throw Error(ErrorCode::shape_mismatch, "grid: one alpha per theta required");
  } else {
    g.alpha = g.theta;
  }
  if (doc.contains("prior")) {
    for (const auto& w : doc.at("prior")) g.prior.push_back(to_double(w, "grid prior"));
  }
  return g;
}

std::vector<GeeCluster> parse_clusters(const json& doc) {
  std::vector<GeeCluster> out;
  for (const auto& c : require(doc, "clusters", "clusters")) {
    out.push_back({matrix_from_json(require(c, "D", "cluster")), matrix_from_json(require(c, "W", "cluster")),
                   matrix_from_json(require(c, "Sigma", "cluster"))});
  }
  return out;
}

json to_json(const Projection& p) {
  return {{"lambda_star", to_json(p.lambda_star)}, {"p_star", to_json(p.p_star)}, {"log_Z", number(p.log_Z)},
          {"dual_value", number(p.dual_value)},    {"iterations", p.iterations},    {"kkt_residual", number(p.kkt_residual)}};
}

json to_json(const CurvatureReport& c) {
  return {{"r", c.r()},
          {"v", to_json(c.v)},
          {"h_star", to_json(c.h_star)},
          {"spectrum", to_json(c.spectrum)},
          {"lambda_min", number(c.lambda_min)},
          {"trace_h", number(c.trace_h)},
          {"trace_hinv", number(c.trace_hinv)},
          {"det_h", number(c.det_h)},
          {"lower_bound_traceinv", number(c.lower_bound_traceinv)},
          {"compression_bounds", {number(c.compression_bounds.first), number(c.compression_bounds.second)}},
          {"zero_dimensional", c.zero_dimensional}};
}

json to_json(const LanfordWindow& w) {
  return {{"n", w.n}, {"rho_n", number(w.rho_n)}, {"radius_euclidean", number(w.radius_euclidean)}};
}

json to_json(const GmmWeight& w) {
  return {{"w_opt", to_json(w.w_opt)},
          {"pushforward", to_json(w.pushforward)},
          {"tangent_kind", w.tangent_kind == TangentKind::simplex_tangent ? "simplex_tangent" : "constraint_tangent"}};
}

json to_json(const GeeCurvature& g) {
  return {{"J", to_json(g.j)}, {"K", to_json(g.k)}, {"sandwich", to_json(g.sandwich)}, {"lambda_min_J", number(g.lambda_min_j)}};
}

json to_json(const FeasibilityReport& f) {
  return {{"alpha_in_hull", f.alpha_in_hull}, {"interior", f.interior},          {"interior_margin", number(f.interior_margin)},
          {"rank_a", f.rank_a},               {"reduced_rows", f.reduced_rows}, {"tangent_dim", f.tangent_dim}};
}

json to_json(const StabilityReport& s) {
  json perts = json::array();
  for (const auto& p : s.perturbations) {
    perts.push_back({{"target", p.target == Perturbation::Target::alpha ? "alpha" : "reference"},
                     {"coordinate", p.coordinate},
                     {"sign", p.sign},
                     {"lambda_min", number(p.lambda_min)},
                     {"delta_lambda_min", number(p.delta_lambda_min)},
                     {"delta_h_norm", number(p.delta_h_norm)},
                     {"weyl_ok", p.weyl_ok}});
  }
  return {{"delta", s.delta},
          {"lambda_min", number(s.lambda_min)},
          {"max_abs_change", number(s.max_abs_change)},
          {"lipschitz", number(s.lipschitz)},
          {"lipschitz_ok", s.lipschitz_ok},
          {"weyl_ok", s.weyl_ok},
          {"perturbations", std::move(perts)}};
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string scalar_text(const json& v) {
  if (v.is_null()) return "nan";
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string flatten(const json& v) {
  if (!v.is_array()) return scalar_text(v);
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += v[i].is_array() ? ";" : " ";
    out += flatten(v[i]);
  }
  return out;
}

void emit(std::ostringstream& os, const std::string& prefix, const json& v) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) emit(os, prefix.empty() ? it.key() : prefix + "." + it.key(), it.value());
    return;
  }
  if (v.is_array() && !v.empty() && v[0].is_object()) {
    for (std::size_t i = 0; i < v.size(); ++i) emit(os, prefix + "[" + std::to_string(i) + "]", v[i]);
    return;
  }
  os << prefix << "," << flatten(v) << "\n";
}

}  // namespace

std::string json_to_csv(const json& obj) {
  std::ostringstream os;
  os << "field,value\n";
  emit(os, "", obj);
  return os.str();
}

}  // namespace collapse::io
