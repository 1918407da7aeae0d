#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "collapse/betel.hpp"
#include "collapse/curvature.hpp"
#include "collapse/model.hpp"
#include "collapse/moments.hpp"
#include "collapse/projection.hpp"

namespace collapse::io {

using json = nlohmann::json;

/// {"k": int, "Q": [...], "features": [[...], ...], "alpha": [...]}
RawModel parse_model(const json& doc);
json model_to_json(const RawModel& model);

json read_json(const std::filesystem::path& path);
// Reads a model file, or the "model" entry of a sweep config.
ConstrainedModel load_model(const std::filesystem::path& path);

/// One 1-based symbol per line; blank lines and lines starting with '#'
/// are skipped.
std::vector<int> read_sample(const std::filesystem::path& path);

/// Grid document: {"theta": [[...], ...], "alpha": [[...], ...], "prior": [...]}.
/// "alpha" defaults to theta itself (alpha(theta) = theta); "prior" is optional.
struct GridSpec {
  std::vector<Eigen::VectorXd> theta;
  std::vector<Eigen::VectorXd> alpha;
  std::vector<double> prior;
};
GridSpec parse_grid(const json& doc);

/// {"clusters": [{"D": [[...]], "W": [[...]], "Sigma": [[...]]}, ...]}
std::vector<GeeCluster> parse_clusters(const json& doc);

Eigen::MatrixXd matrix_from_json(const json& rows);
Eigen::VectorXd vector_from_json(const json& v);
/// Non-finite values become null.
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::VectorXd& v);
json number(double x);

json to_json(const Projection& p);
json to_json(const CurvatureReport& c);
json to_json(const LanfordWindow& w);
json to_json(const GmmWeight& w);
json to_json(const GeeCurvature& g);
json to_json(const FeasibilityReport& f);
json to_json(const StabilityReport& s);

/// Shortest round-trip-safe decimal ("%.17g"); "inf", "-inf", "nan" for
/// non-finite values.
std::string format_number(double x);

/// Flattens a JSON object into "field,value" CSV rows (arrays are written as
/// space-separated values, nested arrays with ';' between rows).
std::string json_to_csv(const json& obj);

}  // namespace collapse::io
