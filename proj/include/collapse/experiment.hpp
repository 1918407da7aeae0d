#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "collapse/model.hpp"

namespace collapse {

struct ExperimentConfig {
  RawModel model;
  std::vector<int> n_grid;
  std::vector<int> m_grid;
  /// nullopt: default_tau(model, n) per cell.
  std::optional<double> tau;
  /// (C_geo, C'_geo); nullopt: fit at the smallest successful n per m and
  /// freeze for larger n.
  std::optional<std::pair<double, double>> constants;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path outputs;
};

/// Config document:
///   {"model": {...} | "path.json", "n_grid": [...], "m_grid": [...],
///    "tau": "auto" | number, "constants": "fit_at_smallest_n" | {"c_geo": x, "c_geo_prime": y},
///    "seeds": [...], "outputs": "dir"}
/// Relative paths resolve against `base_dir`. Throws InvalidArgument on an
/// empty grid or an n smaller than max m.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> pairs;  // (log x, log y)
};

/// OLS of log ys on log xs. Throws InvalidArgument on fewer than three
/// points, mismatched lengths or a nonpositive value.
RateFit rate_fit(std::span<const double> xs, std::span<const double> ys);

struct CellResult {
  int n = 0;
  int m = 0;
  double tau = 0.0;
  double lambda_min = 0.0;
  double tv_exact = 0.0;
  /// NaN when the tangent dimension exceeds the quadrature limit.
  double tv_gaussian = 0.0;
  double bound = 0.0;
  double mass_out = 0.0;
  double rho_ratio = 0.0;
  double p_star_min = 0.0;
  bool skipped = false;
  std::string reason;
};

struct FrozenConstants {
  int m = 0;
  double c_geo = 0.0;
  double c_geo_prime = 0.0;
  bool fitted = false;
  int fitted_at_n = 0;
};

struct ExperimentReport {
  /// Grid order (n outer, m inner), skipped cells included and flagged.
  std::vector<CellResult> cells;
  std::vector<FrozenConstants> constants;
  std::vector<std::pair<int, RateFit>> rate_fits;  // per m, x = sqrt(log n / n), y = tv_exact
  std::vector<std::pair<int, std::string>> fit_omitted;
  nlohmann::json summary;
  std::string csv;
  /// 0, or 2 when any cell was skipped.
  int exit_code = 0;
};

/// Worker count from COLLAPSE_LAB_THREADS (>= 1), else the hardware
/// concurrency.
int thread_count_from_env();

/// Evaluates every (n, m) cell on `threads` workers; results are assembled in
/// grid order so the output does not depend on scheduling.
ExperimentReport run_experiment(const ExperimentConfig& config, int threads = 0);

inline constexpr const char* kCsvHeader = "n,m,tau,lambda_min,tv_exact,tv_gaussian,bound,mass_out,rho_ratio";

/// "# schema_version=1", the header, then one row per non-skipped cell.
std::string cells_csv(std::span<const CellResult> cells);

/// Writes collapse.csv and summary.json into `dir` (created if needed).
/// Throws IoError when the directory cannot be written.
void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace collapse
