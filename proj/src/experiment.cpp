#include "collapse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "collapse/curvature.hpp"
#include "collapse/error.hpp"
#include "collapse/io.hpp"
#include "collapse/oracle.hpp"
#include "collapse/projection.hpp"

namespace collapse {
namespace {

using nlohmann::json;

std::vector<int> int_list(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw Error(ErrorCode::invalid_argument, std::string("config: \"") + key + "\" must be an array of integers");
  }
  std::vector<int> out;
  for (const auto& v : doc.at(key)) {
    if (!v.is_number_integer()) throw Error(ErrorCode::invalid_argument, std::string("config: \"") + key + "\" entries must be integers");
    out.push_back(v.get<int>());
  }
  return out;
}

// Everything one cell needs that does not depend on (n, m).
struct Shared {
  const ConstrainedModel& model;
  const Projection& proj;
  const CurvatureReport& curv;
  std::optional<double> tau;
};

CellResult evaluate_cell(const Shared& s, int n, int m) {
  CellResult c;
  c.n = n;
  c.m = m;
  c.lambda_min = s.curv.lambda_min;
  c.p_star_min = s.proj.p_min();
  c.tv_gaussian = std::numeric_limits<double>::quiet_NaN();
  c.bound = std::numeric_limits<double>::quiet_NaN();
  try {
    const TypeEnsemble ens = feasible_types(s.model, n, s.tau);
    c.tau = ens.tau;
    const PredictiveLaw exact = predictive_exact(ens, m);
    c.tv_exact = tv_distance(exact, product_law(s.proj.p_star, m));
    if (s.curv.r() <= 3) {
      const MixtureApproximation mix = gaussian_mixture_approx(s.model, s.proj, s.curv, n, m);
      c.tv_gaussian = tv_distance(mix.law, exact);
    }
    c.mass_out = window_partition(ens, s.proj.p_star, lanford_radius(s.curv.lambda_min, n)).mass_out;
    c.rho_ratio = lanford_fixed_point(ens, s.proj, s.curv).ratio;
  } catch (const EmptyFeasibleSet& e) {
    c.skipped = true;
    c.reason = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::enumeration_guard && e.code() != ErrorCode::invalid_argument) throw;
    c.skipped = true;
    c.reason = std::string(to_string(e.code())) + ": " + e.what();
  }
  return c;
}

// Denominator of the bound with unit constants.
double unit_bound(const CellResult& c) {
  return collapse_bound({1.0, 1.0, c.p_star_min, c.lambda_min, c.n, c.m});
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::invalid_argument, "config: expected a JSON object");
  ExperimentConfig cfg;
  if (!doc.contains("model")) throw Error(ErrorCode::invalid_argument, "config: missing \"model\"");
  const json& model = doc.at("model");
  if (model.is_string()) {
    cfg.model = io::parse_model(io::read_json(base_dir / model.get<std::string>()));
  } else {
    cfg.model = io::parse_model(model);
  }
  cfg.n_grid = int_list(doc, "n_grid");
  cfg.m_grid = int_list(doc, "m_grid");
  if (cfg.n_grid.empty() || cfg.m_grid.empty()) throw Error(ErrorCode::invalid_argument, "config: grids must be nonempty");
  const int max_m = *std::max_element(cfg.m_grid.begin(), cfg.m_grid.end());
  for (int n : cfg.n_grid) {
    if (n < 2) throw Error(ErrorCode::invalid_argument, "config: n values must be at least 2");
    if (n < max_m) throw Error(ErrorCode::invalid_argument, "config: n values must be at least max m");
  }
  for (int m : cfg.m_grid) {
    if (m < 0) throw Error(ErrorCode::invalid_argument, "config: m values must be nonnegative");
  }
  if (doc.contains("tau")) {
    const json& t = doc.at("tau");
    if (t.is_number()) {
      cfg.tau = t.get<double>();
      if (!(*cfg.tau >= 0.0)) throw Error(ErrorCode::invalid_argument, "config: tau must be nonnegative");
    } else if (!(t.is_string() && t.get<std::string>() == "auto")) {
      throw Error(ErrorCode::invalid_argument, "config: tau must be \"auto\" or a number");
    }
  }
  if (doc.contains("constants")) {
    const json& c = doc.at("constants");
    if (c.is_object()) {
      if (!c.contains("c_geo") || !c.contains("c_geo_prime")) {
        throw Error(ErrorCode::invalid_argument, "config: constants need c_geo and c_geo_prime");
      }
      cfg.constants = std::make_pair(c.at("c_geo").get<double>(), c.at("c_geo_prime").get<double>());
    } else if (!(c.is_string() && c.get<std::string>() == "fit_at_smallest_n")) {
      throw Error(ErrorCode::invalid_argument, "config: constants must be \"fit_at_smallest_n\" or an object");
    }
  }
  if (doc.contains("seeds")) {
    for (const auto& s : doc.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  if (doc.contains("outputs")) {
    const std::filesystem::path out = doc.at("outputs").get<std::string>();
    cfg.outputs = out.is_absolute() ? out : base_dir / out;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_json(path), path.parent_path());
}

RateFit rate_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::shape_mismatch, "rate_fit: xs and ys differ in length");
  if (xs.size() < 3) throw Error(ErrorCode::invalid_argument, "rate_fit: at least three points required");
  RateFit fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw Error(ErrorCode::invalid_argument, "rate_fit: values must be positive");
    fit.pairs.emplace_back(std::log(xs[i]), std::log(ys[i]));
    mx += fit.pairs.back().first;
    my += fit.pairs.back().second;
  }
  const double count = static_cast<double>(xs.size());
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [lx, ly] : fit.pairs) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::invalid_argument, "rate_fit: xs must not all be equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

int thread_count_from_env() {
  if (const char* env = std::getenv("COLLAPSE_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentReport run_experiment(const ExperimentConfig& config, int threads) {
  const ConstrainedModel model = validate_model(config.model);
  const Projection proj = project(model);
  const CurvatureReport curv = curvature_report(model, proj);
  const Shared shared{model, proj, curv, config.tau};

  std::vector<std::pair<int, int>> grid;
  for (int n : config.n_grid) {
    for (int m : config.m_grid) grid.emplace_back(n, m);
  }

  ExperimentReport report;
  report.cells.resize(grid.size());
  const int workers = std::clamp(threads > 0 ? threads : thread_count_from_env(), 1, static_cast<int>(grid.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = next++; i < grid.size(); i = next++) {
        report.cells[i] = evaluate_cell(shared, grid[i].first, grid[i].second);
      }
    } catch (...) {
      failures[w] = std::current_exception();
      next = grid.size();
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
  work(0);
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  // Constants per m, then the bound column.
  std::vector<int> ms = config.m_grid;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  for (int m : ms) {
    FrozenConstants fc;
    fc.m = m;
    if (config.constants) {
      fc.c_geo = config.constants->first;
      fc.c_geo_prime = config.constants->second;
    } else {
      const CellResult* smallest = nullptr;
      for (const auto& c : report.cells) {
        if (c.m == m && !c.skipped && (!smallest || c.n < smallest->n)) smallest = &c;
      }
      if (smallest) {
        const double denom = unit_bound(*smallest);
        fc.c_geo = fc.c_geo_prime = denom > 0.0 ? smallest->tv_exact / denom : 0.0;
        fc.fitted = true;
        fc.fitted_at_n = smallest->n;
      }
    }
    for (auto& c : report.cells) {
      if (c.m == m && !c.skipped) c.bound = collapse_bound({fc.c_geo, fc.c_geo_prime, c.p_star_min, c.lambda_min, c.n, c.m});
    }
    report.constants.push_back(fc);

    std::vector<int> ns;
    std::vector<double> xs, ys;
    for (const auto& c : report.cells) {
      if (c.m != m || c.skipped) continue;
      if (std::find(ns.begin(), ns.end(), c.n) != ns.end()) continue;
      ns.push_back(c.n);
      xs.push_back(std::sqrt(std::log(static_cast<double>(c.n)) / c.n));
      ys.push_back(c.tv_exact);
    }
    if (xs.size() < 3) {
      report.fit_omitted.emplace_back(m, "fewer than three cells");
    } else if (std::any_of(ys.begin(), ys.end(), [](double y) { return !(y > 0.0); })) {
      report.fit_omitted.emplace_back(m, "tv_exact is zero in some cell");
    } else {
      report.rate_fits.emplace_back(m, rate_fit(xs, ys));
    }
  }

  json skipped = json::array();
  for (const auto& c : report.cells) {
    if (c.skipped) skipped.push_back({{"n", c.n}, {"m", c.m}, {"reason", c.reason}});
  }
  json constants = json::array();
  for (const auto& fc : report.constants) {
    json entry = {{"m", fc.m}, {"c_geo", io::number(fc.c_geo)}, {"c_geo_prime", io::number(fc.c_geo_prime)}, {"fitted", fc.fitted}};
    if (fc.fitted) entry["fitted_at_n"] = fc.fitted_at_n;
    constants.push_back(std::move(entry));
  }
  json fits = json::array();
  for (const auto& [m, fit] : report.rate_fits) {
    json pairs = json::array();
    for (const auto& [lx, ly] : fit.pairs) pairs.push_back({io::number(lx), io::number(ly)});
    fits.push_back({{"m", m},
                    {"x", "sqrt(log n / n)"},
                    {"slope", io::number(fit.slope)},
                    {"intercept", io::number(fit.intercept)},
                    {"r_squared", io::number(fit.r_squared)},
                    {"pairs", std::move(pairs)}});
  }
  json omitted = json::array();
  for (const auto& [m, why] : report.fit_omitted) omitted.push_back({{"m", m}, {"reason", why}});

  std::size_t rows = 0;
  for (const auto& c : report.cells) rows += c.skipped ? 0 : 1;
  report.exit_code = skipped.empty() ? 0 : 2;
  report.summary = {{"schema_version", 1},
                    {"cells", grid.size()},
                    {"rows", rows},
                    {"skipped", std::move(skipped)},
                    {"lambda_min", io::number(curv.lambda_min)},
                    {"p_star", io::to_json(proj.p_star)},
                    {"tau", config.tau ? json(*config.tau) : json("auto")},
                    {"constants", std::move(constants)},
                    {"rate_fits", std::move(fits)},
                    {"rate_fits_omitted", std::move(omitted)},
                    {"seeds", config.seeds},
                    {"exit_code", report.exit_code}};
  report.csv = cells_csv(report.cells);
  return report;
}

std::string cells_csv(std::span<const CellResult> cells) {
  std::ostringstream os;
  os << "# schema_version=1\n" << kCsvHeader << "\n";
  for (const auto& c : cells) {
    if (c.skipped) continue;
    os << c.n << "," << c.m << "," << io::format_number(c.tau) << "," << io::format_number(c.lambda_min) << ","
       << io::format_number(c.tv_exact) << "," << io::format_number(c.tv_gaussian) << "," << io::format_number(c.bound)
       << "," << io::format_number(c.mass_out) << "," << io::format_number(c.rho_ratio) << "\n";
  }
  return os.str();
}

void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create output directory " + dir.string() + ": " + ec.message());
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text) || !out.flush()) throw Error(ErrorCode::io_error, "cannot write " + (dir / name).string());
  };
  put("collapse.csv", report.csv);
  put("summary.json", report.summary.dump(2) + "\n");
}

}  // namespace collapse
