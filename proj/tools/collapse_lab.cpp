// collapse-lab: command line front end for the collapse library.
//
//   collapse-lab <subcommand> --config <path> [--format json|csv] ...
//
// Exit codes: 0 success, 1 usage or input error, 2 partial completion.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "collapse/betel.hpp"
#include "collapse/curvature.hpp"
#include "collapse/error.hpp"
#include "collapse/experiment.hpp"
#include "collapse/io.hpp"
#include "collapse/moments.hpp"
#include "collapse/projection.hpp"

namespace {

using collapse::io::json;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string format = "json";
};

void add_common(CLI::App* sub, Common& c, const std::string& what) {
  sub->add_option("--config", c.config, what)->required()->check(CLI::ExistingFile);
  sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
}

void emit(const json& doc, const std::string& format) {
  if (format == "csv") {
    std::cout << collapse::io::json_to_csv(doc);
  } else {
    std::cout << doc.dump(2) << "\n";
  }
}

int cmd_project(const Common& c) {
  const collapse::ConstrainedModel model = collapse::io::load_model(c.config);
  emit(collapse::io::to_json(collapse::project(model)), c.format);
  return 0;
}

int cmd_curvature(const Common& c, const std::vector<double>& plan, std::optional<int> n) {
  const collapse::ConstrainedModel model = collapse::io::load_model(c.config);
  const collapse::Projection proj = collapse::project(model);
  const collapse::CurvatureReport curv = collapse::curvature_report(model, proj);
  json doc = collapse::io::to_json(curv);
  if (!plan.empty()) {
    const int m = static_cast<int>(plan[0]);
    if (m != plan[0] || m < 1) throw collapse::Error(collapse::ErrorCode::invalid_argument, "--plan: m must be a positive integer");
    doc["plan"] = {{"m", m},
                   {"epsilon", plan[1]},
                   {"requirement", collapse::io::number(collapse::sample_size_requirement(m, plan[1], curv.lambda_min))},
                   {"n", collapse::sample_size_plan(m, plan[1], curv.lambda_min)}};
  }
  if (n) doc["window"] = collapse::io::to_json(collapse::lanford_radius(curv.lambda_min, *n));
  emit(doc, c.format);
  return 0;
}

json cells_json(const collapse::ExperimentReport& report) {
  json rows = json::array();
  for (const auto& cell : report.cells) {
    if (cell.skipped) continue;
    rows.push_back({{"n", cell.n},
                    {"m", cell.m},
                    {"tau", collapse::io::number(cell.tau)},
                    {"lambda_min", collapse::io::number(cell.lambda_min)},
                    {"tv_exact", collapse::io::number(cell.tv_exact)},
                    {"tv_gaussian", collapse::io::number(cell.tv_gaussian)},
                    {"bound", collapse::io::number(cell.bound)},
                    {"mass_out", collapse::io::number(cell.mass_out)},
                    {"rho_ratio", collapse::io::number(cell.rho_ratio)}});
  }
  json doc = report.summary;
  doc["rows"] = std::move(rows);
  return doc;
}

int cmd_collapse(const Common& c, const std::vector<int>& ns, const std::vector<int>& ms, std::optional<double> tau,
                 std::optional<double> cgeo, std::optional<double> cgeo2, int threads) {
  collapse::ExperimentConfig cfg;
  cfg.model = collapse::io::load_model(c.config).raw();
  cfg.n_grid = ns;
  cfg.m_grid = ms;
  cfg.tau = tau;
  if (cgeo || cgeo2) cfg.constants = std::make_pair(cgeo.value_or(1.0), cgeo2.value_or(1.0));
  const collapse::ExperimentReport report = collapse::run_experiment(cfg, threads);
  if (c.format == "csv") {
    std::cout << report.csv;
  } else {
    emit(cells_json(report), c.format);
  }
  for (const auto& cell : report.cells) {
    if (cell.skipped) std::cerr << "skipped n=" << cell.n << " m=" << cell.m << ": " << cell.reason << "\n";
  }
  return report.exit_code;
}

int cmd_betel(const Common& c, const std::string& grid_path, const std::string& data_path, const std::string& variant) {
  const collapse::ConstrainedModel model = collapse::io::load_model(c.config);
  collapse::io::GridSpec grid = collapse::io::parse_grid(collapse::io::read_json(grid_path));
  const std::vector<int> sample = collapse::io::read_sample(data_path);
  const collapse::TiltedFamily fam = collapse::build_family(model, grid.theta, grid.alpha);
  const auto v = variant == "as_printed" ? collapse::PosteriorVariant::as_printed : collapse::PosteriorVariant::canonical;
  const collapse::GridPosterior post = collapse::betel_posterior(fam, std::span<const int>(sample), grid.prior, v);

  if (c.format == "csv") {
    const Eigen::Index p = fam.theta.front().size();
    for (Eigen::Index j = 0; j < p; ++j) std::cout << "theta" << j + 1 << ",";
    std::cout << "log_posterior,posterior\n";
    for (std::size_t i = 0; i < fam.size(); ++i) {
      for (Eigen::Index j = 0; j < p; ++j) std::cout << collapse::io::format_number(fam.theta[i](j)) << ",";
      std::cout << collapse::io::format_number(post.log_posterior[i]) << ","
                << collapse::io::format_number(post.posterior[i]) << "\n";
    }
    return 0;
  }
  json theta = json::array();
  for (const auto& t : fam.theta) theta.push_back(collapse::io::to_json(t));
  json logp = json::array(), prob = json::array();
  for (std::size_t i = 0; i < fam.size(); ++i) {
    logp.push_back(collapse::io::number(post.log_posterior[i]));
    prob.push_back(collapse::io::number(post.posterior[i]));
  }
  emit({{"variant", variant}, {"n_obs", post.n_obs}, {"theta", theta}, {"log_posterior", logp}, {"posterior", prob}},
       c.format);
  return 0;
}

int cmd_gmm(const Common& c, const std::string& data_path, const std::string& kind) {
  const collapse::ConstrainedModel model = collapse::io::load_model(c.config);
  const std::vector<int> sample = collapse::io::read_sample(data_path);
  const collapse::Projection proj = collapse::project(model);
  const auto tk = kind == "constraint" ? collapse::TangentKind::constraint_tangent : collapse::TangentKind::simplex_tangent;
  const collapse::GmmWeight w = collapse::gmm_weight(proj.p_star, model.features(), tk);
  const collapse::TypeVector data = collapse::empirical_measure(sample, model.k());
  json doc = collapse::io::to_json(w);
  doc["n"] = data.n;
  doc["objective"] = collapse::io::number(collapse::gmm_objective(data, model.features(), model.alpha(), w.w_opt));
  emit(doc, c.format);
  return 0;
}

int cmd_gee(const Common& c, std::optional<int> n) {
  const json doc_in = collapse::io::read_json(c.config);
  const collapse::GeeCurvature g = collapse::gee_curvature(collapse::io::parse_clusters(doc_in));
  json doc = collapse::io::to_json(g);
  std::optional<int> nn = n;
  if (!nn && doc_in.contains("n")) nn = doc_in.at("n").get<int>();
  if (nn) {
    doc["n"] = *nn;
    doc["rate_proxy"] = collapse::io::number(g.rate_proxy(*nn));
  }
  emit(doc, c.format);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& outputs, int threads) {
  collapse::ExperimentConfig cfg = collapse::load_config(c.config);
  if (!outputs.empty()) cfg.outputs = outputs;
  const collapse::ExperimentReport report = collapse::run_experiment(cfg, threads);
  if (!cfg.outputs.empty()) collapse::write_outputs(report, cfg.outputs);
  if (c.format == "csv") {
    std::cout << report.csv;
  } else {
    emit(report.summary, c.format);
  }
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collapse-lab: I-projections, constraint curvature and predictive collapse on finite alphabets"};
  app.require_subcommand(1);

  Common project_opts, curvature_opts, collapse_opts, betel_opts, gmm_opts, gee_opts, sweep_opts;

  auto* project = app.add_subcommand("project", "I-projection of Q onto the moment constraints");
  add_common(project, project_opts, "model JSON");

  auto* curvature = app.add_subcommand("curvature", "projected Hessian and its spectrum at P*");
  add_common(curvature, curvature_opts, "model JSON");
  std::vector<double> plan;
  std::optional<int> curvature_n;
  curvature->add_option("--plan", plan, "m epsilon: sample size for m-symbol collapse within epsilon")->expected(2);
  curvature->add_option("--n", curvature_n, "report the Lanford window at this n")->check(CLI::Range(2, 1 << 30));

  auto* collapse_cmd = app.add_subcommand("collapse", "exact predictive collapse table");
  add_common(collapse_cmd, collapse_opts, "model JSON");
  collapse_opts.format = "csv";
  std::vector<int> ns, ms;
  std::optional<double> tau, cgeo, cgeo2;
  int collapse_threads = 0;
  collapse_cmd->add_option("--n", ns, "sample sizes")->required()->check(CLI::Range(2, 1 << 30));
  collapse_cmd->add_option("--m", ms, "predictive lengths")->required()->check(CLI::Range(0, 64));
  collapse_cmd->add_option("--tau", tau, "feasibility tolerance (default B/(2n))")->check(CLI::NonNegativeNumber);
  collapse_cmd->add_option("--cgeo", cgeo, "C_geo (default: fit at smallest n)")->check(CLI::NonNegativeNumber);
  collapse_cmd->add_option("--cgeo2", cgeo2, "C'_geo (default: fit at smallest n)")->check(CLI::NonNegativeNumber);
  collapse_cmd->add_option("--threads", collapse_threads, "worker threads (default COLLAPSE_LAB_THREADS)");

  auto* betel = app.add_subcommand("betel", "grid posterior from exponentially tilted laws");
  add_common(betel, betel_opts, "model JSON (Q and features)");
  betel_opts.format = "csv";
  std::string grid_path, betel_data, variant = "canonical";
  betel->add_option("--grid", grid_path, "grid JSON")->required()->check(CLI::ExistingFile);
  betel->add_option("--data", betel_data, "one symbol per line")->required()->check(CLI::ExistingFile);
  betel->add_option("--variant", variant, "likelihood form")->check(CLI::IsMember({"canonical", "as_printed"}));

  auto* gmm = app.add_subcommand("gmm", "optimal GMM weight and objective");
  add_common(gmm, gmm_opts, "model JSON");
  std::string gmm_data, tangent = "simplex";
  gmm->add_option("--data", gmm_data, "one symbol per line")->required()->check(CLI::ExistingFile);
  gmm->add_option("--tangent", tangent, "tangent space for the pushforward")->check(CLI::IsMember({"simplex", "constraint"}));

  auto* gee = app.add_subcommand("gee", "GEE curvature J, K and the sandwich");
  add_common(gee, gee_opts, "clusters JSON");
  std::optional<int> gee_n;
  gee->add_option("--n", gee_n, "sample size for the rate proxy")->check(CLI::Range(2, 1 << 30));

  auto* sweep = app.add_subcommand("sweep", "run an experiment config over (n, m)");
  add_common(sweep, sweep_opts, "experiment JSON");
  std::string outputs;
  int sweep_threads = 0;
  sweep->add_option("--outputs", outputs, "output directory (overrides the config)");
  sweep->add_option("--threads", sweep_threads, "worker threads (default COLLAPSE_LAB_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*project) return cmd_project(project_opts);
    if (*curvature) return cmd_curvature(curvature_opts, plan, curvature_n);
    if (*collapse_cmd) return cmd_collapse(collapse_opts, ns, ms, tau, cgeo, cgeo2, collapse_threads);
    if (*betel) return cmd_betel(betel_opts, grid_path, betel_data, variant);
    if (*gmm) return cmd_gmm(gmm_opts, gmm_data, tangent);
    if (*gee) return cmd_gee(gee_opts, gee_n);
    if (*sweep) return cmd_sweep(sweep_opts, outputs, sweep_threads);
  } catch (const collapse::Error& e) {
    std::cerr << "error: " << collapse::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
