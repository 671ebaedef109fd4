// Command-line front end: seeded batch solves, one-shot inner solves,
// pole-placement gain recovery, closed-loop norm evaluation, front plotting.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <limits>
#include <string>

#include <bmiopt/bmiopt.hpp>

namespace {

int cmd_solve(const std::string& config_path, const std::string& out_override,
              long long seed, int runs, int t_max, int n_nom, int n_max) {
  bmiopt::RunConfig cfg = bmiopt::load_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed >= 0) cfg.algo.rng_seed = static_cast<std::uint64_t>(seed);
  if (runs > 0) cfg.runs = runs;
  if (t_max > 0) cfg.algo.t_max = t_max;
  if (n_nom > 0) cfg.algo.n_nom = n_nom;
  if (n_max > 0) cfg.algo.n_max = n_max;

  const bmiopt::ExperimentResult result = bmiopt::run_experiment(cfg);
  int solved = 0;
  for (const auto& row : result.rows) solved += row.status == "solved" ? 1 : 0;
  std::cout << result.problem_name << ": " << solved << "/" << result.rows.size()
            << " runs solved\n";
  for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
  return result.exit_code;
}

int cmd_evp(const std::string& input, const std::string& out) {
  const bmiopt::AffineMatrixFunction amf =
      bmiopt::amf_from_json(bmiopt::load_json_file(input));
  const bmiopt::EvpResult res = bmiopt::solve_evp(amf);
  const char* status = "max_iterations";
  switch (res.status) {
    case bmiopt::EvpResult::Status::kConverged: status = "converged"; break;
    case bmiopt::EvpResult::Status::kEarlyExitFeasible: status = "feasible_early_exit"; break;
    case bmiopt::EvpResult::Status::kUnboundedBelow: status = "unbounded_below"; break;
    case bmiopt::EvpResult::Status::kMaxIterations: status = "max_iterations"; break;
  }
  std::cout << "lambda_star=" << bmiopt::csv_real(res.lambda_star) << " status=" << status
            << " iterations=" << res.iterations << "\n";
  if (!out.empty()) {
    bmiopt::json j;
    j["lambda_star"] = res.lambda_star;
    j["status"] = status;
    j["iterations"] = res.iterations;
    j["x"] = bmiopt::json::array();
    for (Eigen::Index i = 0; i < res.x_star.size(); ++i) j["x"].push_back(res.x_star[i]);
    bmiopt::save_json_file(out, j);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_place(const std::string& input, const std::string& out) {
  const bmiopt::PolePlacementTask task =
      bmiopt::pole_task_from_json(bmiopt::load_json_file(input));
  const bmiopt::PolePlacementResult res = bmiopt::levenberg_marquardt(task);
  const Eigen::MatrixXd F = task.gain_from(res.q);
  std::cout << "residual=" << bmiopt::csv_real(res.residual)
            << " iterations=" << res.iterations << "\n";
  for (Eigen::Index r = 0; r < F.rows(); ++r) {
    std::cout << "F[" << r << "] =";
    for (Eigen::Index c = 0; c < F.cols(); ++c)
      std::cout << " " << bmiopt::csv_real(F(r, c));
    std::cout << "\n";
  }
  if (!out.empty()) {
    bmiopt::json j;
    j["F"] = bmiopt::matrix_to_json(F);
    j["residual"] = res.residual;
    j["iterations"] = res.iterations;
    bmiopt::save_json_file(out, j);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_norms(const std::string& plant_path, const std::string& gain_path,
              const std::string& out) {
  const bmiopt::PlantModel plant = bmiopt::load_plant(plant_path);
  const Eigen::MatrixXd F = bmiopt::gain_from_json(bmiopt::load_json_file(gain_path));
  const bmiopt::ClosedLoop cl = bmiopt::closed_loop(plant, F);
  const double ao = bmiopt::spectral_abscissa(cl.A);

  bool h2_defined = true;
  double h2 = std::numeric_limits<double>::infinity();
  try {
    h2 = bmiopt::h2_norm(cl);
  } catch (const bmiopt::DomainError&) {
    h2_defined = false;  // nonzero feedthrough on the disturbance channel
  }
  const double hinf = bmiopt::hinf_norm(cl);

  std::cout << "alpha_o=" << bmiopt::csv_real(ao) << "\n";
  if (h2_defined)
    std::cout << "h2=" << bmiopt::csv_real(h2) << "\n";
  else
    std::cout << "h2=undefined (nonzero D11)\n";
  std::cout << "hinf=" << bmiopt::csv_real(hinf) << "\n";
  if (!out.empty()) {
    bmiopt::json j;
    j["alpha_o"] = ao;
    if (h2_defined && std::isfinite(h2)) j["h2"] = h2;
    if (std::isfinite(hinf)) j["hinf"] = hinf;
    bmiopt::save_json_file(out, j);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver toolkit for constrained control-design problems"};
  app.require_subcommand(1);

  std::string config_path, out_path, input_path, plant_path, gain_path;
  long long seed = -1;
  int runs = -1, t_max = -1, n_nom = -1, n_max = -1;

  auto* solve = app.add_subcommand("solve", "Run a seeded batch from a config file");
  solve->add_option("--config", config_path, "config JSON")->required();
  solve->add_option("--out", out_path, "output directory override");
  solve->add_option("--seed", seed, "base seed override");
  solve->add_option("--runs", runs, "run count override");
  solve->add_option("--t-max", t_max, "generation budget override");
  solve->add_option("--n-nom", n_nom, "nominal archive size override");
  solve->add_option("--n-max", n_max, "offspring budget override");

  auto* evp = app.add_subcommand("evp", "Minimal constraint level of one affine slice");
  evp->add_option("--input", input_path, "serialized affine map JSON")->required();
  evp->add_option("--out", out_path, "result JSON path");

  auto* place = app.add_subcommand("place", "Recover a gain from pole targets");
  place->add_option("--input", input_path, "pole task JSON")->required();
  place->add_option("--out", out_path, "gain JSON path");

  auto* norms = app.add_subcommand("norms", "Closed-loop margin and norms for a gain");
  norms->add_option("--plant", plant_path, "plant JSON")->required();
  norms->add_option("--gain", gain_path, "gain JSON")->required();
  norms->add_option("--out", out_path, "result JSON path");

  auto* plot = app.add_subcommand("plot", "Scatter plot of a two-objective front CSV");
  plot->add_option("--input", input_path, "front CSV")->required();
  plot->add_option("--out", out_path, "SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(config_path, out_path, seed, runs, t_max, n_nom, n_max);
    if (evp->parsed()) return cmd_evp(input_path, out_path);
    if (place->parsed()) return cmd_place(input_path, out_path);
    if (norms->parsed()) return cmd_norms(plant_path, gain_path, out_path);
    if (plot->parsed()) {
      bmiopt::emit_plot(input_path, out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
