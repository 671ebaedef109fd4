#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bmiopt/catalog.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/immune.hpp"
#include "bmiopt/io.hpp"
#include "bmiopt/problem.hpp"

namespace bmiopt {

/// One resolved batch: which problem to build, how to search it, how many
/// seeded runs, where the files go.
struct RunConfig {
  std::string problem;     ///< catalog id; empty when `mode` alone decides
  std::string plant_path;  ///< plant or data JSON (problems that ingest data)
  std::string mode;        ///< feasibility | spectral_abscissa | h2 | hinf | mop_sparse | mop_mixed
  AlgoParams algo;         ///< per-run search parameters; rng_seed is the base seed
  int runs = 70;
  CatalogOptions catalog;
  std::string out_dir = ".";

  /// The identifier that picks the constructor: explicit problem id wins,
  /// otherwise the mode names a plant-based design.
  std::string effective_id() const { return problem.empty() ? mode : problem; }
};

/// Fills a RunConfig from its JSON object; absent keys keep the defaults
/// (40/160/20 population schedule, 70 runs, seed 1, +/-50 gain box, pole box
/// [-20, 0] x [-20, 20], scale set {1, 0.5, 0.1}).  t_max defaults to 300
/// instead of 20 for the vector-objective modes.
inline RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  if (j.contains("problem")) cfg.problem = j.at("problem").get<std::string>();
  if (j.contains("plant_path")) cfg.plant_path = j.at("plant_path").get<std::string>();
  if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
  if (j.contains("n_nom")) cfg.algo.n_nom = j.at("n_nom").get<int>();
  if (j.contains("n_max")) cfg.algo.n_max = j.at("n_max").get<int>();
  if (j.contains("t_max")) {
    cfg.algo.t_max = j.at("t_max").get<int>();
  } else {
    cfg.algo.t_max = cfg.effective_id().rfind("mop_", 0) == 0 ? 300 : 20;
  }
  if (j.contains("runs")) cfg.runs = j.at("runs").get<int>();
  if (j.contains("seed")) cfg.algo.rng_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("sigma_min")) cfg.catalog.sigma_min = j.at("sigma_min").get<double>();
  if (j.contains("omega_max")) cfg.catalog.omega_max = j.at("omega_max").get<double>();
  if (j.contains("gain_bound")) cfg.catalog.gain_bound = j.at("gain_bound").get<double>();
  if (j.contains("use_pole_box")) cfg.catalog.use_pole_box = j.at("use_pole_box").get<bool>();
  if (j.contains("kappa")) {
    cfg.catalog.subspace_scales.clear();
    for (const auto& k : j.at("kappa"))
      cfg.catalog.subspace_scales.push_back(k.get<double>());
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (cfg.runs < 1) throw StructuralError("config: runs must be at least 1");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  return config_from_json(load_json_file(path));
}

/// Builds the problem a config names, loading its data file when one is
/// required.  Unknown identifiers are an error.
inline BmiProblem resolve_problem(const RunConfig& cfg) {
  const std::string id = cfg.effective_id();
  const auto need_data = [&]() -> json {
    if (cfg.plant_path.empty())
      throw StructuralError("bench: problem '" + id + "' requires plant_path");
    return load_json_file(cfg.plant_path);
  };
  if (id == "lpvs") return make_lpvs(cfg.catalog);
  if (id == "stability_test")
    return make_stability_test(stability_test_data_from_json(need_data()), cfg.catalog);
  if (id == "perturbed_stabilization")
    return make_perturbed_stabilization(perturbed_stabilization_data_from_json(need_data()),
                                        cfg.catalog);
  if (id == "simultaneous_stabilization")
    return make_simultaneous_stabilization(
        simultaneous_stabilization_data_from_json(need_data()), cfg.catalog);
  if (id == "observer_design")
    return make_observer_design(observer_design_data_from_json(need_data()), cfg.catalog);
  if (id == "spectral_abscissa")
    return make_spectral_abscissa(plant_from_json(need_data()), cfg.catalog);
  if (id == "h2") return make_h2_design(plant_from_json(need_data()), cfg.catalog);
  if (id == "hinf") return make_hinf_design(plant_from_json(need_data()), cfg.catalog);
  if (id == "mop_sparse")
    return make_sparse_gain_mop(plant_from_json(need_data()), cfg.catalog);
  if (id == "mop_mixed") {
    const json j = need_data();
    const PlantModel p = plant_from_json(j);
    const Eigen::MatrixXd Cz1 =
        j.contains("Cz1") ? matrix_from_json(j.at("Cz1"), "Cz1") : p.C1;
    const Eigen::MatrixXd Cz2 =
        j.contains("Cz2") ? matrix_from_json(j.at("Cz2"), "Cz2") : p.C1;
    return make_mixed_norm_mop(p, Cz1, Cz2, cfg.catalog);
  }
  throw StructuralError("bench: unknown problem id '" + id + "'");
}

/// Millisecond timestamp source.  Injectable so that tests can pin the
/// wall-clock column and make equal-seed batches byte-identical.
using Clock = std::function<double()>;

inline Clock steady_clock_ms() {
  return [] {
    const auto now = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double, std::milli>(now).count();
  };
}

/// One line of results.csv.
struct ResultRow {
  int run = 0;
  std::uint64_t seed = 0;
  bool has_best = false;
  Eigen::VectorXd best_f;    ///< componentwise best over the feasible archive
  Eigen::VectorXd mean_f;    ///< componentwise mean over the feasible archive
  double lambda_star = 0.0;  ///< certificate level of the best point
  int archive_size = 0;
  double wall_ms = 0.0;
  std::string status;  ///< solved | no_feasible_point | error
};

struct ExperimentResult {
  std::string problem_name;
  int arity = 0;
  std::vector<ResultRow> rows;
  std::vector<ArchiveEntry> apf;  ///< union of final archives (vector modes)
  int exit_code = 1;              ///< 0 solved, 2 nothing feasible, 1 all-errors
  std::vector<std::string> files;
};

namespace detail {

inline std::vector<std::string> empty_fields(std::size_t n) {
  return std::vector<std::string>(n, std::string());
}

}  // namespace detail

/// Executes `runs` independent searches with seeds base, base+1, ... and
/// writes results.csv (per-run rows plus one summary row carrying
/// Min/Mean/Std/SR% over the solved runs), solutions.csv (every kept point:
/// outer vector, objectives, certificate level), progress.csv (per-generation
/// telemetry), and, for vector objectives, apf.csv with the union front.
/// Per-run failures become status=error rows; the batch continues.
inline ExperimentResult run_experiment(const RunConfig& cfg, const Clock& clock_in = {}) {
  const BmiProblem problem = resolve_problem(cfg);
  const Clock clock = clock_in ? clock_in : steady_clock_ms();
  const int N = problem.objective_arity;

  std::filesystem::create_directories(cfg.out_dir);
  const auto out_path = [&](const std::string& leaf) {
    return (std::filesystem::path(cfg.out_dir) / leaf).string();
  };

  ExperimentResult result;
  result.problem_name = problem.name;
  result.arity = N;

  std::vector<std::vector<std::string>> progress_rows;
  std::vector<std::vector<std::string>> solution_rows;

  for (int k = 0; k < cfg.runs; ++k) {
    AlgoParams params = cfg.algo;
    params.rng_seed = cfg.algo.rng_seed + static_cast<std::uint64_t>(k);

    ResultRow row;
    row.run = k;
    row.seed = params.rng_seed;

    const auto sink = [&](const GenerationRecord& rec) {
      std::vector<std::string> pr{std::to_string(k), std::to_string(rec.t_c),
                                  std::to_string(rec.archive_size),
                                  std::to_string(rec.feasible_count)};
      for (int c = 0; c < N + 1; ++c)
        pr.push_back(rec.best_f.size() ? csv_real(rec.best_f[c]) : std::string());
      progress_rows.push_back(std::move(pr));
    };

    const double t0 = clock();
    try {
      const Archive archive = run_search(problem, params, sink);
      row.wall_ms = clock() - t0;
      row.archive_size = static_cast<int>(archive.entries.size());
      if (archive.entries.empty()) {
        row.status = "no_feasible_point";
      } else {
        row.status = "solved";
        row.has_best = true;
        row.best_f = archive.entries.front().f_tilde.head(N);
        row.mean_f = Eigen::VectorXd::Zero(N);
        row.lambda_star = archive.entries.front().lambda_star;
        double best_key = N > 0 ? archive.entries.front().f_tilde[0]
                                : archive.entries.front().lambda_star;
        for (const auto& e : archive.entries) {
          for (int c = 0; c < N; ++c) row.best_f[c] = std::min(row.best_f[c], e.f_tilde[c]);
          if (N > 0) row.mean_f += e.f_tilde.head(N);
          const double key = N > 0 ? e.f_tilde[0] : e.lambda_star;
          if (key < best_key) {
            best_key = key;
            row.lambda_star = e.lambda_star;
          }
        }
        if (N > 0) row.mean_f /= static_cast<double>(archive.entries.size());

        for (std::size_t i = 0; i < archive.entries.size(); ++i) {
          const auto& e = archive.entries[i];
          std::vector<std::string> sr{std::to_string(k), std::to_string(row.seed),
                                      std::to_string(i)};
          for (Eigen::Index c = 0; c < e.alpha.size(); ++c) sr.push_back(csv_real(e.alpha[c]));
          for (int c = 0; c < N; ++c) sr.push_back(csv_real(e.f_tilde[c]));
          sr.push_back(csv_real(e.lambda_star));
          solution_rows.push_back(std::move(sr));
          if (N >= 2) result.apf.push_back(e);
        }
      }
    } catch (const std::exception&) {
      row.wall_ms = clock() - t0;
      row.status = "error";
    }
    result.rows.push_back(std::move(row));
  }

  // --- results.csv ------------------------------------------------------
  std::vector<std::string> header{"problem", "run", "seed"};
  for (int c = 0; c < N; ++c) header.push_back("best_f" + std::to_string(c + 1));
  for (int c = 0; c < N; ++c) header.push_back("mean_f" + std::to_string(c + 1));
  header.insert(header.end(), {"lambda_star", "archive_size", "wall_ms", "status", "min",
                               "mean", "std", "sr_percent"});

  std::vector<std::vector<std::string>> rows;
  int solved = 0;
  std::vector<double> best_values;
  for (const auto& row : result.rows) {
    std::vector<std::string> r{result.problem_name, std::to_string(row.run),
                               std::to_string(row.seed)};
    for (int c = 0; c < N; ++c)
      r.push_back(row.has_best ? csv_real(row.best_f[c]) : std::string());
    for (int c = 0; c < N; ++c)
      r.push_back(row.has_best ? csv_real(row.mean_f[c]) : std::string());
    r.push_back(row.status == "solved" ? csv_real(row.lambda_star) : std::string());
    r.push_back(std::to_string(row.archive_size));
    r.push_back(csv_real(row.wall_ms));
    r.push_back(row.status);
    auto tail = detail::empty_fields(4);
    r.insert(r.end(), tail.begin(), tail.end());
    rows.push_back(std::move(r));
    if (row.status == "solved") {
      ++solved;
      if (N > 0) best_values.push_back(row.best_f[0]);
    }
  }

  std::vector<std::string> summary{result.problem_name, "summary", ""};
  auto mid = detail::empty_fields(static_cast<std::size_t>(2 * N) + 4);
  summary.insert(summary.end(), mid.begin(), mid.end());
  if (!best_values.empty()) {
    double mn = best_values[0], mean = 0.0;
    for (double v : best_values) {
      mn = std::min(mn, v);
      mean += v;
    }
    mean /= static_cast<double>(best_values.size());
    double var = 0.0;
    for (double v : best_values) var += (v - mean) * (v - mean);
    const double sd = best_values.size() > 1
                          ? std::sqrt(var / static_cast<double>(best_values.size() - 1))
                          : 0.0;
    summary.push_back(csv_real(mn));
    summary.push_back(csv_real(mean));
    summary.push_back(csv_real(sd));
  } else {
    auto tail = detail::empty_fields(3);
    summary.insert(summary.end(), tail.begin(), tail.end());
  }
  summary.push_back(csv_real(100.0 * solved / cfg.runs));
  rows.push_back(std::move(summary));
  write_csv(out_path("results.csv"), header, rows);
  result.files.push_back(out_path("results.csv"));

  // --- solutions.csv ----------------------------------------------------
  {
    std::vector<std::string> h{"run", "seed", "point"};
    for (int c = 0; c < problem.layout.dimension(); ++c)
      h.push_back("alpha_" + std::to_string(c));
    for (int c = 0; c < N; ++c) h.push_back("f" + std::to_string(c + 1));
    h.push_back("lambda_star");
    write_csv(out_path("solutions.csv"), h, solution_rows);
    result.files.push_back(out_path("solutions.csv"));
  }

  // --- progress.csv -----------------------------------------------------
  {
    std::vector<std::string> h{"run", "generation", "archive_size", "feasible_count"};
    for (int c = 0; c < N + 1; ++c) h.push_back("best_" + std::to_string(c + 1));
    write_csv(out_path("progress.csv"), h, progress_rows);
    result.files.push_back(out_path("progress.csv"));
  }

  // --- apf.csv ----------------------------------------------------------
  if (N >= 2) {
    std::vector<std::string> h;
    for (int c = 0; c < N; ++c) h.push_back("f" + std::to_string(c + 1));
    h.push_back("lambda_star");
    std::vector<std::vector<std::string>> ar;
    for (const auto& e : result.apf) {
      std::vector<std::string> r;
      for (int c = 0; c < N; ++c) r.push_back(csv_real(e.f_tilde[c]));
      r.push_back(csv_real(e.lambda_star));
      ar.push_back(std::move(r));
    }
    write_csv(out_path("apf.csv"), h, ar);
    result.files.push_back(out_path("apf.csv"));
  }

  bool any_no_feasible = false;
  for (const auto& row : result.rows) any_no_feasible |= row.status == "no_feasible_point";
  result.exit_code = solved > 0 ? 0 : (any_no_feasible ? 2 : 1);
  return result;
}

namespace detail {

inline std::string svg_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

/// Renders a two-objective front CSV (columns f1, f2, lambda_star) as a
/// deterministic 800x600 scatter plot: points sorted by the first objective,
/// labeled axes, fixed margins.  An empty front yields the axes plus a
/// "no feasible points" annotation.
inline void emit_plot(const std::string& apf_csv, const std::string& out_svg) {
  const auto rows = read_csv(apf_csv);
  if (rows.empty()) throw StructuralError("plot: empty file '" + apf_csv + "'");
  const auto& header = rows[0];
  if (header.size() != 3)
    throw StructuralError(
        "plot: expected exactly 2 objective columns plus lambda_star; "
        "inspect the raw CSV for other shapes");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 2 || rows[i][0].empty()) continue;
    pts.emplace_back(std::stod(rows[i][0]), std::stod(rows[i][1]));
  }
  std::sort(pts.begin(), pts.end());

  const double W = 800, H = 600, ml = 80, mr = 25, mt = 25, mb = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (const auto& p : pts) {
      x0 = std::min(x0, p.first);
      x1 = std::max(x1, p.first);
      y0 = std::min(y0, p.second);
      y1 = std::max(y1, p.second);
    }
  }
  const auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double eps = span > 0 ? 0.05 * span : std::max(0.5, 0.1 * std::abs(lo));
    lo -= eps;
    hi += eps;
  };
  pad(x0, x1);
  pad(y0, y1);
  const auto sx = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  const auto sy = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" + detail::svg_num(H - mb) +
         "\" x2=\"" + detail::svg_num(W - mr) + "\" y2=\"" + detail::svg_num(H - mb) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" + detail::svg_num(mt) +
         "\" x2=\"" + detail::svg_num(ml) + "\" y2=\"" + detail::svg_num(H - mb) +
         "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fy = y0 + (y1 - y0) * t / 4.0;
    svg += "<line x1=\"" + detail::svg_num(sx(fx)) + "\" y1=\"" + detail::svg_num(H - mb) +
           "\" x2=\"" + detail::svg_num(sx(fx)) + "\" y2=\"" + detail::svg_num(H - mb + 6) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::svg_num(sx(fx)) + "\" y=\"" + detail::svg_num(H - mb + 22) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + detail::svg_num(fx) + "</text>\n";
    svg += "<line x1=\"" + detail::svg_num(ml - 6) + "\" y1=\"" + detail::svg_num(sy(fy)) +
           "\" x2=\"" + detail::svg_num(ml) + "\" y2=\"" + detail::svg_num(sy(fy)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::svg_num(ml - 10) + "\" y=\"" + detail::svg_num(sy(fy) + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + detail::svg_num(fy) + "</text>\n";
  }
  svg += "<text x=\"" + detail::svg_num(ml + (W - ml - mr) / 2) + "\" y=\"" +
         detail::svg_num(H - 15) + "\" font-size=\"14\" text-anchor=\"middle\">" + header[0] +
         "</text>\n";
  svg += "<text x=\"20\" y=\"" + detail::svg_num(mt + (H - mt - mb) / 2) +
         "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         detail::svg_num(mt + (H - mt - mb) / 2) + ")\">" + header[1] + "</text>\n";
  if (pts.empty()) {
    svg += "<text x=\"400\" y=\"300\" font-size=\"16\" text-anchor=\"middle\">"
           "no feasible points</text>\n";
  } else {
    for (const auto& p : pts) {
      svg += "<circle cx=\"" + detail::svg_num(sx(p.first)) + "\" cy=\"" +
             detail::svg_num(sy(p.second)) + "\" r=\"4\" fill=\"#1f6fb4\"/>\n";
    }
  }
  svg += "</svg>\n";

  std::ofstream out(out_svg, std::ios::binary);
  if (!out) throw StructuralError("plot: cannot write '" + out_svg + "'");
  out << svg;
}

}  // namespace bmiopt
