#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "misoloc/harness.hpp"
#include "misoloc/json_io.hpp"
#include "misoloc/rng.hpp"

namespace {

using namespace misoloc;

GridSpec parse_grid(const std::string& text) {
  if (text == "fine") return GridSpec::fine();
  const auto x = text.find('x');
  if (x == std::string::npos)
    throw CLI::ValidationError("--grid expects <n_aod>x<n_range> or 'fine'");
  return GridSpec::coarse(std::stoi(text.substr(0, x)),
                          std::stoi(text.substr(x + 1)));
}

// var=start:step:stop, stop-inclusive within rounding slack
std::pair<SweepVariable, std::vector<double>> parse_sweep(
    const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw CLI::ValidationError("--sweep expects var=start:step:stop");
  const SweepVariable variable =
      sweep_variable_from_string(text.substr(0, eq));
  const std::string range = text.substr(eq + 1);
  const auto c1 = range.find(':');
  const auto c2 = range.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw CLI::ValidationError("--sweep expects var=start:step:stop");
  const double start = std::stod(range.substr(0, c1));
  const double step = std::stod(range.substr(c1 + 1, c2 - c1 - 1));
  const double stop = std::stod(range.substr(c2 + 1));
  if (!(step > 0.0) && start != stop)
    throw CLI::ValidationError("--sweep step must be positive");
  std::vector<double> values;
  for (double v = start; v <= stop + 1e-9 * std::max(1.0, std::abs(stop));
       v += step) {
    values.push_back(v);
    if (step == 0.0) break;
  }
  return {variable, values};
}

ScenarioConfig load_config(const std::string& path) {
  if (path.empty()) {
    ScenarioConfig cfg;
    cfg.validate();
    return cfg;
  }
  return config_from_json(load_json_file(path));
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Single-snapshot downlink localization and mapping for a MISO mmWave "
      "link: observation synthesis, Fisher-information bounds, joint ML "
      "estimation and Monte Carlo sweeps"};
  app.require_subcommand(1);

  std::string config_path, out_path, obs_path, est_path;
  std::string method_text = "joint", grid_text = "8x8", sweep_text;
  std::uint64_t seed = 1;
  int trials = 200;
  int threads = 0;
  bool csv = false;

  auto* simulate = app.add_subcommand(
      "simulate", "Synthesize one noisy observation set to JSON");
  simulate->add_option("--config", config_path, "scenario JSON");
  simulate->add_option("--seed", seed, "trial seed");
  simulate->add_option("--out", out_path, "output JSON path")->required();

  auto* crlb = app.add_subcommand(
      "crlb", "Compute PEB, mapping bounds and per-parameter CRLBs to CSV");
  crlb->add_option("--config", config_path, "scenario JSON");
  crlb->add_option("--sweep", sweep_text,
                   "emit bound curves over mu|snr_db|lmr_db "
                   "(var=start:step:stop)");
  crlb->add_option("--out", out_path, "output CSV path")->required();

  auto* estimate = app.add_subcommand(
      "estimate", "Run an estimator on a simulated observation set");
  estimate->add_option("--obs", obs_path, "observation JSON from 'simulate'")
      ->required();
  estimate->add_option("--method", method_text, "joint|sp-grid|sp-refine");
  estimate->add_option("--grid", grid_text, "<n_aod>x<n_range> or 'fine'");
  estimate->add_option("--out", out_path, "output JSON path")->required();

  auto* locmap = app.add_subcommand(
      "locmap", "Convert channel estimates to MS position and scatterer map");
  locmap->add_option("--est", est_path, "estimate JSON from 'estimate'")
      ->required();
  locmap->add_option("--out", out_path, "output path")->required();
  locmap->add_flag("--csv", csv, "write CSV instead of JSON");

  auto* sweep = app.add_subcommand(
      "sweep", "Monte Carlo RMSE sweep against the theoretical bounds");
  sweep->add_option("--config", config_path, "base scenario JSON");
  sweep->add_option("--sweep", sweep_text, "var=start:step:stop")->required();
  sweep->add_option("--trials", trials, "trials per sweep point");
  sweep->add_option("--seed", seed, "master seed");
  sweep->add_option("--method", method_text,
                    "comma-separated: joint,sp-grid,sp-refine,bounds-only");
  sweep->add_option("--grid", grid_text, "<n_aod>x<n_range> or 'fine'");
  sweep->add_option("--threads", threads, "worker threads (0 = all cores)");
  sweep->add_option("--out", out_path, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const ScenarioConfig cfg = load_config(config_path);
      std::mt19937_64 phase_rng(derive_seed(seed, 0));
      const ScenarioTruth truth = realize_scenario(cfg, phase_rng);
      const TxSignalSet tx = build_beamformer(cfg);
      const ObservationSet obs = synthesize(
          cfg, truth.paths, tx, truth.noise_variance, derive_seed(seed, 1));
      SimulationRecord record{cfg, obs.received, obs.noise_variance,
                              truth.paths};
      save_json_file(out_path, simulation_to_json(record));
      std::cout << "wrote " << out_path << " (sigma2 = "
                << obs.noise_variance << " W)\n";
    } else if (*crlb) {
      const ScenarioConfig cfg = load_config(config_path);
      auto out = open_output(out_path);
      if (sweep_text.empty()) {
        write_bounds_csv(cfg, compute_point_bounds(cfg), out);
      } else {
        const auto [variable, values] = parse_sweep(sweep_text);
        write_bounds_sweep_csv(cfg, variable, values, out);
      }
      std::cout << "wrote " << out_path << '\n';
    } else if (*estimate) {
      const SimulationRecord sim =
          simulation_from_json(load_json_file(obs_path));
      const TxSignalSet tx = build_beamformer(sim.scenario);
      const GridSpec grid = parse_grid(grid_text);
      const Method method = method_from_string(method_text);
      EstimateResult est;
      switch (method) {
        case Method::Joint:
          est = joint_ml(sim.received, tx, sim.scenario.n_nlos(), grid);
          break;
        case Method::SpGrid:
          est = sp_grid(sim.received, tx, sim.scenario.n_nlos(), grid);
          break;
        case Method::SpRefine:
          est = sp_refine(sim.received, tx, sim.scenario.n_nlos(), grid);
          break;
        default:
          throw std::invalid_argument("estimate: unsupported method");
      }
      save_json_file(out_path,
                     estimate_to_json({sim.scenario, method_text, est}));
      std::cout << "wrote " << out_path
                << " (cost = " << est.diagnostics.final_cost << ")\n";
    } else if (*locmap) {
      const EstimateRecord record =
          estimate_from_json(load_json_file(est_path));
      const LocalizationResult loc = localize_and_map(record.estimate.theta);
      if (csv) {
        auto out = open_output(out_path);
        out << "quantity,x_m,y_m,valid\n";
        const Vec2 p = to_world_frame(record.scenario, loc.ms_position);
        out << "p," << p.x() << ',' << p.y() << ",1\n";
        for (std::size_t k = 0; k < loc.scatterers.size(); ++k) {
          const auto& s = loc.scatterers[k];
          const Vec2 w = to_world_frame(record.scenario, s.position);
          out << 's' << (k + 1) << ',' << (s.valid ? std::to_string(w.x()) : "")
              << ',' << (s.valid ? std::to_string(w.y()) : "") << ','
              << (s.valid ? 1 : 0) << '\n';
        }
      } else {
        save_json_file(out_path, localization_to_json(record.scenario, loc));
      }
      std::cout << "wrote " << out_path << '\n';
    } else if (*sweep) {
      SweepSpec spec;
      spec.base = load_config(config_path);
      const auto [variable, values] = parse_sweep(sweep_text);
      spec.variable = variable;
      spec.values = values;
      spec.trials = trials;
      spec.master_seed = seed;
      spec.threads = threads;
      spec.grid = parse_grid(grid_text);
      spec.methods.clear();
      std::string token;
      std::stringstream ss(method_text);
      while (std::getline(ss, token, ','))
        spec.methods.push_back(method_from_string(token));
      const SweepResult result = run_sweep(spec);
      auto out = open_output(out_path);
      write_sweep_csv(result, out);
      std::cout << "wrote " << out_path << " (" << result.points.size()
                << " point rows)\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
