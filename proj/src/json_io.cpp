#include "misoloc/json_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace misoloc {

using nlohmann::json;

namespace {

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("expected a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

json cmat_real(const CMatX& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

json cmat_imag(const CMatX& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c).imag());
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatX cmat_from_json(const json& re, const json& im) {
  const Eigen::Index rows = static_cast<Eigen::Index>(re.size());
  if (rows == 0) return CMatX();
  const Eigen::Index cols = static_cast<Eigen::Index>(re[0].size());
  CMatX m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
  return m;
}

void write_csv_value(std::ostream& os, double v) {
  if (std::isnan(v)) return;  // empty field
  os << v;
}

}  // namespace

json config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["bs_position_m"] = vec2_to_json(cfg.bs_position);
  j["ms_position_m"] = vec2_to_json(cfg.ms_position);
  json scat = json::array();
  for (const auto& s : cfg.scatterers) scat.push_back(vec2_to_json(s));
  j["scatterers_m"] = std::move(scat);
  j["n_bs"] = cfg.n_bs;
  j["n_subcarriers"] = cfg.n_subcarriers;
  j["n_transmissions"] = cfg.n_transmissions;
  j["n_beams"] = cfg.n_beams;
  j["bandwidth_hz"] = cfg.bandwidth_hz;
  j["carrier_hz"] = cfg.carrier_hz;
  j["tx_power_w"] = cfg.tx_power_w;
  j["snr_db"] = cfg.snr_db;
  j["lmr_db_per_path"] = cfg.lmr_db_per_path;
  j["atten_db_per_km"] = cfg.atten_db_per_km;
  j["reflector_density_per_m"] = cfg.reflector_density;
  if (cfg.los_phase_rad) j["los_phase_deg"] = rad2deg(*cfg.los_phase_rad);
  if (cfg.nlos_phase_rad) {
    json ph = json::array();
    for (double v : *cfg.nlos_phase_rad) ph.push_back(rad2deg(v));
    j["nlos_phase_deg"] = std::move(ph);
  }
  j["array_broadside_deg"] = rad2deg(cfg.array_broadside_rad);
  j["beam_sector_deg"] = json::array(
      {rad2deg(cfg.beam_sector_lo_rad), rad2deg(cfg.beam_sector_hi_rad)});
  j["beam_layout"] =
      cfg.beam_layout == BeamLayout::UniformAngle ? "uniform-angle" : "dft";
  j["pilot"] = cfg.pilot == PilotKind::Ones ? "ones" : "qpsk";
  j["cp_length_symbols"] = cfg.cp_length_symbols;
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig cfg;
  cfg.bs_position = vec2_from_json(j.at("bs_position_m"));
  cfg.ms_position = vec2_from_json(j.at("ms_position_m"));
  cfg.scatterers.clear();
  for (const auto& s : j.at("scatterers_m"))
    cfg.scatterers.push_back(vec2_from_json(s));
  cfg.n_bs = j.at("n_bs").get<int>();
  cfg.n_subcarriers = j.at("n_subcarriers").get<int>();
  cfg.n_transmissions = j.value("n_transmissions", 1);
  cfg.n_beams = j.contains("n_beams") ? j["n_beams"].get<int>()
                                      : std::max(1, cfg.n_bs / 2);
  cfg.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  cfg.carrier_hz = j.at("carrier_hz").get<double>();
  cfg.tx_power_w = j.value("tx_power_w", 1.0e-3);
  cfg.snr_db = j.value("snr_db", 10.0);
  cfg.lmr_db_per_path = j.at("lmr_db_per_path").get<std::vector<double>>();
  cfg.atten_db_per_km = j.value("atten_db_per_km", 16.0);
  cfg.reflector_density = j.value("reflector_density_per_m", 1.0 / 7.0);
  if (j.contains("los_phase_deg") && !j["los_phase_deg"].is_null())
    cfg.los_phase_rad = deg2rad(j["los_phase_deg"].get<double>());
  if (j.contains("nlos_phase_deg") && !j["nlos_phase_deg"].is_null()) {
    std::vector<double> ph;
    for (const auto& v : j["nlos_phase_deg"])
      ph.push_back(deg2rad(v.get<double>()));
    cfg.nlos_phase_rad = std::move(ph);
  }
  cfg.array_broadside_rad = deg2rad(j.value("array_broadside_deg", 0.0));
  if (j.contains("beam_sector_deg")) {
    cfg.beam_sector_lo_rad = deg2rad(j["beam_sector_deg"][0].get<double>());
    cfg.beam_sector_hi_rad = deg2rad(j["beam_sector_deg"][1].get<double>());
  }
  const std::string layout = j.value("beam_layout", "uniform-angle");
  if (layout == "uniform-angle") {
    cfg.beam_layout = BeamLayout::UniformAngle;
  } else if (layout == "dft") {
    cfg.beam_layout = BeamLayout::DftGrid;
  } else {
    throw std::invalid_argument("unknown beam_layout: " + layout);
  }
  const std::string pilot = j.value("pilot", "qpsk");
  if (pilot == "ones") {
    cfg.pilot = PilotKind::Ones;
  } else if (pilot == "qpsk") {
    cfg.pilot = PilotKind::Qpsk;
  } else {
    throw std::invalid_argument("unknown pilot: " + pilot);
  }
  cfg.cp_length_symbols = j.value("cp_length_symbols", 0);
  cfg.rng_seed = j.value("rng_seed", std::uint64_t{1});
  cfg.validate();
  return cfg;
}

json simulation_to_json(const SimulationRecord& record) {
  json j;
  j["scenario"] = config_to_json(record.scenario);
  j["noise_variance_w"] = record.noise_variance;
  j["y_real"] = cmat_real(record.received);
  j["y_imag"] = cmat_imag(record.received);
  json truth;
  json aod = json::array(), delay = json::array(), amp = json::array(),
       phase = json::array();
  for (const auto& p : record.truth_paths) {
    aod.push_back(rad2deg(p.aod_rad));
    delay.push_back(p.delay_s);
    amp.push_back(p.amplitude);
    phase.push_back(rad2deg(p.phase_rad));
  }
  truth["aod_deg"] = std::move(aod);
  truth["delay_s"] = std::move(delay);
  truth["amplitude"] = std::move(amp);
  truth["phase_deg"] = std::move(phase);
  j["truth"] = std::move(truth);
  return j;
}

SimulationRecord simulation_from_json(const json& j) {
  SimulationRecord record;
  record.scenario = config_from_json(j.at("scenario"));
  record.noise_variance = j.at("noise_variance_w").get<double>();
  record.received = cmat_from_json(j.at("y_real"), j.at("y_imag"));
  if (j.contains("truth")) {
    const auto& truth = j["truth"];
    const auto n = truth.at("aod_deg").size();
    record.truth_paths.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      record.truth_paths[k].aod_rad = deg2rad(truth["aod_deg"][k].get<double>());
      record.truth_paths[k].delay_s = truth["delay_s"][k].get<double>();
      record.truth_paths[k].amplitude = truth["amplitude"][k].get<double>();
      record.truth_paths[k].phase_rad =
          deg2rad(truth["phase_deg"][k].get<double>());
    }
  }
  return record;
}

json estimate_to_json(const EstimateRecord& record) {
  json j;
  j["scenario"] = config_to_json(record.scenario);
  j["method"] = record.method;
  const auto& est = record.estimate;
  json aod = json::array(), delay = json::array(), are = json::array(),
       aim = json::array();
  for (int k = 0; k < est.theta.n_paths(); ++k) {
    aod.push_back(rad2deg(est.theta.aod(k)));
    delay.push_back(est.theta.delay(k));
    are.push_back(est.alpha(k).real());
    aim.push_back(est.alpha(k).imag());
  }
  j["aod_deg"] = std::move(aod);
  j["delay_s"] = std::move(delay);
  j["alpha_real"] = std::move(are);
  j["alpha_imag"] = std::move(aim);
  j["noise_variance_hat_w"] = est.noise_variance_hat;
  json diag;
  diag["final_cost"] = est.diagnostics.final_cost;
  diag["iterations"] = est.diagnostics.iterations;
  diag["converged"] = est.diagnostics.converged;
  diag["regularized"] = est.diagnostics.regularized;
  diag["basin_exhausted"] = est.diagnostics.basin_exhausted;
  json iaod = json::array(), idelay = json::array();
  for (int k = 0; k < est.diagnostics.initial.n_paths(); ++k) {
    iaod.push_back(rad2deg(est.diagnostics.initial.aod(k)));
    idelay.push_back(est.diagnostics.initial.delay(k));
  }
  diag["init_aod_deg"] = std::move(iaod);
  diag["init_delay_s"] = std::move(idelay);
  j["diagnostics"] = std::move(diag);
  return j;
}

EstimateRecord estimate_from_json(const json& j) {
  EstimateRecord record;
  record.scenario = config_from_json(j.at("scenario"));
  record.method = j.value("method", "joint");
  const auto& aod = j.at("aod_deg");
  const auto& delay = j.at("delay_s");
  const int n_paths = static_cast<int>(aod.size());
  VecX values(2 * n_paths);
  for (int k = 0; k < n_paths; ++k) {
    values(2 * k) = deg2rad(aod[k].get<double>());
    values(2 * k + 1) = delay[k].get<double>();
  }
  record.estimate.theta = ThetaVector(std::move(values));
  record.estimate.alpha.resize(n_paths);
  for (int k = 0; k < n_paths; ++k)
    record.estimate.alpha(k) = Complex(j.at("alpha_real")[k].get<double>(),
                                       j.at("alpha_imag")[k].get<double>());
  record.estimate.noise_variance_hat =
      j.value("noise_variance_hat_w", 0.0);
  return record;
}

json localization_to_json(const ScenarioConfig& cfg,
                          const LocalizationResult& loc) {
  json j;
  j["ms_position_m"] = vec2_to_json(to_world_frame(cfg, loc.ms_position));
  j["los_index"] = loc.los_index;
  j["los_tie"] = loc.los_tie;
  json scatterers = json::array();
  for (const auto& s : loc.scatterers) {
    json entry;
    entry["valid"] = s.valid;
    if (s.valid)
      entry["position_m"] = vec2_to_json(to_world_frame(cfg, s.position));
    scatterers.push_back(std::move(entry));
  }
  j["scatterers"] = std::move(scatterers);
  return j;
}

void write_sweep_csv(const SweepResult& result, std::ostream& os) {
  os << "value,method,quantity,rmse,bound,trials_ok,trials_failed,"
        "q10,q50,q90\n";
  for (const auto& point : result.points) {
    for (const auto& q : point.quantities) {
      os << point.value << ',' << to_string(point.method) << ','
         << q.quantity << ',';
      write_csv_value(os, q.rmse);
      os << ',';
      write_csv_value(os, q.bound);
      os << ',' << q.trials_ok << ',' << q.trials_failed << ',';
      write_csv_value(os, q.q10);
      os << ',';
      write_csv_value(os, q.q50);
      os << ',';
      write_csv_value(os, q.q90);
      os << '\n';
    }
  }
}

void write_bounds_csv(const ScenarioConfig& cfg, const PointBounds& bounds,
                      std::ostream& os) {
  os << "quantity,value\n";
  os << "peb_m," << bounds.peb_m << '\n';
  for (Eigen::Index k = 0; k < bounds.scatterer_bound_m.size(); ++k)
    os << "seb_" << (k + 1) << "_m," << bounds.scatterer_bound_m(k) << '\n';
  const int n_paths = cfg.n_nlos() + 1;
  for (int k = 0; k < n_paths; ++k) {
    os << "sqrt_crlb_amp_" << k << ',' << bounds.channel_crlb_sqrt(4 * k)
       << '\n';
    os << "sqrt_crlb_phase_" << k << "_rad,"
       << bounds.channel_crlb_sqrt(4 * k + 1) << '\n';
    os << "sqrt_crlb_d_" << k << "_m,"
       << kSpeedOfLight * bounds.channel_crlb_sqrt(4 * k + 2) << '\n';
    os << "sqrt_crlb_aod_" << k << "_rad,"
       << bounds.channel_crlb_sqrt(4 * k + 3) << '\n';
  }
}

void write_bounds_sweep_csv(const ScenarioConfig& base, SweepVariable variable,
                            const std::vector<double>& values,
                            std::ostream& os) {
  os << "value,k_paths,quantity,bound\n";
  for (double value : values) {
    // mu sweeps emit one curve per NLOS count, Fig.-2 style; other sweeps
    // keep the base path count.
    const int k_lo = variable == SweepVariable::Mu ? 0 : base.n_nlos();
    for (int k = k_lo; k <= base.n_nlos(); ++k) {
      ScenarioConfig cfg = base;
      if (variable == SweepVariable::Mu) {
        cfg = apply_sweep_value(base, SweepVariable::NPaths, k);
        if (k > 0) cfg = apply_sweep_value(cfg, SweepVariable::Mu, value);
      } else {
        cfg = apply_sweep_value(base, variable, value);
      }
      const PointBounds bounds = compute_point_bounds(cfg);
      os << value << ',' << k << ",peb_m," << bounds.peb_m << '\n';
      for (Eigen::Index s = 0; s < bounds.scatterer_bound_m.size(); ++s)
        os << value << ',' << k << ",seb_" << (s + 1) << "_m,"
           << bounds.scatterer_bound_m(s) << '\n';
    }
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace misoloc
