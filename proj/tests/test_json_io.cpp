#include <doctest.h>

#include <sstream>

#include "misoloc/json_io.hpp"

using namespace misoloc;

TEST_CASE("scenario config JSON round trip") {
  ScenarioConfig cfg;
  cfg.snr_db = -2.5;
  cfg.los_phase_rad = 0.75;
  cfg.nlos_phase_rad = std::vector<double>{1.25};
  cfg.array_broadside_rad = deg2rad(10.0);
  cfg.pilot = PilotKind::Qpsk;
  cfg.beam_layout = BeamLayout::DftGrid;
  cfg.rng_seed = 777;

  const ScenarioConfig back = config_from_json(config_to_json(cfg));
  CHECK((back.bs_position - cfg.bs_position).norm() == 0.0);
  CHECK((back.ms_position - cfg.ms_position).norm() == 0.0);
  CHECK(back.scatterers.size() == cfg.scatterers.size());
  CHECK(back.n_bs == cfg.n_bs);
  CHECK(back.n_beams == cfg.n_beams);
  CHECK(back.snr_db == cfg.snr_db);
  CHECK(*back.los_phase_rad == doctest::Approx(*cfg.los_phase_rad).epsilon(1e-15));
  CHECK((*back.nlos_phase_rad)[0] ==
        doctest::Approx((*cfg.nlos_phase_rad)[0]).epsilon(1e-15));
  CHECK(back.array_broadside_rad ==
        doctest::Approx(cfg.array_broadside_rad).epsilon(1e-15));
  CHECK(back.pilot == PilotKind::Qpsk);
  CHECK(back.beam_layout == BeamLayout::DftGrid);
  CHECK(back.rng_seed == 777);
}

TEST_CASE("scenario config JSON: defaults fill missing fields") {
  nlohmann::json j;
  j["bs_position_m"] = {3.0, 0.0};
  j["ms_position_m"] = {10.0, 4.0};
  j["scatterers_m"] = {{8.0, 13.0}};
  j["n_bs"] = 20;
  j["n_subcarriers"] = 20;
  j["bandwidth_hz"] = 4e7;
  j["carrier_hz"] = 6e10;
  j["lmr_db_per_path"] = {5.0};
  const ScenarioConfig cfg = config_from_json(j);
  CHECK(cfg.n_beams == 10);
  CHECK_FALSE(cfg.los_phase_rad.has_value());
  CHECK(cfg.pilot == PilotKind::Qpsk);
}

TEST_CASE("scenario config JSON: invalid configs are rejected") {
  ScenarioConfig cfg;
  nlohmann::json j = config_to_json(cfg);
  j["n_beams"] = 99;
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
}

TEST_CASE("simulation record JSON round trip preserves the observations") {
  ScenarioConfig cfg;
  cfg.los_phase_rad = 0.0;
  cfg.nlos_phase_rad = std::vector<double>{0.5};
  std::mt19937_64 rng(1);
  const ScenarioTruth truth = realize_scenario(cfg, rng);
  const TxSignalSet tx = build_beamformer(cfg);
  const ObservationSet obs =
      synthesize(cfg, truth.paths, tx, truth.noise_variance, 5);

  SimulationRecord record{cfg, obs.received, obs.noise_variance, truth.paths};
  const SimulationRecord back = simulation_from_json(simulation_to_json(record));
  CHECK(back.noise_variance == record.noise_variance);
  CHECK((back.received - record.received).norm() == 0.0);
  REQUIRE(back.truth_paths.size() == truth.paths.size());
  CHECK(back.truth_paths[1].delay_s == truth.paths[1].delay_s);
}

TEST_CASE("estimate record JSON round trip") {
  EstimateRecord record;
  record.scenario = ScenarioConfig{};
  record.method = "joint";
  VecX values(4);
  values << 0.5, 2.7e-8, 1.2, 7.7e-8;
  record.estimate.theta = ThetaVector(values);
  record.estimate.alpha.resize(2);
  record.estimate.alpha << Complex{1e-6, -2e-6}, Complex{3e-7, 4e-7};
  record.estimate.noise_variance_hat = 2.5e-13;

  const EstimateRecord back = estimate_from_json(estimate_to_json(record));
  CHECK(back.method == "joint");
  CHECK(back.estimate.theta.n_paths() == 2);
  CHECK(back.estimate.theta.delay(1) == record.estimate.theta.delay(1));
  CHECK(back.estimate.theta.aod(0) ==
        doctest::Approx(record.estimate.theta.aod(0)).epsilon(1e-15));
  CHECK(back.estimate.alpha(0) == record.estimate.alpha(0));
  CHECK(back.estimate.noise_variance_hat == 2.5e-13);
}

TEST_CASE("sweep CSV has the documented stable header") {
  SweepResult result;
  SweepPoint point;
  point.value = 10.0;
  point.method = Method::Joint;
  QuantityStats q;
  q.quantity = "p";
  q.rmse = 0.05;
  q.bound = 0.03;
  q.trials_ok = 200;
  q.trials_failed = 0;
  q.q10 = 0.01;
  q.q50 = 0.04;
  q.q90 = 0.09;
  point.quantities.push_back(q);
  result.points.push_back(point);

  std::ostringstream os;
  write_sweep_csv(result, os);
  const std::string text = os.str();
  CHECK(text.rfind("value,method,quantity,rmse,bound,trials_ok,trials_failed,"
                   "q10,q50,q90\n",
                   0) == 0);
  CHECK(text.find("10,joint,p,0.05,0.03,200,0,") != std::string::npos);
}

TEST_CASE("bounds CSV lists PEB, SEB and per-parameter rows") {
  ScenarioConfig cfg;
  const PointBounds bounds = compute_point_bounds(cfg);
  std::ostringstream os;
  write_bounds_csv(cfg, bounds, os);
  const std::string text = os.str();
  CHECK(text.find("peb_m,") != std::string::npos);
  CHECK(text.find("seb_1_m,") != std::string::npos);
  CHECK(text.find("sqrt_crlb_aod_0_rad,") != std::string::npos);
  CHECK(text.find("sqrt_crlb_d_1_m,") != std::string::npos);
}
