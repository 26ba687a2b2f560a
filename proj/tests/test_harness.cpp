#include <doctest.h>

#include <cmath>
#include <limits>

#include "misoloc/harness.hpp"

using namespace misoloc;

namespace {

ScenarioConfig noiseless_default() {
  ScenarioConfig cfg;
  cfg.snr_db = std::numeric_limits<double>::infinity();
  return cfg;
}

bool records_equal(const TrialRecord& a, const TrialRecord& b) {
  if (a.estimator_ok != b.estimator_ok) return false;
  if ((a.position_error - b.position_error).norm() != 0.0) return false;
  if (a.aod_error_rad != b.aod_error_rad) return false;
  if (a.delay_error_s != b.delay_error_s) return false;
  if (a.final_cost != b.final_cost) return false;
  return true;
}

}  // namespace

TEST_CASE("run_trial: noiseless joint pipeline round trip") {
  const TrialRecord record =
      run_trial(noiseless_default(), Method::Joint, 7, GridSpec::coarse());
  REQUIRE(record.estimator_ok);
  CHECK(record.position_error.norm() <= 1e-9);
  REQUIRE(record.scatterer_ok.size() == 1);
  CHECK(record.scatterer_ok[0] == 1);
  CHECK(record.scatterer_error[0].norm() <= 1e-9);
  for (double e : record.aod_error_rad) CHECK(std::abs(e) <= 1e-9);
  for (double e : record.delay_error_s)
    CHECK(std::abs(e) * kSpeedOfLight <= 1e-9);
}

TEST_CASE("run_trial: deterministic per seed") {
  ScenarioConfig cfg;
  const TrialRecord a = run_trial(cfg, Method::Joint, 42, GridSpec::coarse());
  const TrialRecord b = run_trial(cfg, Method::Joint, 42, GridSpec::coarse());
  CHECK(records_equal(a, b));
  const TrialRecord c = run_trial(cfg, Method::Joint, 43, GridSpec::coarse());
  CHECK_FALSE(records_equal(a, c));
}

TEST_CASE("run_trial: sp-grid keeps the node-quantization floor") {
  const ScenarioConfig cfg = noiseless_default();
  const GridSpec grid = GridSpec::coarse();
  const TrialRecord record = run_trial(cfg, Method::SpGrid, 3, grid);
  REQUIRE(record.estimator_ok);

  // the estimate lives on grid nodes, so each error is at least the
  // distance from the truth to its nearest node
  const auto paths = derive_channel_params(cfg);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    double nearest_aod = 1e300, nearest_range = 1e300;
    for (int i = 0; i < grid.n_aod(); ++i)
      nearest_aod = std::min(
          nearest_aod, std::abs(grid.aod_nodes_rad(i) - paths[k].aod_rad));
    for (int j = 0; j < grid.n_range(); ++j)
      nearest_range = std::min(
          nearest_range, std::abs(grid.range_nodes_m(j) -
                                  kSpeedOfLight * paths[k].delay_s));
    CHECK(nearest_aod > 0.0);
    CHECK(nearest_range > 0.0);
    CHECK(std::abs(record.aod_error_rad[k]) >= nearest_aod - 1e-12);
    CHECK(kSpeedOfLight * std::abs(record.delay_error_s[k]) >=
          nearest_range - 1e-9);
  }
}

TEST_CASE("aggregate: arithmetic identities") {
  std::vector<TrialRecord> records(2);
  for (auto& r : records) {
    r.estimator_ok = true;
    r.position_ok = true;
    r.scatterer_ok = {1};
    r.scatterer_error = {Vec2::Zero()};
    r.aod_error_rad = {0.0, 0.0};
    r.delay_error_s = {0.0, 0.0};
    r.amp_error = {0.0, 0.0};
    r.phase_error_rad = {0.0, 0.0};
  }
  records[0].position_error = {3.0, 0.0};
  records[1].position_error = {4.0, 0.0};

  const auto stats = aggregate(records, 1);
  REQUIRE(!stats.empty());
  CHECK(stats[0].quantity == "p");
  CHECK(stats[0].rmse == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(stats[0].trials_ok == 2);
  CHECK(stats[0].trials_failed == 0);

  // single trial: rmse equals the error norm
  std::vector<TrialRecord> one(records.begin(), records.begin() + 1);
  const auto single = aggregate(one, 1);
  CHECK(single[0].rmse == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("aggregate: zero successes marks the point empty") {
  std::vector<TrialRecord> records(3);
  for (auto& r : records) {
    r.estimator_ok = false;
    r.scatterer_ok = {0};
    r.scatterer_error = {Vec2::Zero()};
  }
  const auto stats = aggregate(records, 1);
  CHECK(stats[0].empty);
  CHECK(std::isnan(stats[0].rmse));
  CHECK(stats[0].trials_failed == 3);
}

TEST_CASE("apply_sweep_value: mu places scatterers on the reference rays") {
  ScenarioConfig base;
  base.scatterers = {Vec2{8.0, 13.0}, Vec2{9.0, 9.0}, Vec2{1.0, 9.0}};
  base.lmr_db_per_path = {5.0, 5.0, 5.0};

  const double mu = 0.6;
  const ScenarioConfig cfg = apply_sweep_value(base, SweepVariable::Mu, mu);
  REQUIRE(cfg.scatterers.size() == 3);
  const double dirs_deg[3] = {-20.0, 50.0, 70.0};
  const double dists[3] = {20.0, 28.0, 36.0};
  for (int k = 0; k < 3; ++k) {
    const Vec2 expected =
        base.ms_position + dists[k] * mu * Vec2(std::cos(deg2rad(dirs_deg[k])),
                                                std::sin(deg2rad(dirs_deg[k])));
    CHECK((cfg.scatterers[k] - expected).norm() < 1e-12);
    CHECK((cfg.scatterers[k] - base.ms_position).norm() ==
          doctest::Approx(dists[k] * mu).epsilon(1e-12));
  }

  const ScenarioConfig snr = apply_sweep_value(base, SweepVariable::SnrDb, -3.0);
  CHECK(snr.snr_db == -3.0);
  const ScenarioConfig lmr = apply_sweep_value(base, SweepVariable::LmrDb, 7.0);
  for (double v : lmr.lmr_db_per_path) CHECK(v == 7.0);
  const ScenarioConfig k2 = apply_sweep_value(base, SweepVariable::NPaths, 2.0);
  CHECK(k2.n_nlos() == 2);
  CHECK(k2.lmr_db_per_path.size() == 2);
}

TEST_CASE("run_sweep: deterministic, parallel equals serial, bounds shared") {
  SweepSpec spec;
  spec.variable = SweepVariable::SnrDb;
  spec.values = {10.0, 15.0};
  spec.trials = 6;
  spec.methods = {Method::Joint, Method::SpGrid};
  spec.master_seed = 9;
  spec.threads = 1;

  const SweepResult serial = run_sweep(spec);
  spec.threads = 4;
  const SweepResult parallel = run_sweep(spec);

  REQUIRE(serial.points.size() == parallel.points.size());
  for (std::size_t i = 0; i < serial.points.size(); ++i) {
    const auto& a = serial.points[i];
    const auto& b = parallel.points[i];
    REQUIRE(a.quantities.size() == b.quantities.size());
    for (std::size_t q = 0; q < a.quantities.size(); ++q) {
      CHECK(a.quantities[q].quantity == b.quantities[q].quantity);
      CHECK(a.quantities[q].rmse == b.quantities[q].rmse);
      CHECK(a.quantities[q].bound == b.quantities[q].bound);
      CHECK(a.quantities[q].trials_ok == b.quantities[q].trials_ok);
    }
  }

  // bound columns are method-independent
  for (std::size_t i = 0; i + 1 < serial.points.size(); i += 2) {
    const auto& joint = serial.points[i];
    const auto& grid_only = serial.points[i + 1];
    REQUIRE(joint.value == grid_only.value);
    for (std::size_t q = 0; q < joint.quantities.size(); ++q)
      CHECK(joint.quantities[q].bound == grid_only.quantities[q].bound);
  }
}

TEST_CASE("trial_seed: counter scheme is stable and collision-free here") {
  CHECK(trial_seed(1, 0, 0) != trial_seed(1, 0, 1));
  CHECK(trial_seed(1, 0, 0) != trial_seed(1, 1, 0));
  CHECK(trial_seed(1, 2, 3) == trial_seed(1, 2, 3));
  CHECK(trial_seed(1, 2, 3) != trial_seed(2, 2, 3));
}

TEST_CASE("compute_point_bounds: zero noise gives zero bounds") {
  const PointBounds bounds = compute_point_bounds(noiseless_default());
  CHECK(bounds.peb_m == 0.0);
  CHECK(bounds.scatterer_bound_m.size() == 1);
  CHECK(bounds.scatterer_bound_m(0) == 0.0);
}
