#include <doctest.h>

#include <cmath>
#include <random>

#include "misoloc/locmap.hpp"
#include "misoloc/rng.hpp"

using namespace misoloc;

namespace {

ScenarioConfig pinned_default() {
  ScenarioConfig cfg;
  cfg.los_phase_rad = 0.4;
  cfg.nlos_phase_rad = std::vector<double>{2.1};
  return cfg;
}

}  // namespace

TEST_CASE("identify_los") {
  VecX single(2);
  single << 0.1, 3e-8;
  CHECK(identify_los(ThetaVector(single)) == 0);

  VecX two(4);
  two << 0.1, 80e-9, 0.9, 77e-9;
  CHECK(identify_los(ThetaVector(two)) == 1);

  VecX tied(4);
  tied << 0.1, 50e-9, 0.9, 50e-9;
  bool tie = false;
  CHECK(identify_los(ThetaVector(tied), &tie) == 0);
  CHECK(tie);
}

TEST_CASE("localize: axis cases and scenario round trip") {
  const Vec2 on_x = localize(0.0, 5.0 / kSpeedOfLight);
  CHECK(on_x.x() == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(std::abs(on_x.y()) < 1e-12);

  const Vec2 on_y = localize(kPi / 2.0, 2.0 / kSpeedOfLight);
  CHECK(std::abs(on_y.x()) < 1e-12);
  CHECK(on_y.y() == doctest::Approx(2.0).epsilon(1e-14));

  const ScenarioConfig cfg = pinned_default();
  const auto paths = derive_channel_params(cfg);
  const Vec2 world =
      to_world_frame(cfg, localize(paths[0].aod_rad, paths[0].delay_s));
  CHECK((world - cfg.ms_position).norm() < 1e-12);
}

TEST_CASE("map_scatterer: scenario geometry round trip") {
  const ScenarioConfig cfg = pinned_default();
  const auto paths = derive_channel_params(cfg);
  const Vec2 ms = to_bs_frame(cfg, cfg.ms_position);
  const MappedScatterer mapped =
      map_scatterer(ms, paths[1].aod_rad, paths[1].delay_s);
  REQUIRE(mapped.valid);
  CHECK((to_world_frame(cfg, mapped.position) - cfg.scatterers[0]).norm() <
        1e-9);
}

TEST_CASE("map_scatterer: ray and ellipse constraints hold") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 ms{2.0 + 20.0 * uniform_unit(rng),
                  20.0 * uniform_unit(rng) - 10.0};
    const double aod = kPi * uniform_unit(rng) - kPi / 2.0;
    const double range = ms.norm() * (1.001 + 3.0 * uniform_unit(rng));
    const MappedScatterer mapped =
        map_scatterer(ms, aod, range / kSpeedOfLight);
    if (!mapped.valid) continue;
    const double string_length =
        mapped.position.norm() + (ms - mapped.position).norm();
    CHECK(std::abs(string_length - range) <= 1e-9 * range);
    CHECK(std::abs(wrap_angle(
              std::atan2(mapped.position.y(), mapped.position.x()) - aod)) <=
          1e-9);
  }
}

TEST_CASE("map_scatterer: collinear degenerate case lands on the segment") {
  // scatterer on the BS-MS segment: reflected path looks exactly like LOS
  ScenarioConfig cfg = pinned_default();
  cfg.scatterers[0] = cfg.bs_position +
                      0.5 * (cfg.ms_position - cfg.bs_position);
  const auto paths = derive_channel_params(cfg);
  CHECK(paths[1].delay_s ==
        doctest::Approx(paths[0].delay_s).epsilon(1e-15));

  const Vec2 ms = to_bs_frame(cfg, cfg.ms_position);
  const MappedScatterer mapped =
      map_scatterer(ms, paths[1].aod_rad, paths[1].delay_s);
  REQUIRE(mapped.valid);
  // on the segment: collinear with the MS and between BS and MS
  const double along = mapped.position.dot(ms) / ms.squaredNorm();
  CHECK(along >= -1e-9);
  CHECK(along <= 1.0 + 1e-9);
  const double cross =
      mapped.position.x() * ms.y() - mapped.position.y() * ms.x();
  CHECK(std::abs(cross) <= 1e-9 * ms.squaredNorm());
  const double string_length =
      mapped.position.norm() + (ms - mapped.position).norm();
  CHECK(std::abs(string_length - kSpeedOfLight * paths[1].delay_s) <=
        1e-9 * ms.norm());
}

TEST_CASE("map_scatterer: infeasible delay flags invalid") {
  const Vec2 ms{7.0, 4.0};
  const double short_range = 0.9 * ms.norm();
  CHECK_FALSE(map_scatterer(ms, 0.3, short_range / kSpeedOfLight).valid);
}

TEST_CASE("position_cost equals the channel cost at mapped points") {
  const ScenarioConfig cfg = pinned_default();
  std::mt19937_64 rng(0);
  const ScenarioTruth truth = realize_scenario(cfg, rng);
  const TxSignalSet tx = build_beamformer(cfg);
  const CMatX clean = noise_free_matrix(truth.paths, tx);

  std::mt19937_64 sample(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double aod = kPi * uniform_unit(sample) - kPi / 2.0;
    const double range = 2.0 + 45.0 * uniform_unit(sample);
    const Vec2 s = range * Vec2(std::cos(aod), std::sin(aod));
    const double channel =
        nll(ThetaVector::single(std::atan2(s.y(), s.x()), s.norm() /
                                kSpeedOfLight),
            clean, tx);
    CHECK(position_cost(s, clean, tx) == channel);  // same code path, exact
  }
}

TEST_CASE("position_cost: minima at the MS and the equivalent position") {
  // noiseless K=1 geometry; NLOS 3 dB below LOS
  ScenarioConfig cfg = pinned_default();
  cfg.lmr_db_per_path = {3.0};
  std::mt19937_64 rng(0);
  const ScenarioTruth truth = realize_scenario(cfg, rng);
  const TxSignalSet tx = build_beamformer(cfg);
  const CMatX clean = noise_free_matrix(truth.paths, tx);

  const Vec2 ms = to_bs_frame(cfg, cfg.ms_position);
  const double range1 = kSpeedOfLight * truth.paths[1].delay_s;
  const Vec2 equivalent = range1 * Vec2(std::cos(truth.paths[1].aod_rad),
                                        std::sin(truth.paths[1].aod_rad));

  const double at_ms = position_cost(ms, clean, tx);
  const double at_equivalent = position_cost(equivalent, clean, tx);

  // both dominate every sample outside their basins
  std::mt19937_64 sample(11);
  int other_better = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const double aod = kPi * uniform_unit(sample) - kPi / 2.0;
    const double range = 2.0 + 45.0 * uniform_unit(sample);
    const Vec2 s = range * Vec2(std::cos(aod), std::sin(aod));
    if ((s - ms).norm() < 5.0 || (s - equivalent).norm() < 5.0) continue;
    if (position_cost(s, clean, tx) < std::max(at_ms, at_equivalent))
      ++other_better;
  }
  CHECK(other_better == 0);

  // rotational sweep at the LOS range bottoms out at the LOS direction
  const double los_range = kSpeedOfLight * truth.paths[0].delay_s;
  double best_aod = 0.0, best_cost = 1e300;
  for (double aod = -kPi / 2.0; aod <= kPi / 2.0; aod += deg2rad(0.25)) {
    const Vec2 s = los_range * Vec2(std::cos(aod), std::sin(aod));
    const double c = position_cost(s, clean, tx);
    if (c < best_cost) {
      best_cost = c;
      best_aod = aod;
    }
  }
  CHECK(std::abs(best_aod - truth.paths[0].aod_rad) < deg2rad(0.3));
}

TEST_CASE("equivalent_to_scatterer: scenario value and degenerate input") {
  // BS-frame positions for the default scene
  const Vec2 ms{7.0, 4.0};
  const Vec2 equivalent{8.309623580926187, 21.605021310408087};
  const Vec2 mapped = equivalent_to_scatterer(equivalent, ms);
  CHECK((mapped - Vec2{5.0, 13.0}).norm() < 1e-6);

  // zero-length mismatch maps to the equivalent position itself
  const Vec2 same = equivalent_to_scatterer(ms, ms);
  CHECK((same - ms).norm() < 1e-12);
}

TEST_CASE("equivalent_to_scatterer: equidistance always holds") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 ms{1.0 + 20.0 * uniform_unit(rng),
                  20.0 * uniform_unit(rng) - 10.0};
    const double aod = kPi * uniform_unit(rng) - kPi / 2.0;
    const double range = ms.norm() * (1.01 + 2.0 * uniform_unit(rng));
    const Vec2 equivalent = range * Vec2(std::cos(aod), std::sin(aod));
    const double denom =
        equivalent.squaredNorm() - ms.dot(equivalent);
    if (std::abs(denom) < 1e-6 * equivalent.squaredNorm()) continue;
    const Vec2 mapped = equivalent_to_scatterer(equivalent, ms);
    const double to_equivalent = (equivalent - mapped).norm();
    const double to_ms = (mapped - ms).norm();
    CHECK(std::abs(to_equivalent - to_ms) <=
          1e-12 * std::max(1.0, to_equivalent));
  }
}

TEST_CASE("equivalent_to_scatterer inverts the equivalent construction") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    ScenarioConfig cfg = pinned_default();
    cfg.scatterers[0] = {25.0 * uniform_unit(rng) - 5.0,
                         3.0 + 22.0 * uniform_unit(rng)};
    const auto paths = derive_channel_params(cfg);
    const Vec2 ms = to_bs_frame(cfg, cfg.ms_position);
    const Vec2 equivalent =
        kSpeedOfLight * paths[1].delay_s *
        Vec2(std::cos(paths[1].aod_rad), std::sin(paths[1].aod_rad));
    const Vec2 mapped = equivalent_to_scatterer(equivalent, ms);
    CHECK((mapped - to_bs_frame(cfg, cfg.scatterers[0])).norm() < 1e-9);
  }
}

TEST_CASE("full round trip: derive -> localize + map") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    ScenarioConfig cfg = pinned_default();
    cfg.ms_position = {3.0 + 15.0 * uniform_unit(rng),
                       12.0 * uniform_unit(rng) - 6.0};
    cfg.scatterers[0] = {20.0 * uniform_unit(rng) - 2.0,
                         4.0 + 20.0 * uniform_unit(rng)};
    const auto paths = derive_channel_params(cfg);
    const LocalizationResult loc =
        localize_and_map(ThetaVector::from_paths(paths));
    CHECK(loc.los_index == 0);
    CHECK((to_world_frame(cfg, loc.ms_position) - cfg.ms_position).norm() <
          1e-9);
    REQUIRE(loc.scatterers.size() == 1);
    REQUIRE(loc.scatterers[0].valid);
    CHECK((to_world_frame(cfg, loc.scatterers[0].position) -
           cfg.scatterers[0])
              .norm() < 1e-9);
  }
}
