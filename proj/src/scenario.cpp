#include "misoloc/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "misoloc/rng.hpp"

namespace misoloc {

namespace {
constexpr double kCoincidenceTol = 1e-12;
}

void ScenarioConfig::validate() const {
  if (n_bs < 1) throw std::invalid_argument("n_bs must be >= 1");
  if (n_beams < 1 || n_beams > n_bs)
    throw std::invalid_argument("n_beams must satisfy 1 <= n_beams <= n_bs");
  if (n_subcarriers < 1)
    throw std::invalid_argument("n_subcarriers must be >= 1");
  if (n_transmissions < 1)
    throw std::invalid_argument("n_transmissions must be >= 1");
  if (!(bandwidth_hz > 0.0))
    throw std::invalid_argument("bandwidth_hz must be > 0");
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("carrier_hz must be > 0");
  if (!(tx_power_w > 0.0)) throw std::invalid_argument("tx_power_w must be > 0");
  if (!(reflector_density > 0.0))
    throw std::invalid_argument("reflector_density must be > 0");
  if ((ms_position - bs_position).norm() < kCoincidenceTol)
    throw std::invalid_argument("ms_position coincides with bs_position");
  for (std::size_t k = 0; k < scatterers.size(); ++k) {
    if ((scatterers[k] - bs_position).norm() < kCoincidenceTol ||
        (scatterers[k] - ms_position).norm() < kCoincidenceTol)
      throw std::invalid_argument("scatterer " + std::to_string(k + 1) +
                                  " coincides with a link endpoint");
  }
  if (lmr_db_per_path.size() != scatterers.size())
    throw std::invalid_argument(
        "lmr_db_per_path must have one entry per scatterer");
  if (nlos_phase_rad && nlos_phase_rad->size() != scatterers.size())
    throw std::invalid_argument(
        "nlos_phase_rad must have one entry per scatterer");
  if (!(beam_sector_hi_rad > beam_sector_lo_rad))
    throw std::invalid_argument("beam sector must be a nonempty interval");
}

std::vector<PathParams> derive_channel_params(const ScenarioConfig& cfg) {
  cfg.validate();
  const Vec2 p = to_bs_frame(cfg, cfg.ms_position);
  std::vector<PathParams> paths(1 + cfg.scatterers.size());
  paths[0].delay_s = p.norm() / kSpeedOfLight;
  paths[0].aod_rad = std::atan2(p.y(), p.x());
  for (std::size_t k = 0; k < cfg.scatterers.size(); ++k) {
    const Vec2 s = to_bs_frame(cfg, cfg.scatterers[k]);
    paths[k + 1].delay_s = (s.norm() + (p - s).norm()) / kSpeedOfLight;
    paths[k + 1].aod_rad = std::atan2(s.y(), s.x());
  }
  return paths;
}

double path_loss_los(double distance_m, const ScenarioConfig& cfg) {
  if (!(distance_m > 0.0))
    throw std::invalid_argument("path_loss_los: distance must be > 0");
  const double atten_db = cfg.atten_db_per_km * distance_m / 1000.0;
  const double xi2 = std::pow(10.0, -atten_db / 10.0);
  const double lam = cfg.wavelength_m();
  const double free_space = std::pow(lam / (4.0 * kPi * distance_m), 2);
  return 1.0 / (xi2 * free_space);
}

double path_loss_nlos(double path_length_m, double omega,
                      const ScenarioConfig& cfg) {
  if (!(path_length_m > 0.0))
    throw std::invalid_argument("path_loss_nlos: path length must be > 0");
  if (!(omega > 0.0))
    throw std::invalid_argument("path_loss_nlos: omega must be > 0");
  const double gd = cfg.reflector_density * path_length_m;
  const double poisson = gd * gd * std::exp(-gd);
  const double lam = cfg.wavelength_m();
  const double free_space = std::pow(lam / (4.0 * kPi * path_length_m), 2);
  return 1.0 / (omega * poisson * free_space);
}

double calibrate_omega(double target_lmr_db, int path_index,
                       const ScenarioConfig& cfg) {
  if (path_index < 1 || path_index > cfg.n_nlos())
    throw std::invalid_argument("calibrate_omega: path_index out of range");
  const auto paths = derive_channel_params(cfg);
  const double rho0 =
      path_loss_los(paths[0].delay_s * kSpeedOfLight, cfg);
  const double dk = paths[path_index].delay_s * kSpeedOfLight;
  // LMR_k = rho_k / rho_0; invert 1/rho_k = omega * Omega(d) * fs(d).
  const double rho_target = rho0 * std::pow(10.0, target_lmr_db / 10.0);
  const double rho_unit = path_loss_nlos(dk, 1.0, cfg);
  const double omega = rho_unit / rho_target;
  if (!std::isfinite(omega) || !(omega > 0.0))
    throw std::runtime_error("calibrate_omega: non-finite calibration");
  return omega;
}

std::vector<double> path_losses(const ScenarioConfig& cfg) {
  const auto paths = derive_channel_params(cfg);
  std::vector<double> losses(paths.size());
  losses[0] = path_loss_los(paths[0].delay_s * kSpeedOfLight, cfg);
  for (int k = 1; k <= cfg.n_nlos(); ++k) {
    const double omega = calibrate_omega(cfg.lmr_db_per_path[k - 1], k, cfg);
    losses[k] =
        path_loss_nlos(paths[k].delay_s * kSpeedOfLight, omega, cfg);
  }
  return losses;
}

double noise_variance_from_snr(const ScenarioConfig& cfg) {
  const auto paths = derive_channel_params(cfg);
  const double rho0 =
      path_loss_los(paths[0].delay_s * kSpeedOfLight, cfg);
  return cfg.tx_power_w / (rho0 * std::pow(10.0, cfg.snr_db / 10.0));
}

std::vector<Complex> complex_gains(const ScenarioConfig& cfg,
                                   std::span<const double> losses,
                                   std::mt19937_64& rng) {
  std::vector<Complex> gains(losses.size());
  const double amp = std::sqrt(cfg.tx_power_w);
  for (std::size_t k = 0; k < losses.size(); ++k) {
    double phase;
    if (k == 0) {
      phase = cfg.los_phase_rad ? *cfg.los_phase_rad : uniform_angle(rng);
    } else if (cfg.nlos_phase_rad) {
      phase = (*cfg.nlos_phase_rad)[k - 1];
    } else {
      phase = uniform_angle(rng);
    }
    gains[k] = std::polar(amp / std::sqrt(losses[k]), phase);
  }
  return gains;
}

ScenarioTruth realize_scenario(const ScenarioConfig& cfg,
                               std::mt19937_64& rng) {
  ScenarioTruth truth;
  truth.paths = derive_channel_params(cfg);
  truth.losses = path_losses(cfg);
  const auto gains = complex_gains(cfg, truth.losses, rng);
  for (std::size_t k = 0; k < truth.paths.size(); ++k) {
    truth.paths[k].amplitude = std::abs(gains[k]);
    truth.paths[k].phase_rad = std::arg(gains[k]);
  }
  truth.noise_variance = noise_variance_from_snr(cfg);
  return truth;
}

std::vector<LocationParams> location_parameters(
    const ScenarioConfig& cfg, std::span<const PathParams> paths) {
  if (paths.size() != cfg.scatterers.size() + 1)
    throw std::invalid_argument(
        "location_parameters: path count does not match scenario");
  std::vector<LocationParams> eta(paths.size());
  eta[0].amplitude = paths[0].amplitude;
  eta[0].phase_rad = paths[0].phase_rad;
  eta[0].position = to_bs_frame(cfg, cfg.ms_position);
  for (std::size_t k = 1; k < paths.size(); ++k) {
    eta[k].amplitude = paths[k].amplitude;
    eta[k].phase_rad = paths[k].phase_rad;
    eta[k].position = to_bs_frame(cfg, cfg.scatterers[k - 1]);
  }
  return eta;
}

}  // namespace misoloc
