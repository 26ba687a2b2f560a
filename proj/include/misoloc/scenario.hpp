#ifndef MISOLOC_SCENARIO_HPP
#define MISOLOC_SCENARIO_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "misoloc/types.hpp"

namespace misoloc {

enum class BeamLayout { UniformAngle, DftGrid };
enum class PilotKind { Ones, Qpsk };

// Full experiment description: geometry, waveform, power and propagation
// statistics. Positions are world-frame meters; all core math runs in a
// BS-centred frame and the scenario layer translates in/out.
struct ScenarioConfig {
  Vec2 bs_position{3.0, 0.0};
  Vec2 ms_position{10.0, 4.0};
  std::vector<Vec2> scatterers{Vec2{8.0, 13.0}};

  int n_bs = 20;             // transmit antennas
  int n_subcarriers = 20;    // N
  int n_transmissions = 1;   // G
  int n_beams = 10;          // M, typically n_bs/2
  double bandwidth_hz = 4.0e7;
  double carrier_hz = 6.0e10;
  double tx_power_w = 1.0e-3;
  double snr_db = 10.0;
  std::vector<double> lmr_db_per_path{5.0};  // one per scatterer
  double atten_db_per_km = 16.0;             // atmospheric attenuation
  double reflector_density = 1.0 / 7.0;      // per meter

  // Fixed phases make trials deterministic; unset means i.i.d. uniform
  // [0, 2pi) draws per realisation.
  std::optional<double> los_phase_rad;
  std::optional<std::vector<double>> nlos_phase_rad;

  double array_broadside_rad = 0.0;  // ULA broadside direction, ccw from x-axis
  double beam_sector_lo_rad = -kPi / 2.0;
  double beam_sector_hi_rad = kPi / 2.0;
  BeamLayout beam_layout = BeamLayout::UniformAngle;
  // Known pilot symbols, drawn per (beam, subcarrier, transmission) from
  // rng_seed. Subcarrier-varying symbols are required for AOD
  // identifiability when G = 1: with a constant transmit vector the array
  // response enters every sample through the same scalar and becomes
  // indistinguishable from the complex gain.
  PilotKind pilot = PilotKind::Qpsk;

  // Cyclic-prefix bookkeeping. The model is used directly in the frequency
  // domain, so these constants have no effect on any computation.
  int cp_length_symbols = 0;

  std::uint64_t rng_seed = 1;

  double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
  double sample_period_s() const { return 1.0 / bandwidth_hz; }
  double cp_duration_s() const { return cp_length_symbols * sample_period_s(); }
  int n_nlos() const { return static_cast<int>(scatterers.size()); }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

// Per-path channel parameters: complex-amplitude modulus/phase, time of
// flight and angle of departure (ccw from the x-axis).
struct PathParams {
  double amplitude = 0.0;
  double phase_rad = 0.0;
  double delay_s = 0.0;
  double aod_rad = 0.0;

  Complex gain() const { return std::polar(amplitude, phase_rad); }
};

// Location-domain form of a path: same amplitude/phase, but the geometric
// parameters are the BS-centred position (MS for the LOS path, scatterer
// for reflected paths).
struct LocationParams {
  double amplitude = 0.0;
  double phase_rad = 0.0;
  Vec2 position = Vec2::Zero();
};

struct ScenarioTruth {
  std::vector<PathParams> paths;   // LOS first
  std::vector<double> losses;      // rho_k, one per path
  double noise_variance = 0.0;     // sigma^2 [W]
};

// Geometric channel parameters (delay/AOD only; amplitude and phase stay
// zero until complex_gains fills them). LOS path first.
std::vector<PathParams> derive_channel_params(const ScenarioConfig& cfg);

// rho_0 such that 1/rho_0 = xi^2(d) * (lambda/(4 pi d))^2.
double path_loss_los(double distance_m, const ScenarioConfig& cfg);

// rho_k such that 1/rho_k = omega * Omega(d) * (lambda/(4 pi d))^2 with
// Omega(d) = (gamma_r d)^2 exp(-gamma_r d).
double path_loss_nlos(double path_length_m, double omega,
                      const ScenarioConfig& cfg);

// Reflection coefficient omega reproducing the requested LOS-to-multipath
// ratio for NLOS path k (1-based over scatterers: k = 1..K).
double calibrate_omega(double target_lmr_db, int path_index,
                       const ScenarioConfig& cfg);

// All path losses [rho_0, rho_1, ...] with omegas calibrated from
// lmr_db_per_path.
std::vector<double> path_losses(const ScenarioConfig& cfg);

// sigma^2 = P_t / (rho_0 * 10^(SNR/10)), identifying sigma^2 with N_0 B.
double noise_variance_from_snr(const ScenarioConfig& cfg);

// alpha_k = h_k / sqrt(rho_k) with |h_k| = sqrt(P_t); phases fixed from the
// config or drawn uniformly from rng.
std::vector<Complex> complex_gains(const ScenarioConfig& cfg,
                                   std::span<const double> losses,
                                   std::mt19937_64& rng);

// Complete truth realisation: geometry, calibrated losses, gains, noise.
ScenarioTruth realize_scenario(const ScenarioConfig& cfg, std::mt19937_64& rng);

// Location-domain parameters matching derive_channel_params path order
// (BS-centred positions).
std::vector<LocationParams> location_parameters(
    const ScenarioConfig& cfg, std::span<const PathParams> paths);

inline Vec2 to_world_frame(const ScenarioConfig& cfg, const Vec2& bs_centred) {
  return bs_centred + cfg.bs_position;
}
inline Vec2 to_bs_frame(const ScenarioConfig& cfg, const Vec2& world) {
  return world - cfg.bs_position;
}

}  // namespace misoloc

#endif
