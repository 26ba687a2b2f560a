#include "misoloc/signal.hpp"

#include <cmath>
#include <stdexcept>

#include "misoloc/rng.hpp"

namespace misoloc {

TxSignalSet build_beamformer(const ScenarioConfig& cfg) {
  cfg.validate();
  const int m_beams = cfg.n_beams;
  const double lam = cfg.wavelength_m();

  TxSignalSet tx;
  tx.n_subcarriers = cfg.n_subcarriers;
  tx.n_transmissions = cfg.n_transmissions;
  tx.sample_period_s = cfg.sample_period_s();
  tx.wavelength_m = lam;
  tx.broadside_rad = cfg.array_broadside_rad;

  tx.beams.resize(cfg.n_bs, m_beams);
  const double lo = cfg.beam_sector_lo_rad;
  const double span = cfg.beam_sector_hi_rad - cfg.beam_sector_lo_rad;
  for (int i = 0; i < m_beams; ++i) {
    double beam_angle;
    if (cfg.beam_layout == BeamLayout::UniformAngle) {
      beam_angle = lo + (i + 0.5) * span / m_beams;
    } else {
      // uniform in sin(theta) over the sector, DFT-style grid
      const double s_lo = std::sin(lo - cfg.array_broadside_rad);
      const double s_hi = std::sin(cfg.beam_sector_hi_rad -
                                   cfg.array_broadside_rad);
      const double s = s_lo + (i + 0.5) * (s_hi - s_lo) / m_beams;
      beam_angle = cfg.array_broadside_rad + std::asin(s);
    }
    tx.beams.col(i) = steering_vector(beam_angle - cfg.array_broadside_rad,
                                      cfg.n_bs, lam);
  }
  tx.beams /= std::sqrt(static_cast<double>(m_beams));  // ||F||_F = 1

  const Eigen::Index n_cols =
      static_cast<Eigen::Index>(cfg.n_subcarriers) * cfg.n_transmissions;
  tx.pilots.resize(m_beams, n_cols);
  // Unit-energy symbol vectors: the transmit power budget is carried by the
  // channel amplitudes (|h_k| = sqrt(P_t)), so it must not be applied to the
  // pilots as well or every received sample scales by P_t twice and the
  // SNR calibration breaks.
  const double sym_amp = std::sqrt(1.0 / m_beams);
  if (cfg.pilot == PilotKind::Ones) {
    tx.pilots.setConstant(Complex(sym_amp, 0.0));
  } else {
    std::mt19937_64 rng(derive_seed(cfg.rng_seed, 0x70696c6f74ULL));
    for (Eigen::Index c = 0; c < n_cols; ++c)
      for (int i = 0; i < m_beams; ++i) {
        const int q = static_cast<int>(rng() & 3u);
        tx.pilots(i, c) = std::polar(sym_amp, kPi / 4.0 + q * kPi / 2.0);
      }
  }
  tx.tx_vectors = tx.beams * tx.pilots;
  return tx;
}

CVecX channel_row(int subcarrier, std::span<const PathParams> paths,
                  const ScenarioConfig& cfg) {
  if (paths.empty()) throw std::invalid_argument("channel_row: no paths");
  const double lam = cfg.wavelength_m();
  const double rate = 2.0 * kPi * subcarrier /
                      (cfg.n_subcarriers * cfg.sample_period_s());
  CVecX h = CVecX::Zero(cfg.n_bs);
  const double root_nbs = std::sqrt(static_cast<double>(cfg.n_bs));
  for (const auto& path : paths) {
    const CVecX a = steering_vector(path.aod_rad - cfg.array_broadside_rad,
                                    cfg.n_bs, lam);
    const Complex coeff =
        root_nbs * path.gain() * std::polar(1.0, -rate * path.delay_s);
    h += coeff * a.conjugate();
  }
  return h;
}

Complex noise_free_observation(int g, int n,
                               std::span<const PathParams> paths,
                               const TxSignalSet& tx) {
  const auto z = tx.tx_vector(g, n);
  const double rate = tx.subcarrier_rate(n);
  const double root_nbs = std::sqrt(static_cast<double>(tx.n_bs()));
  Complex sum(0.0, 0.0);
  for (const auto& path : paths) {
    const CVecX a = steering_vector(path.aod_rad - tx.broadside_rad,
                                    tx.n_bs(), tx.wavelength_m);
    sum += path.gain() * std::polar(1.0, -rate * path.delay_s) *
           (a.adjoint() * z).value();
  }
  return root_nbs * sum;
}

CMatX noise_free_matrix(std::span<const PathParams> paths,
                        const TxSignalSet& tx) {
  CMatX m(tx.n_subcarriers, tx.n_transmissions);
  for (int g = 0; g < tx.n_transmissions; ++g)
    for (int n = 0; n < tx.n_subcarriers; ++n)
      m(n, g) = noise_free_observation(g, n, paths, tx);
  return m;
}

ObservationSet synthesize(const ScenarioConfig& cfg,
                          std::span<const PathParams> paths,
                          const TxSignalSet& tx, double sigma2,
                          std::uint64_t seed) {
  if (sigma2 < 0.0)
    throw std::invalid_argument("synthesize: sigma2 must be >= 0");
  (void)cfg;
  ObservationSet obs;
  obs.tx = tx;
  obs.noise_variance = sigma2;
  obs.received = noise_free_matrix(paths, tx);
  if (sigma2 > 0.0) {
    std::mt19937_64 rng(seed);
    const double scale = std::sqrt(sigma2);
    for (int g = 0; g < tx.n_transmissions; ++g)
      for (int n = 0; n < tx.n_subcarriers; ++n)
        obs.received(n, g) += scale * complex_gaussian(rng);
  }
  return obs;
}

}  // namespace misoloc
