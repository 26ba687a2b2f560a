#ifndef MISOLOC_SIGNAL_HPP
#define MISOLOC_SIGNAL_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>

#include "misoloc/scenario.hpp"
#include "misoloc/types.hpp"

namespace misoloc {

// Unit-norm ULA steering vector with half-wavelength spacing:
// element m = exp(j pi m sin(theta)) / sqrt(n_bs). theta is measured from
// the array broadside.
template <typename Scalar>
CVecXT<Scalar> steering_vector(Scalar aod_rad, int n_bs, Scalar /*lambda_m*/) {
  // d = lambda/2 makes the per-element phase pi*sin(theta), independent of
  // the carrier wavelength.
  CVecXT<Scalar> a(n_bs);
  const Scalar slope = Scalar(kPi) * std::sin(aod_rad);
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(n_bs));
  for (int m = 0; m < n_bs; ++m)
    a(m) = std::polar(scale, Scalar(m) * slope);
  return a;
}

inline CVecX steering_vector(double aod_rad, int n_bs, double lambda_m) {
  return steering_vector<double>(aod_rad, n_bs, lambda_m);
}

// Transmit-side signals z^g[n] = F x plus the model constants every
// receiver-side computation needs (subcarrier phase scale, wavelength,
// array broadside).
struct TxSignalSet {
  CMatX beams;       // F, n_bs x n_beams, shared by all (g, n)
  CMatX pilots;      // x, n_beams x (N*G); column index g*N + n
  CMatX tx_vectors;  // z = F x, n_bs x (N*G)
  int n_subcarriers = 0;
  int n_transmissions = 0;
  double sample_period_s = 0.0;
  double wavelength_m = 0.0;
  double broadside_rad = 0.0;

  int n_bs() const { return static_cast<int>(beams.rows()); }
  Eigen::Index column(int g, int n) const {
    return static_cast<Eigen::Index>(g) * n_subcarriers + n;
  }
  auto tx_vector(int g, int n) const { return tx_vectors.col(column(g, n)); }
  // 2 pi n / (N T_S)
  double subcarrier_rate(int n) const {
    return 2.0 * kPi * n / (n_subcarriers * sample_period_s);
  }
};

// M beams steering at uniformly spaced angles over the coverage sector
// (or a uniform-in-sine grid for BeamLayout::DftGrid), Frobenius-normalised
// so ||F||_F = 1. Constant-modulus pilots with ||x||^2 = P_t; QPSK symbols
// are seeded from cfg.rng_seed.
TxSignalSet build_beamformer(const ScenarioConfig& cfg);

// h[n] with h^T[n] = sum_k sqrt(n_bs) alpha_k e^{-j 2 pi n tau_k/(N T_S)}
// a^H(theta_k); narrowband approximation, lambda_n ~ lambda_c.
CVecX channel_row(int subcarrier, std::span<const PathParams> paths,
                  const ScenarioConfig& cfg);

// Noise-free received sample for transmission g, subcarrier n.
Complex noise_free_observation(int g, int n, std::span<const PathParams> paths,
                               const TxSignalSet& tx);

// All noise-free samples as the N x G matrix (row = subcarrier).
CMatX noise_free_matrix(std::span<const PathParams> paths,
                        const TxSignalSet& tx);

struct ObservationSet {
  CMatX received;  // Y, N x G (row = subcarrier, column = transmission)
  TxSignalSet tx;
  double noise_variance = 0.0;
};

// Y = M + noise, with circularly-symmetric complex Gaussian noise of
// variance sigma2 (sigma2/2 per real component). Deterministic per seed.
ObservationSet synthesize(const ScenarioConfig& cfg,
                          std::span<const PathParams> paths,
                          const TxSignalSet& tx, double sigma2,
                          std::uint64_t seed);

}  // namespace misoloc

#endif
