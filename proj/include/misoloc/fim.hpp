#ifndef MISOLOC_FIM_HPP
#define MISOLOC_FIM_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "misoloc/scenario.hpp"
#include "misoloc/signal.hpp"
#include "misoloc/types.hpp"

namespace misoloc {

// Fisher information on the channel parameters. 4x4 blocks per path pair,
// parameter order (amplitude, phase, delay, aod) within a block, LOS path
// first. Symmetric positive semidefinite.
struct ChannelFim {
  MatX info;

  int n_paths() const { return static_cast<int>(info.rows()) / 4; }
  Eigen::Block<const MatX, 4, 4> block(int h, int l) const {
    return info.block<4, 4>(4 * h, 4 * l);
  }
};

// Thrown when an information matrix is numerically singular; carries the
// eigen-spectrum for diagnosis.
class SingularFimError : public std::runtime_error {
 public:
  SingularFimError(const std::string& what, VecX spectrum)
      : std::runtime_error(what), eigenvalues(std::move(spectrum)) {}
  VecX eigenvalues;
};

// Symmetric inversion via eigendecomposition with Jacobi preconditioning.
// Modes below drop_tol * lambda_max are pseudo-inverted away (flagged).
struct SymmetricInverse {
  MatX inverse;
  double condition_number = 0.0;
  bool pseudo_inverse_used = false;
};
SymmetricInverse invert_symmetric(const MatX& matrix, double drop_tol = 1e-13);

// Closed-form channel-domain FIM for the Gaussian observation model.
ChannelFim fim_channel(std::span<const PathParams> paths, const TxSignalSet& tx,
                       double sigma2);

// Independent ground truth: central differences of the noise-free
// observations, assembled into the same information form. `step` scales the
// per-parameter perturbations (relative for amplitude, radians for angles,
// one part of the fastest subcarrier phase for delays).
ChannelFim fd_fim(std::span<const PathParams> paths, const TxSignalSet& tx,
                  double sigma2, double step);

// Jacobian d(channel)/d(location): J_position = T * J_channel * T^T.
// eta holds BS-centred positions, LOS (MS) first.
MatX jacobian_T(std::span<const LocationParams> eta);

// Analytic inverse transform, d(location)/d(channel), built block-wise from
// the geometry (not by numerically inverting T).
MatX jacobian_T_inverse(std::span<const LocationParams> eta);

struct PositionFim {
  MatX transform;          // T
  MatX fim_position;       // T J T^T
  MatX sigma_p;            // inverse of fim_position
  double peb_m = 0.0;      // position error bound for the MS
  VecX scatterer_bound_m;  // mapping error bound per scatterer (size K)
  VecX channel_crlb_sqrt;  // sqrt CRLB per channel parameter, 4(K+1)
  double condition_number = 0.0;
  bool pseudo_inverse_used = false;
};

PositionFim position_bounds(std::span<const PathParams> paths,
                            std::span<const LocationParams> eta,
                            const TxSignalSet& tx, double sigma2);

// Block-diagonal (orthogonal paths) approximation of sigma_p.
MatX approx_sigma_p(std::span<const PathParams> paths,
                    std::span<const LocationParams> eta, const TxSignalSet& tx,
                    double sigma2);

inline double peb_from_sigma(const MatX& sigma_p) {
  return std::sqrt(sigma_p(2, 2) + sigma_p(3, 3));
}
inline double scatterer_bound_from_sigma(const MatX& sigma_p, int k) {
  return std::sqrt(sigma_p(4 * k + 2, 4 * k + 2) +
                   sigma_p(4 * k + 3, 4 * k + 3));
}

}  // namespace misoloc

#endif
