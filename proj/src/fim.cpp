#include "misoloc/fim.hpp"

#include <cmath>
#include <sstream>

namespace misoloc {

namespace {

// Pattern scalars for one (g, n) sample and path u:
//   projection  w_u = a^H(theta_u) z
//   ramp        v_u = a^H(theta_u) diag(0..n_bs-1) z
//   slope       c_u = pi cos(theta_u), the AOD phase-slope derivative
struct PathPattern {
  Complex projection;
  Complex ramp;
  double slope;
  Complex delay_phase;  // exp(-j kappa_n tau_u)
};

PathPattern make_pattern(const PathParams& path, const CVecX& z, double rate,
                         const TxSignalSet& tx) {
  const CVecX a = steering_vector(path.aod_rad - tx.broadside_rad, tx.n_bs(),
                                  tx.wavelength_m);
  PathPattern pat;
  pat.projection = (a.adjoint() * z).value();
  Complex ramp(0.0, 0.0);
  for (int m = 0; m < tx.n_bs(); ++m)
    ramp += std::conj(a(m)) * (static_cast<double>(m) * z(m));
  pat.ramp = ramp;
  pat.slope = kPi * std::cos(path.aod_rad - tx.broadside_rad);
  pat.delay_phase = std::polar(1.0, -rate * path.delay_s);
  return pat;
}

}  // namespace

ChannelFim fim_channel(std::span<const PathParams> paths, const TxSignalSet& tx,
                       double sigma2) {
  if (paths.empty()) throw std::invalid_argument("fim_channel: no paths");
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("fim_channel: sigma2 must be > 0");

  const int n_paths = static_cast<int>(paths.size());
  const int dim = 4 * n_paths;
  const double base = 2.0 * tx.n_bs() / sigma2;
  const Complex jimag(0.0, 1.0);

  MatX info = MatX::Zero(dim, dim);
  std::vector<PathPattern> pat(n_paths);
  std::vector<Complex> gain(n_paths), unit(n_paths);
  for (int u = 0; u < n_paths; ++u) {
    gain[u] = paths[u].gain();
    unit[u] = std::polar(1.0, paths[u].phase_rad);
  }

  for (int g = 0; g < tx.n_transmissions; ++g) {
    for (int n = 0; n < tx.n_subcarriers; ++n) {
      const CVecX z = tx.tx_vector(g, n);
      const double rate = tx.subcarrier_rate(n);
      for (int u = 0; u < n_paths; ++u)
        pat[u] = make_pattern(paths[u], z, rate, tx);

      for (int h = 0; h < n_paths; ++h) {
        for (int l = 0; l < n_paths; ++l) {
          // exp(j kappa_n (tau_h - tau_l))
          const Complex phase =
              std::conj(pat[h].delay_phase) * pat[l].delay_phase;
          const Complex quad_aa =
              std::conj(pat[h].projection) * pat[l].projection;
          const Complex quad_da =
              jimag * pat[h].slope * std::conj(pat[h].ramp) *
              pat[l].projection;
          const Complex quad_ad =
              -jimag * pat[l].slope * std::conj(pat[h].projection) *
              pat[l].ramp;
          const Complex quad_dd =
              pat[h].slope * pat[l].slope * std::conj(pat[h].ramp) *
              pat[l].ramp;

          const Complex gg = std::conj(gain[h]) * gain[l];
          const Complex gu = std::conj(gain[h]) * unit[l];
          const Complex ug = std::conj(unit[h]) * gain[l];
          const Complex uu = std::conj(unit[h]) * unit[l];

          auto blk = info.block<4, 4>(4 * h, 4 * l);
          blk(0, 0) += base * std::real(uu * phase * quad_aa);
          blk(0, 1) += base * std::real(jimag * ug * phase * quad_aa);
          blk(0, 2) += base * std::real(-jimag * rate * ug * phase * quad_aa);
          blk(0, 3) += base * std::real(ug * phase * quad_ad);
          blk(1, 0) += base * std::real(-jimag * gu * phase * quad_aa);
          blk(1, 1) += base * std::real(gg * phase * quad_aa);
          blk(1, 2) += base * std::real(-rate * gg * phase * quad_aa);
          blk(1, 3) += base * std::real(-jimag * gg * phase * quad_ad);
          blk(2, 0) += base * std::real(jimag * rate * gu * phase * quad_aa);
          blk(2, 1) += base * std::real(-rate * gg * phase * quad_aa);
          blk(2, 2) += base * std::real(rate * rate * gg * phase * quad_aa);
          blk(2, 3) += base * std::real(jimag * rate * gg * phase * quad_ad);
          blk(3, 0) += base * std::real(gu * phase * quad_da);
          blk(3, 1) += base * std::real(jimag * gg * phase * quad_da);
          blk(3, 2) += base * std::real(-jimag * rate * gg * phase * quad_da);
          blk(3, 3) += base * std::real(gg * phase * quad_dd);
        }
      }
    }
  }
  return ChannelFim{std::move(info)};
}

ChannelFim fd_fim(std::span<const PathParams> paths, const TxSignalSet& tx,
                  double sigma2, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_fim: step must be > 0");
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("fd_fim: sigma2 must be > 0");

  const int n_paths = static_cast<int>(paths.size());
  const int dim = 4 * n_paths;
  const int n_sub = tx.n_subcarriers;
  // Scale the delay step so the fastest subcarrier phase moves by `step`
  // radians.
  const double max_rate = tx.subcarrier_rate(n_sub > 1 ? n_sub - 1 : 1);

  std::vector<CMatX> deriv(dim);
  std::vector<PathParams> work(paths.begin(), paths.end());
  for (int u = 0; u < n_paths; ++u) {
    for (int comp = 0; comp < 4; ++comp) {
      double h = step;
      double* field = nullptr;
      switch (comp) {
        case 0:
          field = &work[u].amplitude;
          h = step * (paths[u].amplitude > 0.0 ? paths[u].amplitude : 1.0);
          break;
        case 1:
          field = &work[u].phase_rad;
          break;
        case 2:
          field = &work[u].delay_s;
          h = step / max_rate;
          break;
        case 3:
          field = &work[u].aod_rad;
          break;
      }
      const double saved = *field;
      *field = saved + h;
      const CMatX plus = noise_free_matrix(work, tx);
      *field = saved - h;
      const CMatX minus = noise_free_matrix(work, tx);
      *field = saved;
      deriv[4 * u + comp] = (plus - minus) / (2.0 * h);
    }
  }

  MatX info(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      info(i, j) =
          (2.0 / sigma2) *
          deriv[i].cwiseProduct(deriv[j].conjugate()).sum().real();
  return ChannelFim{std::move(info)};
}

MatX jacobian_T(std::span<const LocationParams> eta) {
  const int n_paths = static_cast<int>(eta.size());
  if (n_paths < 1) throw std::invalid_argument("jacobian_T: empty eta");
  const Vec2 p = eta[0].position;
  if (p.norm() < 1e-12)
    throw std::invalid_argument("jacobian_T: MS position at the BS origin");

  const int dim = 4 * n_paths;
  MatX t = MatX::Zero(dim, dim);
  for (int u = 0; u < n_paths; ++u) {
    t(4 * u + 0, 4 * u + 0) = 1.0;
    t(4 * u + 1, 4 * u + 1) = 1.0;
  }

  const Vec2 dtau0_dp = p / (kSpeedOfLight * p.norm());
  const Vec2 dtheta0_dp = Vec2(-p.y(), p.x()) / p.squaredNorm();
  t(2, 2) = dtau0_dp.x();
  t(3, 2) = dtau0_dp.y();
  t(2, 3) = dtheta0_dp.x();
  t(3, 3) = dtheta0_dp.y();

  for (int h = 1; h < n_paths; ++h) {
    const Vec2 s = eta[h].position;
    if (s.norm() < 1e-12)
      throw std::invalid_argument("jacobian_T: scatterer " +
                                  std::to_string(h) + " at the BS origin");
    const Vec2 diff = p - s;
    if (diff.norm() < 1e-12)
      throw std::invalid_argument("jacobian_T: scatterer " +
                                  std::to_string(h) + " coincides with MS");

    const Vec2 dtauh_dp = diff / (kSpeedOfLight * diff.norm());
    t(2, 4 * h + 2) = dtauh_dp.x();
    t(3, 4 * h + 2) = dtauh_dp.y();

    const Vec2 dtauh_ds =
        (s / s.norm() - diff / diff.norm()) / kSpeedOfLight;
    const Vec2 dthetah_ds = Vec2(-s.y(), s.x()) / s.squaredNorm();
    t(4 * h + 2, 4 * h + 2) = dtauh_ds.x();
    t(4 * h + 3, 4 * h + 2) = dtauh_ds.y();
    t(4 * h + 2, 4 * h + 3) = dthetah_ds.x();
    t(4 * h + 3, 4 * h + 3) = dthetah_ds.y();
  }
  return t;
}

MatX jacobian_T_inverse(std::span<const LocationParams> eta) {
  const int n_paths = static_cast<int>(eta.size());
  if (n_paths < 1) throw std::invalid_argument("jacobian_T_inverse: empty eta");
  const Vec2 p = eta[0].position;
  const double range = p.norm();
  if (range < 1e-12)
    throw std::invalid_argument(
        "jacobian_T_inverse: MS position at the BS origin");

  const int dim = 4 * n_paths;
  MatX tinv = MatX::Zero(dim, dim);
  for (int u = 0; u < n_paths; ++u) {
    tinv(4 * u + 0, 4 * u + 0) = 1.0;
    tinv(4 * u + 1, 4 * u + 1) = 1.0;
  }

  const Vec2 u0 = p / range;
  const Vec2 u0_perp(-u0.y(), u0.x());
  tinv(2, 2) = kSpeedOfLight * u0.x();
  tinv(2, 3) = kSpeedOfLight * u0.y();
  tinv(3, 2) = range * u0_perp.x();
  tinv(3, 3) = range * u0_perp.y();

  for (int h = 1; h < n_paths; ++h) {
    const Vec2 s = eta[h].position;
    const double bs_leg = s.norm();        // BS-to-scatterer distance
    const double ms_leg = (p - s).norm();  // scatterer-to-MS distance
    if (bs_leg < 1e-12)
      throw std::invalid_argument("jacobian_T_inverse: scatterer " +
                                  std::to_string(h) + " at the BS origin");
    const Vec2 uh = s / bs_leg;
    const Vec2 uh_perp(-uh.y(), uh.x());
    const double total = bs_leg + ms_leg;  // c tau_h
    const double margin = total - uh.dot(p);
    if (margin < 1e-12 * std::max(total, 1.0))
      throw std::invalid_argument(
          "jacobian_T_inverse: scatterer " + std::to_string(h) +
          " lies on the BS-MS segment (transform is singular)");

    const Vec2 ds_dtau0 =
        (kSpeedOfLight / margin) * (bs_leg * uh.dot(u0) - range) * uh;
    const Vec2 ds_dtheta0 = (bs_leg / margin) * range * uh.dot(u0_perp) * uh;
    const Vec2 ds_dtauh = (kSpeedOfLight * ms_leg / margin) * uh;
    const Vec2 ds_dthetah =
        (bs_leg / margin) * uh_perp.dot(p) * uh + bs_leg * uh_perp;

    tinv(2, 4 * h + 2) = ds_dtau0.x();
    tinv(2, 4 * h + 3) = ds_dtau0.y();
    tinv(3, 4 * h + 2) = ds_dtheta0.x();
    tinv(3, 4 * h + 3) = ds_dtheta0.y();
    tinv(4 * h + 2, 4 * h + 2) = ds_dtauh.x();
    tinv(4 * h + 2, 4 * h + 3) = ds_dtauh.y();
    tinv(4 * h + 3, 4 * h + 2) = ds_dthetah.x();
    tinv(4 * h + 3, 4 * h + 3) = ds_dthetah.y();
  }
  return tinv;
}

SymmetricInverse invert_symmetric(const MatX& matrix, double drop_tol) {
  const Eigen::Index dim = matrix.rows();
  VecX scale(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double d = matrix(i, i);
    scale(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const MatX balanced =
      scale.asDiagonal() * (0.5 * (matrix + matrix.transpose())) *
      scale.asDiagonal();

  Eigen::SelfAdjointEigenSolver<MatX> es(balanced);
  const VecX& lambda = es.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  if (!(lambda_max > 0.0)) {
    std::ostringstream msg;
    msg << "singular information matrix; eigenvalues:";
    for (Eigen::Index i = 0; i < dim; ++i) msg << ' ' << lambda(i);
    throw SingularFimError(msg.str(), lambda);
  }

  SymmetricInverse out;
  VecX inv_lambda(dim);
  double lambda_min_kept = lambda_max;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (lambda(i) > drop_tol * lambda_max) {
      inv_lambda(i) = 1.0 / lambda(i);
      lambda_min_kept = std::min(lambda_min_kept, lambda(i));
    } else {
      inv_lambda(i) = 0.0;
      out.pseudo_inverse_used = true;
    }
  }
  const MatX balanced_inv = es.eigenvectors() * inv_lambda.asDiagonal() *
                            es.eigenvectors().transpose();
  out.inverse = scale.asDiagonal() * balanced_inv * scale.asDiagonal();
  out.condition_number =
      out.pseudo_inverse_used
          ? std::numeric_limits<double>::infinity()
          : lambda_max / lambda_min_kept;
  return out;
}

PositionFim position_bounds(std::span<const PathParams> paths,
                            std::span<const LocationParams> eta,
                            const TxSignalSet& tx, double sigma2) {
  if (paths.size() != eta.size())
    throw std::invalid_argument(
        "position_bounds: paths and eta must have equal length");
  const ChannelFim channel = fim_channel(paths, tx, sigma2);

  PositionFim out;
  out.transform = jacobian_T(eta);
  out.fim_position =
      out.transform * channel.info * out.transform.transpose();

  const SymmetricInverse sigma = invert_symmetric(out.fim_position);
  out.sigma_p = sigma.inverse;
  out.condition_number = sigma.condition_number;
  out.pseudo_inverse_used = sigma.pseudo_inverse_used;
  out.peb_m = peb_from_sigma(out.sigma_p);

  const int n_paths = static_cast<int>(paths.size());
  out.scatterer_bound_m.resize(n_paths - 1);
  for (int k = 1; k < n_paths; ++k)
    out.scatterer_bound_m(k - 1) = scatterer_bound_from_sigma(out.sigma_p, k);

  const SymmetricInverse channel_inv = invert_symmetric(channel.info);
  out.channel_crlb_sqrt =
      channel_inv.inverse.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.pseudo_inverse_used |= channel_inv.pseudo_inverse_used;
  return out;
}

MatX approx_sigma_p(std::span<const PathParams> paths,
                    std::span<const LocationParams> eta, const TxSignalSet& tx,
                    double sigma2) {
  const ChannelFim channel = fim_channel(paths, tx, sigma2);
  const MatX tinv = jacobian_T_inverse(eta);
  const int n_paths = static_cast<int>(paths.size());

  // C_k = inverse of the k-th diagonal block of the channel FIM.
  std::vector<MatX> c_blocks(n_paths);
  for (int k = 0; k < n_paths; ++k) {
    const MatX block = channel.block(k, k);
    const SymmetricInverse inv = invert_symmetric(block);
    if (inv.pseudo_inverse_used) {
      Eigen::SelfAdjointEigenSolver<MatX> es(block);
      throw SingularFimError(
          "approx_sigma_p: singular per-path information block " +
              std::to_string(k),
          es.eigenvalues());
    }
    c_blocks[k] = inv.inverse;
  }

  // T-bar(h, l) = d eta_h / d gamma_l lives at (row-block l, col-block h).
  auto tbar = [&](int h, int l) { return tinv.block<4, 4>(4 * l, 4 * h); };

  MatX sigma = MatX::Zero(4 * n_paths, 4 * n_paths);
  for (int k = 0; k < n_paths; ++k) {
    for (int l = 0; l < n_paths; ++l) {
      MatX blk = tbar(k, 0).transpose() * c_blocks[0] * tbar(l, 0);
      if (k == l && k >= 1)
        blk += tbar(k, k).transpose() * c_blocks[k] * tbar(k, k);
      sigma.block<4, 4>(4 * k, 4 * l) = blk;
    }
  }
  return sigma;
}

}  // namespace misoloc
