#include "misoloc/estimator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace misoloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ProfiledFit {
  CVecX alpha;
  double cost = 0.0;
  bool regularized = false;
};

// Shared evaluation path for profile_alpha, nll and the spectra: builds the
// per-transmission model matrices, profiles the gains by least squares and
// accumulates the residual cost.
ProfiledFit evaluate_fit(const ThetaVector& theta, const CMatX& observations,
                         const TxSignalSet& tx) {
  const int n_paths = theta.n_paths();
  if (n_paths < 1) throw std::invalid_argument("estimator: empty theta");
  if (observations.rows() != tx.n_subcarriers ||
      observations.cols() != tx.n_transmissions)
    throw std::invalid_argument("estimator: observation shape mismatch");

  const auto q_mats = build_Q(theta, tx);
  const double root_nbs = std::sqrt(static_cast<double>(tx.n_bs()));

  CMatX gram = CMatX::Zero(n_paths, n_paths);
  CVecX rhs = CVecX::Zero(n_paths);
  for (int g = 0; g < tx.n_transmissions; ++g) {
    gram.noalias() += q_mats[g].adjoint() * q_mats[g];
    rhs.noalias() += q_mats[g].adjoint() * observations.col(g);
  }

  ProfiledFit fit;
  Eigen::LDLT<CMatX> ldlt(gram);
  const VecX diag = ldlt.vectorD().real();
  const bool near_singular = ldlt.info() != Eigen::Success ||
                             !(diag.minCoeff() > 1e-13 * diag.maxCoeff());
  if (near_singular) {
    const double eps = 1e-10 * gram.real().trace() / n_paths;
    ldlt.compute(gram + eps * CMatX::Identity(n_paths, n_paths));
    fit.regularized = true;
  }
  fit.alpha = ldlt.solve(rhs) / root_nbs;

  double cost = 0.0;
  for (int g = 0; g < tx.n_transmissions; ++g)
    cost += (observations.col(g) - root_nbs * (q_mats[g] * fit.alpha))
                .squaredNorm();
  fit.cost = cost;
  return fit;
}

}  // namespace

GridSpec GridSpec::coarse(int n_aod, int n_range, double range_max_m) {
  if (n_aod < 1 || n_range < 1)
    throw std::invalid_argument("GridSpec: node counts must be >= 1");
  GridSpec grid;
  grid.aod_nodes_rad.resize(n_aod);
  for (int i = 0; i < n_aod; ++i)
    grid.aod_nodes_rad(i) =
        n_aod == 1 ? 0.0
                   : -kPi / 2.0 + i * kPi / static_cast<double>(n_aod - 1);
  grid.range_nodes_m.resize(n_range);
  const double step = range_max_m / n_range;
  for (int j = 0; j < n_range; ++j)
    grid.range_nodes_m(j) = range_max_m - j * step;
  return grid;
}

GridSpec GridSpec::fine(double range_max_m) {
  GridSpec grid;
  const double aod_step = deg2rad(4.0);
  const int n_aod = static_cast<int>(std::floor(kPi / aod_step)) + 1;
  grid.aod_nodes_rad.resize(n_aod);
  for (int i = 0; i < n_aod; ++i)
    grid.aod_nodes_rad(i) = -kPi / 2.0 + i * aod_step;
  const double range_step = 2.0;
  const int n_range = static_cast<int>(std::floor(range_max_m / range_step));
  grid.range_nodes_m.resize(n_range);
  for (int j = 0; j < n_range; ++j)
    grid.range_nodes_m(j) = range_max_m - j * range_step;
  return grid;
}

std::vector<CMatX> build_Q(const ThetaVector& theta, const TxSignalSet& tx) {
  const int n_paths = theta.n_paths();
  CMatX steering(tx.n_bs(), n_paths);
  for (int k = 0; k < n_paths; ++k)
    steering.col(k) = steering_vector(theta.aod(k) - tx.broadside_rad,
                                      tx.n_bs(), tx.wavelength_m);
  // projections[k, g*N + n] = a^H(aod_k) z^g[n]
  const CMatX projections = steering.adjoint() * tx.tx_vectors;

  std::vector<CMatX> q_mats(tx.n_transmissions);
  for (int g = 0; g < tx.n_transmissions; ++g) {
    CMatX q(tx.n_subcarriers, n_paths);
    for (int n = 0; n < tx.n_subcarriers; ++n) {
      const double rate = tx.subcarrier_rate(n);
      for (int k = 0; k < n_paths; ++k)
        q(n, k) = std::polar(1.0, -rate * theta.delay(k)) *
                  projections(k, tx.column(g, n));
    }
    q_mats[g] = std::move(q);
  }
  return q_mats;
}

CVecX profile_alpha(const ThetaVector& theta, const CMatX& observations,
                    const TxSignalSet& tx, bool* regularized) {
  const ProfiledFit fit = evaluate_fit(theta, observations, tx);
  if (regularized) *regularized = fit.regularized;
  return fit.alpha;
}

double nll(const ThetaVector& theta, const CMatX& observations,
           const TxSignalSet& tx) {
  return evaluate_fit(theta, observations, tx).cost;
}

Spectrum singlepath_spectrum(const CMatX& observations, const TxSignalSet& tx,
                             const GridSpec& grid) {
  if (grid.n_aod() < 1 || grid.n_range() < 1)
    throw std::invalid_argument("singlepath_spectrum: empty grid");

  Spectrum spec;
  spec.grid = grid;
  spec.cost.resize(grid.n_aod(), grid.n_range());
  for (int i = 0; i < grid.n_aod(); ++i)
    for (int j = 0; j < grid.n_range(); ++j)
      spec.cost(i, j) =
          nll(ThetaVector::single(grid.aod_nodes_rad(i),
                                  grid.range_nodes_m(j) / kSpeedOfLight),
              observations, tx);

  for (int i = 0; i < grid.n_aod(); ++i) {
    for (int j = 0; j < grid.n_range(); ++j) {
      const double c = spec.cost(i, j);
      const bool is_min =
          (i == 0 || c <= spec.cost(i - 1, j)) &&
          (i == grid.n_aod() - 1 || c <= spec.cost(i + 1, j)) &&
          (j == 0 || c <= spec.cost(i, j - 1)) &&
          (j == grid.n_range() - 1 || c <= spec.cost(i, j + 1));
      if (is_min) spec.local_minima.push_back({i, j, c});
    }
  }
  std::sort(spec.local_minima.begin(), spec.local_minima.end(),
            [](const GridMinimum& a, const GridMinimum& b) {
              return a.cost < b.cost;
            });
  return spec;
}

ThetaVector successive_extraction(const CMatX& observations,
                                  const TxSignalSet& tx, const GridSpec& grid,
                                  int n_paths, CostDiagnostics* diag) {
  if (n_paths < 1)
    throw std::invalid_argument("successive_extraction: n_paths must be >= 1");

  const double root_nbs = std::sqrt(static_cast<double>(tx.n_bs()));
  CMatX residual = observations;
  VecX pairs(2 * n_paths);
  std::vector<std::pair<int, int>> taken;

  for (int i = 0; i < n_paths; ++i) {
    const Spectrum spec = singlepath_spectrum(residual, tx, grid);
    Eigen::Index best_aod = 0, best_range = 0;
    spec.cost.minCoeff(&best_aod, &best_range);
    const std::pair<int, int> node{static_cast<int>(best_aod),
                                   static_cast<int>(best_range)};
    if (diag && std::find(taken.begin(), taken.end(), node) != taken.end())
      diag->basin_exhausted = true;
    taken.push_back(node);

    const ThetaVector single = ThetaVector::single(
        grid.aod_nodes_rad(node.first),
        grid.range_nodes_m(node.second) / kSpeedOfLight);
    const ProfiledFit fit = evaluate_fit(single, residual, tx);
    const auto q_mats = build_Q(single, tx);
    for (int g = 0; g < tx.n_transmissions; ++g)
      residual.col(g) -= root_nbs * (q_mats[g] * fit.alpha);

    pairs(2 * i) = single.aod(0);
    pairs(2 * i + 1) = single.delay(0);
  }
  return ThetaVector(std::move(pairs));
}

ThetaVector refine(const std::function<double(const ThetaVector&)>& cost,
                   const ThetaVector& start, CostDiagnostics& diag,
                   const RefineOptions& options) {
  const int n_paths = start.n_paths();
  // Simplex coordinates: angles in radians, delays as ranges in meters.
  VecX x0(2 * n_paths);
  for (int k = 0; k < n_paths; ++k) {
    x0(2 * k) = start.aod(k);
    x0(2 * k + 1) = start.delay(k) * kSpeedOfLight;
  }
  const auto to_theta = [](const VecX& x) {
    VecX v = x;
    for (int k = 0; k < x.size() / 2; ++k) v(2 * k + 1) /= kSpeedOfLight;
    return ThetaVector(std::move(v));
  };

  NelderMeadOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.diameter_tolerance = options.diameter_tolerance;
  nm.restarts = options.restarts;
  nm.initial_step.resize(2 * n_paths);
  for (int k = 0; k < n_paths; ++k) {
    nm.initial_step(2 * k) = options.aod_step_rad;
    nm.initial_step(2 * k + 1) = options.range_step_m;
  }

  const NelderMeadResult result = nelder_mead(
      [&](const VecX& x) { return cost(to_theta(x)); }, x0, nm);

  diag.initial = start;
  diag.refined = to_theta(result.minimizer);
  diag.final_cost = result.cost;
  diag.iterations += result.iterations;
  diag.converged = result.converged;
  return diag.refined;
}

namespace {

// Domain guard for the simplex search: positive delay inside the
// unambiguous window, angle within the ULA half-plane.
double guarded_nll(const ThetaVector& theta, const CMatX& observations,
                   const TxSignalSet& tx) {
  const double max_delay = tx.n_subcarriers * tx.sample_period_s;
  for (int k = 0; k < theta.n_paths(); ++k) {
    if (!(theta.delay(k) > 0.0) || !(theta.delay(k) < max_delay)) return kInf;
    if (std::abs(wrap_angle(theta.aod(k) - tx.broadside_rad)) >
        kPi / 2.0 + 1e-9)
      return kInf;
  }
  return nll(theta, observations, tx);
}

EstimateResult finalize(const ThetaVector& theta, const CMatX& observations,
                        const TxSignalSet& tx, CostDiagnostics diag) {
  const ProfiledFit fit = evaluate_fit(theta, observations, tx);
  EstimateResult out;
  out.theta = theta;
  out.alpha = fit.alpha;
  out.noise_variance_hat =
      fit.cost / (tx.n_subcarriers * tx.n_transmissions);
  diag.final_cost = fit.cost;
  diag.regularized |= fit.regularized;
  if (diag.refined.values.size() == 0) diag.refined = theta;
  out.diagnostics = std::move(diag);
  return out;
}

RefineOptions steps_from_grid(const GridSpec& grid) {
  RefineOptions opt;
  if (grid.n_aod() > 1)
    opt.aod_step_rad =
        0.5 * std::abs(grid.aod_nodes_rad(1) - grid.aod_nodes_rad(0));
  if (grid.n_range() > 1)
    opt.range_step_m =
        0.5 * std::abs(grid.range_nodes_m(1) - grid.range_nodes_m(0));
  return opt;
}

}  // namespace

EstimateResult joint_ml(const CMatX& observations, const TxSignalSet& tx,
                        int n_nlos, const GridSpec& grid) {
  CostDiagnostics diag;
  const ThetaVector init =
      successive_extraction(observations, tx, grid, n_nlos + 1, &diag);
  diag.initial = init;
  const ThetaVector theta = refine(
      [&](const ThetaVector& t) { return guarded_nll(t, observations, tx); },
      init, diag, steps_from_grid(grid));
  return finalize(theta, observations, tx, std::move(diag));
}

EstimateResult sp_grid(const CMatX& observations, const TxSignalSet& tx,
                       int n_nlos, const GridSpec& grid) {
  CostDiagnostics diag;
  const ThetaVector init =
      successive_extraction(observations, tx, grid, n_nlos + 1, &diag);
  diag.initial = init;
  return finalize(init, observations, tx, std::move(diag));
}

EstimateResult sp_refine(const CMatX& observations, const TxSignalSet& tx,
                         int n_nlos, const GridSpec& grid) {
  CostDiagnostics diag;
  const ThetaVector init =
      successive_extraction(observations, tx, grid, n_nlos + 1, &diag);
  diag.initial = init;

  const RefineOptions options = steps_from_grid(grid);
  VecX refined(2 * (n_nlos + 1));
  bool converged = true;
  for (int k = 0; k <= n_nlos; ++k) {
    CostDiagnostics pair_diag;
    const ThetaVector pair = refine(
        [&](const ThetaVector& t) {
          return guarded_nll(t, observations, tx);
        },
        ThetaVector::single(init.aod(k), init.delay(k)), pair_diag, options);
    refined(2 * k) = pair.aod(0);
    refined(2 * k + 1) = pair.delay(0);
    diag.iterations += pair_diag.iterations;
    converged &= pair_diag.converged;
  }
  diag.converged = converged;
  diag.refined = ThetaVector(refined);
  return finalize(diag.refined, observations, tx, std::move(diag));
}

}  // namespace misoloc
