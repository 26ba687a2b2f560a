#ifndef MISOLOC_ESTIMATOR_HPP
#define MISOLOC_ESTIMATOR_HPP

#include <span>
#include <vector>

#include "misoloc/nelder_mead.hpp"
#include "misoloc/scenario.hpp"
#include "misoloc/signal.hpp"
#include "misoloc/types.hpp"

namespace misoloc {

// Interleaved (aod, delay) pairs, one per path, in estimation order. The
// LOS label is assigned downstream from the smallest delay.
struct ThetaVector {
  VecX values;  // [aod_0, delay_0, aod_1, delay_1, ...]

  ThetaVector() = default;
  explicit ThetaVector(VecX v) : values(std::move(v)) {}
  static ThetaVector single(double aod_rad, double delay_s) {
    VecX v(2);
    v << aod_rad, delay_s;
    return ThetaVector(std::move(v));
  }
  static ThetaVector from_paths(std::span<const PathParams> paths) {
    VecX v(2 * paths.size());
    for (std::size_t k = 0; k < paths.size(); ++k) {
      v(2 * k) = paths[k].aod_rad;
      v(2 * k + 1) = paths[k].delay_s;
    }
    return ThetaVector(std::move(v));
  }

  int n_paths() const { return static_cast<int>(values.size()) / 2; }
  double aod(int k) const { return values(2 * k); }
  double delay(int k) const { return values(2 * k + 1); }
  double& aod(int k) { return values(2 * k); }
  double& delay(int k) { return values(2 * k + 1); }
};

// Search grid over (aod, range = c*delay).
struct GridSpec {
  VecX aod_nodes_rad;
  VecX range_nodes_m;

  // n_aod x n_range nodes covering aod in [-90 deg, 90 deg] (inclusive) and
  // range in (0, 50] m anchored at the far edge. Passing 2n-1 aod nodes and
  // 2n range nodes halves the steps while keeping every coarser node.
  static GridSpec coarse(int n_aod = 8, int n_range = 8,
                         double range_max_m = 50.0);
  // Footnote-resolution preset: 4 degrees in angle, 2 m in range.
  static GridSpec fine(double range_max_m = 50.0);

  int n_aod() const { return static_cast<int>(aod_nodes_rad.size()); }
  int n_range() const { return static_cast<int>(range_nodes_m.size()); }
};

struct CostDiagnostics {
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = true;
  ThetaVector initial;
  ThetaVector refined;
  bool regularized = false;       // near-singular profile solve encountered
  bool basin_exhausted = false;   // extraction revisited a grid node
};

// Q^g matrices (one per transmission, N x (K+1)):
// Q^g[n, k] = exp(-j kappa_n delay_k) a^H(aod_k) z^g[n].
std::vector<CMatX> build_Q(const ThetaVector& theta, const TxSignalSet& tx);

// Least-squares gains given theta:
// alpha = Q^{-1} sum_g (Q^g)^H y^g / sqrt(n_bs) with Q = sum_g (Q^g)^H Q^g.
CVecX profile_alpha(const ThetaVector& theta, const CMatX& observations,
                    const TxSignalSet& tx, bool* regularized = nullptr);

// Compressed negative log-likelihood with the gains (and implicitly the
// noise variance) profiled out: sum_g ||y^g - sqrt(n_bs) Q^g alpha_hat||^2.
double nll(const ThetaVector& theta, const CMatX& observations,
           const TxSignalSet& tx);

struct GridMinimum {
  int aod_index = 0;
  int range_index = 0;
  double cost = 0.0;
};

struct Spectrum {
  MatX cost;  // n_aod x n_range
  GridSpec grid;
  std::vector<GridMinimum> local_minima;  // sorted by ascending cost
};

// Single-path cost surface over the grid; its minima mark the angular and
// delay signatures of the individual paths.
Spectrum singlepath_spectrum(const CMatX& observations, const TxSignalSet& tx,
                             const GridSpec& grid);

// Successive path extraction: locate the deepest single-path minimum on the
// residual signal, fit and subtract that path's contribution, repeat.
// Pairs are returned in extraction order (strongest first).
ThetaVector successive_extraction(const CMatX& observations,
                                  const TxSignalSet& tx, const GridSpec& grid,
                                  int n_paths,
                                  CostDiagnostics* diag = nullptr);

// Simplex refinement of theta against an arbitrary cost. Coordinates are
// handled internally as (radians, meters) so the simplex is well scaled.
struct RefineOptions {
  double aod_step_rad = deg2rad(12.0);
  double range_step_m = 3.0;
  int max_iterations = 2000;
  double diameter_tolerance = 1e-8;
  int restarts = 2;
};
ThetaVector refine(const std::function<double(const ThetaVector&)>& cost,
                   const ThetaVector& start, CostDiagnostics& diag,
                   const RefineOptions& options = {});

struct EstimateResult {
  ThetaVector theta;
  CVecX alpha;
  double noise_variance_hat = 0.0;
  CostDiagnostics diagnostics;
};

// Two-step joint estimator: successive extraction for the initial point,
// then a joint simplex descent over all 2(K+1) coordinates.
EstimateResult joint_ml(const CMatX& observations, const TxSignalSet& tx,
                        int n_nlos, const GridSpec& grid);

// Grid-only single-path baseline (the extraction step alone).
EstimateResult sp_grid(const CMatX& observations, const TxSignalSet& tx,
                       int n_nlos, const GridSpec& grid);

// Single-path baseline with a per-path 2-D refinement of the single-path
// cost around each extracted pair.
EstimateResult sp_refine(const CMatX& observations, const TxSignalSet& tx,
                         int n_nlos, const GridSpec& grid);

}  // namespace misoloc

#endif
