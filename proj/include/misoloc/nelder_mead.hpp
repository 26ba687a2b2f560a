#ifndef MISOLOC_NELDER_MEAD_HPP
#define MISOLOC_NELDER_MEAD_HPP

#include <functional>
#include <vector>

#include "misoloc/types.hpp"

namespace misoloc {

struct NelderMeadOptions {
  int max_iterations = 2000;        // total budget, shared across restarts
  double diameter_tolerance = 1e-8; // max vertex distance to the best vertex
  VecX initial_step;                // per-coordinate simplex offsets
  int restarts = 2;                 // fresh simplexes seeded at the best point
  double restart_step_scale = 0.05;
};

struct NelderMeadResult {
  VecX minimizer;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> best_cost_trace;  // best vertex cost per iteration
};

// Derivative-free simplex descent. Non-finite cost values are treated as
// worse than any finite vertex, so the simplex contracts away from them.
NelderMeadResult nelder_mead(const std::function<double(const VecX&)>& cost,
                             const VecX& start,
                             const NelderMeadOptions& options = {});

}  // namespace misoloc

#endif
