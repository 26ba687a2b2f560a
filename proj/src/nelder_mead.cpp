#include "misoloc/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace misoloc {

namespace {

double guarded(const std::function<double(const VecX&)>& cost, const VecX& x) {
  const double value = cost(x);
  return std::isfinite(value) ? value
                              : std::numeric_limits<double>::infinity();
}

struct Simplex {
  std::vector<VecX> vertex;
  std::vector<double> value;

  void sort() {
    std::vector<int> order(vertex.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return value[a] < value[b]; });
    std::vector<VecX> v2(vertex.size());
    std::vector<double> f2(vertex.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      v2[i] = vertex[order[i]];
      f2[i] = value[order[i]];
    }
    vertex.swap(v2);
    value.swap(f2);
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 1; i < vertex.size(); ++i)
      d = std::max(d, (vertex[i] - vertex[0]).cwiseAbs().maxCoeff());
    return d;
  }
};

Simplex build_simplex(const std::function<double(const VecX&)>& cost,
                      const VecX& origin, const VecX& step) {
  const int dim = static_cast<int>(origin.size());
  Simplex s;
  s.vertex.resize(dim + 1);
  s.value.resize(dim + 1);
  s.vertex[0] = origin;
  s.value[0] = guarded(cost, origin);
  for (int i = 0; i < dim; ++i) {
    VecX v = origin;
    v(i) += step(i);
    s.vertex[i + 1] = v;
    s.value[i + 1] = guarded(cost, v);
  }
  s.sort();
  return s;
}

// One simplex descent; returns when the diameter criterion is met or the
// shared iteration budget runs out.
bool descend(const std::function<double(const VecX&)>& cost, Simplex& s,
             const NelderMeadOptions& opt, int& iterations_left,
             std::vector<double>* trace) {
  const int dim = static_cast<int>(s.vertex[0].size());
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  while (iterations_left > 0) {
    if (s.diameter() < opt.diameter_tolerance) return true;
    --iterations_left;

    VecX centroid = VecX::Zero(dim);
    for (int i = 0; i < dim; ++i) centroid += s.vertex[i];
    centroid /= dim;

    const VecX& worst = s.vertex[dim];
    const VecX reflected = centroid + kReflect * (centroid - worst);
    const double f_reflected = guarded(cost, reflected);

    if (f_reflected < s.value[0]) {
      const VecX expanded = centroid + kExpand * (reflected - centroid);
      const double f_expanded = guarded(cost, expanded);
      if (f_expanded < f_reflected) {
        s.vertex[dim] = expanded;
        s.value[dim] = f_expanded;
      } else {
        s.vertex[dim] = reflected;
        s.value[dim] = f_reflected;
      }
    } else if (f_reflected < s.value[dim - 1]) {
      s.vertex[dim] = reflected;
      s.value[dim] = f_reflected;
    } else {
      const bool outside = f_reflected < s.value[dim];
      const VecX base = outside ? reflected : worst;
      const VecX contracted = centroid + kContract * (base - centroid);
      const double f_contracted = guarded(cost, contracted);
      const double bar = outside ? f_reflected : s.value[dim];
      // strict: ties fall through to the shrink step, which collapses the
      // whole simplex on cost plateaus instead of cycling one vertex
      if (f_contracted < bar) {
        s.vertex[dim] = contracted;
        s.value[dim] = f_contracted;
      } else {
        for (int i = 1; i <= dim; ++i) {
          s.vertex[i] = s.vertex[0] + kShrink * (s.vertex[i] - s.vertex[0]);
          s.value[i] = guarded(cost, s.vertex[i]);
        }
      }
    }
    s.sort();
    if (trace) trace->push_back(s.value[0]);
  }
  return s.diameter() < opt.diameter_tolerance;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const VecX&)>& cost,
                             const VecX& start,
                             const NelderMeadOptions& options) {
  const int dim = static_cast<int>(start.size());
  if (dim < 1) throw std::invalid_argument("nelder_mead: empty start point");

  VecX step = options.initial_step;
  if (step.size() == 0) {
    step.resize(dim);
    for (int i = 0; i < dim; ++i)
      step(i) = start(i) != 0.0 ? 0.05 * std::abs(start(i)) : 0.00025;
  } else if (step.size() != dim) {
    throw std::invalid_argument("nelder_mead: initial_step size mismatch");
  }

  NelderMeadResult result;
  int budget = options.max_iterations;

  Simplex s = build_simplex(cost, start, step);
  if (!std::isfinite(s.value[0])) {
    // Cost is non-finite everywhere around the start; give up and report.
    result.minimizer = start;
    result.cost = guarded(cost, start);
    result.converged = false;
    return result;
  }
  bool converged = descend(cost, s, options, budget, &result.best_cost_trace);

  for (int r = 0; r < options.restarts && budget > 0; ++r) {
    const VecX best = s.vertex[0];
    const double best_value = s.value[0];
    // The fresh simplex contains the incumbent best vertex, so it can only
    // match or improve it.
    Simplex fresh =
        build_simplex(cost, best, step * options.restart_step_scale);
    converged = descend(cost, fresh, options, budget, &result.best_cost_trace);
    const double improvement = best_value - fresh.value[0];
    s = std::move(fresh);
    if (improvement <= 1e-14 * (1.0 + std::abs(best_value))) break;
  }

  result.minimizer = s.vertex[0];
  result.cost = s.value[0];
  result.iterations = options.max_iterations - budget;
  result.converged = converged;
  return result;
}

}  // namespace misoloc
