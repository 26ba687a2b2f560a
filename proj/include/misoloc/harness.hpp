#ifndef MISOLOC_HARNESS_HPP
#define MISOLOC_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "misoloc/estimator.hpp"
#include "misoloc/fim.hpp"
#include "misoloc/locmap.hpp"
#include "misoloc/scenario.hpp"

namespace misoloc {

enum class Method { Joint, SpGrid, SpRefine, BoundsOnly };
enum class SweepVariable { SnrDb, LmrDb, Mu, NPaths };

std::string to_string(Method method);
std::string to_string(SweepVariable variable);
Method method_from_string(const std::string& name);
SweepVariable sweep_variable_from_string(const std::string& name);

// Applies one swept value to a base scenario. mu and n_paths reposition the
// scatterers along fixed MS-relative directions (-20, 50, 70 degrees) at
// distances (20, 28, 36) m scaled by mu, so path separation shrinks as
// mu -> 0.
ScenarioConfig apply_sweep_value(const ScenarioConfig& base,
                                 SweepVariable variable, double value);

// Theoretical bounds for one scenario point, evaluated at fixed gain phases
// (zero unless the config pins them). A zero noise variance yields zero
// bounds.
struct PointBounds {
  double peb_m = 0.0;
  VecX scatterer_bound_m;
  VecX channel_crlb_sqrt;  // (amp, phase, delay, aod) per path
  double bound_for(const std::string& quantity) const;
};
PointBounds compute_point_bounds(const ScenarioConfig& cfg);

struct TrialRecord {
  bool estimator_ok = false;
  bool position_ok = false;
  Vec2 position_error = Vec2::Zero();   // world frame
  std::vector<char> scatterer_ok;       // size K
  std::vector<Vec2> scatterer_error;    // size K
  std::vector<double> aod_error_rad;    // size K+1, true-path order
  std::vector<double> delay_error_s;
  std::vector<double> amp_error;
  std::vector<double> phase_error_rad;
  double final_cost = 0.0;
  int iterations = 0;
};

// One synthesize -> estimate -> localize/map pass against the configured
// truth. Deterministic per seed; estimator failures are flagged, never
// silently dropped.
TrialRecord run_trial(const ScenarioConfig& cfg, Method method,
                      std::uint64_t seed, const GridSpec& grid);

struct QuantityStats {
  std::string quantity;
  double rmse = 0.0;
  double rmse_stderr = 0.0;
  double bound = 0.0;
  int trials_ok = 0;
  int trials_failed = 0;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
  bool empty = false;  // no successful trial contributed
};

// RMSE per quantity over successful trials (position quantities use the
// 2-vector error norm), plus 10/50/90 percent quantiles of the absolute
// errors.
std::vector<QuantityStats> aggregate(const std::vector<TrialRecord>& records,
                                     int n_nlos);

struct SweepSpec {
  SweepVariable variable = SweepVariable::SnrDb;
  std::vector<double> values;
  int trials = 200;
  std::vector<Method> methods{Method::Joint};
  ScenarioConfig base;
  GridSpec grid = GridSpec::coarse();
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

struct SweepPoint {
  double value = 0.0;
  Method method = Method::Joint;
  std::vector<QuantityStats> quantities;
  double wall_time_s = 0.0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepPoint> points;
};

// Per-trial seeds are pre-assigned by counter from the master seed, so a
// parallel run reproduces the serial result and any trial can be re-run in
// isolation.
std::uint64_t trial_seed(std::uint64_t master_seed, int point_index,
                         int trial_index);

SweepResult run_sweep(const SweepSpec& spec);

}  // namespace misoloc

#endif
