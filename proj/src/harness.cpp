#include "misoloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "misoloc/rng.hpp"

namespace misoloc {

namespace {

constexpr double kMuDirectionsDeg[3] = {-20.0, 50.0, 70.0};
constexpr double kMuDistancesM[3] = {20.0, 28.0, 36.0};

std::vector<Vec2> mu_scatterers(const ScenarioConfig& base, int count,
                                double mu) {
  if (count > 3)
    throw std::invalid_argument(
        "mu sweep supports at most three scatterer directions");
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    const double dir = deg2rad(kMuDirectionsDeg[k]);
    out.push_back(base.ms_position +
                  kMuDistancesM[k] * mu * Vec2(std::cos(dir), std::sin(dir)));
  }
  return out;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::Joint: return "joint";
    case Method::SpGrid: return "sp-grid";
    case Method::SpRefine: return "sp-refine";
    case Method::BoundsOnly: return "bounds-only";
  }
  return "unknown";
}

std::string to_string(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::SnrDb: return "snr_db";
    case SweepVariable::LmrDb: return "lmr_db";
    case SweepVariable::Mu: return "mu";
    case SweepVariable::NPaths: return "n_paths";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "joint") return Method::Joint;
  if (name == "sp-grid") return Method::SpGrid;
  if (name == "sp-refine") return Method::SpRefine;
  if (name == "bounds-only" || name == "bounds") return Method::BoundsOnly;
  throw std::invalid_argument("unknown method: " + name);
}

SweepVariable sweep_variable_from_string(const std::string& name) {
  if (name == "snr_db" || name == "snr") return SweepVariable::SnrDb;
  if (name == "lmr_db" || name == "lmr") return SweepVariable::LmrDb;
  if (name == "mu") return SweepVariable::Mu;
  if (name == "n_paths") return SweepVariable::NPaths;
  throw std::invalid_argument("unknown sweep variable: " + name);
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& base,
                                 SweepVariable variable, double value) {
  ScenarioConfig cfg = base;
  switch (variable) {
    case SweepVariable::SnrDb:
      cfg.snr_db = value;
      break;
    case SweepVariable::LmrDb:
      std::fill(cfg.lmr_db_per_path.begin(), cfg.lmr_db_per_path.end(), value);
      break;
    case SweepVariable::Mu: {
      if (!(value > 0.0) || value > 1.0)
        throw std::invalid_argument("mu must lie in (0, 1]");
      cfg.scatterers = mu_scatterers(base, base.n_nlos(), value);
      break;
    }
    case SweepVariable::NPaths: {
      const int k = static_cast<int>(std::lround(value));
      if (k < 0) throw std::invalid_argument("n_paths must be >= 0");
      cfg.scatterers = mu_scatterers(base, k, 1.0);
      const double lmr =
          base.lmr_db_per_path.empty() ? 5.0 : base.lmr_db_per_path.front();
      cfg.lmr_db_per_path.assign(k, lmr);
      if (cfg.nlos_phase_rad) cfg.nlos_phase_rad->resize(k, 0.0);
      break;
    }
  }
  return cfg;
}

double PointBounds::bound_for(const std::string& quantity) const {
  if (quantity == "p") return peb_m;
  if (quantity.rfind("s", 0) == 0 && quantity.size() > 1) {
    const int k = std::stoi(quantity.substr(1));
    return scatterer_bound_m(k - 1);
  }
  const auto split = quantity.rfind('_');
  const std::string kind = quantity.substr(0, split);
  const int k = std::stoi(quantity.substr(split + 1));
  if (kind == "amp") return channel_crlb_sqrt(4 * k + 0);
  if (kind == "phase") return channel_crlb_sqrt(4 * k + 1);
  if (kind == "d") return kSpeedOfLight * channel_crlb_sqrt(4 * k + 2);
  if (kind == "aod") return channel_crlb_sqrt(4 * k + 3);
  throw std::invalid_argument("unknown quantity: " + quantity);
}

PointBounds compute_point_bounds(const ScenarioConfig& cfg) {
  ScenarioConfig pinned = cfg;
  if (!pinned.los_phase_rad) pinned.los_phase_rad = 0.0;
  if (!pinned.nlos_phase_rad)
    pinned.nlos_phase_rad = std::vector<double>(pinned.n_nlos(), 0.0);

  std::mt19937_64 rng(0);  // phases are pinned, nothing is drawn
  const ScenarioTruth truth = realize_scenario(pinned, rng);

  PointBounds out;
  const int dim = 4 * (pinned.n_nlos() + 1);
  if (truth.noise_variance == 0.0) {
    out.scatterer_bound_m = VecX::Zero(pinned.n_nlos());
    out.channel_crlb_sqrt = VecX::Zero(dim);
    return out;
  }
  const TxSignalSet tx = build_beamformer(pinned);
  const auto eta = location_parameters(pinned, truth.paths);
  const PositionFim bounds =
      position_bounds(truth.paths, eta, tx, truth.noise_variance);
  out.peb_m = bounds.peb_m;
  out.scatterer_bound_m = bounds.scatterer_bound_m;
  out.channel_crlb_sqrt = bounds.channel_crlb_sqrt;
  return out;
}

namespace {

// Pair estimated (aod, delay) pairs with the true paths: the minimum-delay
// estimate is the LOS candidate, the rest match greedily by arc distance.
std::vector<int> associate_paths(const ThetaVector& estimate,
                                 const std::vector<PathParams>& truth) {
  const int n_paths = static_cast<int>(truth.size());
  std::vector<int> match(n_paths, -1);
  std::vector<char> used(n_paths, 0);
  const int los = identify_los(estimate);
  match[0] = los;
  used[los] = 1;
  for (int k = 1; k < n_paths; ++k) {
    double best = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (int e = 0; e < n_paths; ++e) {
      if (used[e]) continue;
      const double d_range =
          kSpeedOfLight * (estimate.delay(e) - truth[k].delay_s);
      const double d_arc = kSpeedOfLight * truth[k].delay_s *
                           wrap_angle(estimate.aod(e) - truth[k].aod_rad);
      const double dist = d_range * d_range + d_arc * d_arc;
      if (dist < best) {
        best = dist;
        best_idx = e;
      }
    }
    match[k] = best_idx;
    used[best_idx] = 1;
  }
  return match;
}

EstimateResult run_method(Method method, const CMatX& observations,
                          const TxSignalSet& tx, int n_nlos,
                          const GridSpec& grid) {
  switch (method) {
    case Method::Joint: return joint_ml(observations, tx, n_nlos, grid);
    case Method::SpGrid: return sp_grid(observations, tx, n_nlos, grid);
    case Method::SpRefine: return sp_refine(observations, tx, n_nlos, grid);
    case Method::BoundsOnly: break;
  }
  throw std::invalid_argument("run_trial: bounds-only is not an estimator");
}

}  // namespace

TrialRecord run_trial(const ScenarioConfig& cfg, Method method,
                      std::uint64_t seed, const GridSpec& grid) {
  TrialRecord record;
  const int n_nlos = cfg.n_nlos();
  record.scatterer_ok.assign(n_nlos, 0);
  record.scatterer_error.assign(n_nlos, Vec2::Zero());

  std::mt19937_64 phase_rng(derive_seed(seed, 0));
  const ScenarioTruth truth = realize_scenario(cfg, phase_rng);
  const TxSignalSet tx = build_beamformer(cfg);
  const ObservationSet obs = synthesize(cfg, truth.paths, tx,
                                        truth.noise_variance,
                                        derive_seed(seed, 1));

  EstimateResult est;
  try {
    est = run_method(method, obs.received, tx, n_nlos, grid);
  } catch (const std::exception&) {
    return record;  // estimator failure: flagged, not dropped
  }
  record.estimator_ok = true;
  record.final_cost = est.diagnostics.final_cost;
  record.iterations = est.diagnostics.iterations;

  const auto match = associate_paths(est.theta, truth.paths);
  const int n_paths = n_nlos + 1;
  record.aod_error_rad.resize(n_paths);
  record.delay_error_s.resize(n_paths);
  record.amp_error.resize(n_paths);
  record.phase_error_rad.resize(n_paths);
  for (int k = 0; k < n_paths; ++k) {
    const int e = match[k];
    record.aod_error_rad[k] =
        wrap_angle(est.theta.aod(e) - truth.paths[k].aod_rad);
    record.delay_error_s[k] = est.theta.delay(e) - truth.paths[k].delay_s;
    record.amp_error[k] =
        std::abs(est.alpha(e)) - truth.paths[k].amplitude;
    record.phase_error_rad[k] =
        wrap_angle(std::arg(est.alpha(e)) - truth.paths[k].phase_rad);
  }

  const LocalizationResult loc = localize_and_map(est.theta);
  const Vec2 ms_world = to_world_frame(cfg, loc.ms_position);
  record.position_ok = ms_world.allFinite();
  record.position_error = ms_world - cfg.ms_position;

  // loc.scatterers holds non-LOS pairs in theta order with the LOS pair
  // skipped; locate the one matching each true scatterer.
  for (int k = 1; k < n_paths; ++k) {
    const int e = match[k];
    const int slot = e - (e > loc.los_index ? 1 : 0);
    if (e == loc.los_index) continue;  // LOS mislabel: no map output
    const MappedScatterer& mapped = loc.scatterers[slot];
    if (!mapped.valid) continue;
    record.scatterer_ok[k - 1] = 1;
    record.scatterer_error[k - 1] =
        to_world_frame(cfg, mapped.position) - cfg.scatterers[k - 1];
  }
  return record;
}

namespace {

QuantityStats stats_from_squares(std::string name,
                                 const std::vector<double>& squares,
                                 int n_records) {
  QuantityStats st;
  st.quantity = std::move(name);
  st.trials_ok = static_cast<int>(squares.size());
  st.trials_failed = n_records - st.trials_ok;
  if (squares.empty()) {
    st.empty = true;
    st.rmse = std::numeric_limits<double>::quiet_NaN();
    st.q10 = st.q50 = st.q90 = std::numeric_limits<double>::quiet_NaN();
    return st;
  }
  const int n = st.trials_ok;
  double mean_sq = 0.0;
  for (double s : squares) mean_sq += s;
  mean_sq /= n;
  st.rmse = std::sqrt(mean_sq);

  double var_sq = 0.0;
  for (double s : squares) var_sq += (s - mean_sq) * (s - mean_sq);
  var_sq = n > 1 ? var_sq / (n - 1) : 0.0;
  const double se_mse = std::sqrt(var_sq / n);
  st.rmse_stderr = st.rmse > 0.0 ? se_mse / (2.0 * st.rmse) : 0.0;

  std::vector<double> magnitudes(squares.size());
  std::transform(squares.begin(), squares.end(), magnitudes.begin(),
                 [](double s) { return std::sqrt(s); });
  std::sort(magnitudes.begin(), magnitudes.end());
  const auto quantile = [&](double q) {
    const double pos = q * (magnitudes.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, magnitudes.size() - 1);
    const double frac = pos - lo;
    return magnitudes[lo] * (1.0 - frac) + magnitudes[hi] * frac;
  };
  st.q10 = quantile(0.10);
  st.q50 = quantile(0.50);
  st.q90 = quantile(0.90);
  return st;
}

}  // namespace

std::vector<QuantityStats> aggregate(const std::vector<TrialRecord>& records,
                                     int n_nlos) {
  const int n_records = static_cast<int>(records.size());
  std::vector<QuantityStats> out;

  std::vector<double> squares;
  const auto collect = [&](auto&& extract) {
    squares.clear();
    for (const auto& r : records) {
      const std::optional<double> sq = extract(r);
      if (sq) squares.push_back(*sq);
    }
  };

  collect([](const TrialRecord& r) -> std::optional<double> {
    if (!r.estimator_ok || !r.position_ok) return std::nullopt;
    return r.position_error.squaredNorm();
  });
  out.push_back(stats_from_squares("p", squares, n_records));

  for (int k = 1; k <= n_nlos; ++k) {
    collect([k](const TrialRecord& r) -> std::optional<double> {
      if (!r.estimator_ok || !r.scatterer_ok[k - 1]) return std::nullopt;
      return r.scatterer_error[k - 1].squaredNorm();
    });
    out.push_back(
        stats_from_squares("s" + std::to_string(k), squares, n_records));
  }

  for (int k = 0; k <= n_nlos; ++k) {
    const auto scalar = [&](auto&& pick, const std::string& prefix) {
      collect([&](const TrialRecord& r) -> std::optional<double> {
        if (!r.estimator_ok) return std::nullopt;
        const double e = pick(r);
        return e * e;
      });
      out.push_back(stats_from_squares(prefix + "_" + std::to_string(k),
                                       squares, n_records));
    };
    scalar([k](const TrialRecord& r) { return r.aod_error_rad[k]; }, "aod");
    scalar(
        [k](const TrialRecord& r) {
          return kSpeedOfLight * r.delay_error_s[k];
        },
        "d");
    scalar([k](const TrialRecord& r) { return r.amp_error[k]; }, "amp");
    scalar([k](const TrialRecord& r) { return r.phase_error_rad[k]; },
           "phase");
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t master_seed, int point_index,
                         int trial_index) {
  return derive_seed(derive_seed(master_seed,
                                 static_cast<std::uint64_t>(point_index)),
                     static_cast<std::uint64_t>(trial_index));
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.trials < 1)
    throw std::invalid_argument("run_sweep: trials must be >= 1");
  if (spec.values.empty())
    throw std::invalid_argument("run_sweep: no swept values");

  SweepResult result;
  result.spec = spec;

  for (std::size_t pi = 0; pi < spec.values.size(); ++pi) {
    const double value = spec.values[pi];
    const ScenarioConfig cfg =
        apply_sweep_value(spec.base, spec.variable, value);
    const PointBounds bounds = compute_point_bounds(cfg);
    const int n_nlos = cfg.n_nlos();

    for (Method method : spec.methods) {
      const auto t0 = std::chrono::steady_clock::now();
      SweepPoint point;
      point.value = value;
      point.method = method;

      if (method == Method::BoundsOnly) {
        QuantityStats peb;
        peb.quantity = "p";
        peb.rmse = std::numeric_limits<double>::quiet_NaN();
        peb.empty = true;
        peb.bound = bounds.peb_m;
        point.quantities.push_back(peb);
        for (int k = 1; k <= n_nlos; ++k) {
          QuantityStats seb = peb;
          seb.quantity = "s" + std::to_string(k);
          seb.bound = bounds.scatterer_bound_m(k - 1);
          point.quantities.push_back(seb);
        }
      } else {
        std::vector<TrialRecord> records(spec.trials);
        const int n_threads =
            spec.threads > 0
                ? spec.threads
                : std::max(1u, std::thread::hardware_concurrency());
        std::atomic<int> next{0};
        const auto worker = [&]() {
          for (;;) {
            const int t = next.fetch_add(1);
            if (t >= spec.trials) break;
            records[t] = run_trial(
                cfg, method,
                trial_seed(spec.master_seed, static_cast<int>(pi), t),
                spec.grid);
          }
        };
        if (n_threads <= 1 || spec.trials == 1) {
          worker();
        } else {
          std::vector<std::thread> pool;
          for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
          for (auto& th : pool) th.join();
        }
        point.quantities = aggregate(records, n_nlos);
        for (auto& q : point.quantities) q.bound = bounds.bound_for(q.quantity);
      }

      point.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      result.points.push_back(std::move(point));
    }
  }
  return result;
}

}  // namespace misoloc
