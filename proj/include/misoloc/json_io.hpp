#ifndef MISOLOC_JSON_IO_HPP
#define MISOLOC_JSON_IO_HPP

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "misoloc/estimator.hpp"
#include "misoloc/harness.hpp"
#include "misoloc/scenario.hpp"
#include "misoloc/signal.hpp"

namespace misoloc {

// JSON schema: positions in meters, angles and phases in degrees, SI units
// otherwise. Angles are radians everywhere in memory.
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const nlohmann::json& j);

struct SimulationRecord {
  ScenarioConfig scenario;
  CMatX received;
  double noise_variance = 0.0;
  std::vector<PathParams> truth_paths;
};
nlohmann::json simulation_to_json(const SimulationRecord& record);
SimulationRecord simulation_from_json(const nlohmann::json& j);

struct EstimateRecord {
  ScenarioConfig scenario;
  std::string method;
  EstimateResult estimate;
};
nlohmann::json estimate_to_json(const EstimateRecord& record);
EstimateRecord estimate_from_json(const nlohmann::json& j);

nlohmann::json localization_to_json(const ScenarioConfig& cfg,
                                    const LocalizationResult& loc);

// Stable sweep CSV: value,method,quantity,rmse,bound,trials_ok,
// trials_failed,q10,q50,q90. NaN fields are written empty.
void write_sweep_csv(const SweepResult& result, std::ostream& os);

// CRLB report: quantity,value rows (peb/seb in meters, sqrt-CRLBs in the
// parameter's unit; d_k rows are delay bounds scaled to meters).
void write_bounds_csv(const ScenarioConfig& cfg, const PointBounds& bounds,
                      std::ostream& os);

// Fig.-2 style curves: value,k_paths,quantity,bound rows over the swept
// variable, with the NLOS count growing 0..K for mu sweeps.
void write_bounds_sweep_csv(const ScenarioConfig& base, SweepVariable variable,
                            const std::vector<double>& values,
                            std::ostream& os);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace misoloc

#endif
