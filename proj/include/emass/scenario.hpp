#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "emass/estimation.hpp"
#include "emass/model_json.hpp"
#include "emass/simulate.hpp"

namespace emass {

/// Everything a simulation run needs besides the model.
struct Scenario {
  SimulationRequest request;
  /// Applied in order after simulation; each draw uses the run seed.
  std::vector<MissingnessSpec> missingness;
};

/// Keys: schedule, trends, events, missingness (object or array), regimes,
/// tvp, n_participants, seed, start_weekday, start_clock. Unknown keys are
/// rejected with INVALID_SCENARIO.
Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& scenario);

Json schedule_to_json(const PingSchedule& schedule);
PingSchedule schedule_from_json(const Json& j);
Json event_to_json(const DisturbanceEvent& event);
DisturbanceEvent event_from_json(const Json& j);

/// {"id"?, "model", "parameters"?, "disturbances"?}. Parameter matrices use
/// cells "free", "fixed", "tie:<group>" or a number (fixed at that value);
/// matrices left out stay fixed at the model's values. Sigma and Theta
/// cells refer to the lower Cholesky factor; upper-triangle cells must be
/// "fixed" or 0.
ModelTemplate template_from_json(const Json& j);
ModelTemplate load_template(const std::filesystem::path& path);

Json fit_result_to_json(const FitResult& fit);

}  // namespace emass
