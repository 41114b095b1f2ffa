#include "emass/scenario.hpp"

#include <cmath>

#include "emass/error.hpp"

namespace emass {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

template <typename T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

ScheduleKind schedule_kind_from(const std::string& s) {
  if (s == "fixed") return ScheduleKind::Fixed;
  if (s == "jittered") return ScheduleKind::Jittered;
  if (s == "random_window") return ScheduleKind::RandomWindow;
  if (s == "event_driven") return ScheduleKind::EventDriven;
  bad("unknown schedule kind '" + s + "'");
}

const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Fixed: return "fixed";
    case ScheduleKind::Jittered: return "jittered";
    case ScheduleKind::RandomWindow: return "random_window";
    case ScheduleKind::EventDriven: return "event_driven";
  }
  return "fixed";
}

TrendKind trend_kind_from(const std::string& s) {
  if (s == "none") return TrendKind::None;
  if (s == "linear") return TrendKind::Linear;
  if (s == "weekend") return TrendKind::Weekend;
  if (s == "custom_dummy") return TrendKind::CustomDummy;
  if (s == "sinusoid") return TrendKind::Sinusoid;
  bad("unknown trend kind '" + s + "'");
}

const char* to_string(TrendKind k) {
  switch (k) {
    case TrendKind::None: return "none";
    case TrendKind::Linear: return "linear";
    case TrendKind::Weekend: return "weekend";
    case TrendKind::CustomDummy: return "custom_dummy";
    case TrendKind::Sinusoid: return "sinusoid";
  }
  return "none";
}

DisturbanceCoding coding_from(const std::string& s) {
  if (s == "pulse") return DisturbanceCoding::Pulse;
  if (s == "persistent") return DisturbanceCoding::Persistent;
  if (s == "geometric_decay") return DisturbanceCoding::GeometricDecay;
  bad("unknown disturbance coding '" + s + "'");
}

const char* to_string(DisturbanceCoding c) {
  switch (c) {
    case DisturbanceCoding::Pulse: return "pulse";
    case DisturbanceCoding::Persistent: return "persistent";
    case DisturbanceCoding::GeometricDecay: return "geometric_decay";
  }
  return "pulse";
}

Mechanism mechanism_from(const std::string& s) {
  if (s == "MCAR") return Mechanism::MCAR;
  if (s == "MAR") return Mechanism::MAR;
  if (s == "MNAR") return Mechanism::MNAR;
  if (s == "TMAR") return Mechanism::TMAR;
  if (s == "ATMAR") return Mechanism::ATMAR;
  bad("unknown missingness mechanism '" + s + "'");
}

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::MCAR: return "MCAR";
    case Mechanism::MAR: return "MAR";
    case Mechanism::MNAR: return "MNAR";
    case Mechanism::TMAR: return "TMAR";
    case Mechanism::ATMAR: return "ATMAR";
  }
  return "MCAR";
}

std::vector<ClockWindow> windows_from(const Json& j, const char* what) {
  std::vector<ClockWindow> out;
  if (!j.is_array()) bad(std::string(what) + " must be an array of [start, end] pairs");
  for (const auto& w : j) {
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
      bad(std::string(what) + " entries must be [start, end] pairs");
    }
    out.push_back({w[0].get<double>(), w[1].get<double>()});
  }
  return out;
}

Json windows_to_json(const std::vector<ClockWindow>& windows) {
  Json out = Json::array();
  for (const auto& w : windows) out.push_back({w.start, w.end});
  return out;
}

TrendSpec trend_from_json(const Json& j) {
  reject_unknown_keys(j, {"kind", "coefficients", "days", "intervals", "period", "phase"}, "trend",
                      ErrorCode::InvalidScenario);
  TrendSpec t;
  t.kind = trend_kind_from(get<std::string>(j, "kind", "none"));
  if (j.contains("coefficients")) t.coefficients = vector_from_json(j["coefficients"], "coefficients");
  const auto days = get<std::vector<int>>(j, "days", {});
  t.days = std::set<int>(days.begin(), days.end());
  if (j.contains("intervals")) {
    for (const auto& w : windows_from(j["intervals"], "intervals")) {
      t.intervals.emplace_back(w.start, w.end);
    }
  }
  t.period = get<double>(j, "period", t.period);
  t.phase = get<double>(j, "phase", t.phase);
  return t;
}

Json trend_to_json(const TrendSpec& t) {
  Json j;
  j["kind"] = to_string(t.kind);
  j["coefficients"] = vector_to_json(t.coefficients);
  if (!t.days.empty()) j["days"] = std::vector<int>(t.days.begin(), t.days.end());
  if (!t.intervals.empty()) {
    Json w = Json::array();
    for (const auto& [a, b] : t.intervals) w.push_back({a, b});
    j["intervals"] = w;
  }
  if (t.kind == TrendKind::Sinusoid) {
    j["period"] = t.period;
    j["phase"] = t.phase;
  }
  return j;
}

MissingnessSpec missingness_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"mechanism", "rate", "driver", "slope", "time_pattern",
                       "window_probability", "lag", "targets"},
                      "missingness", ErrorCode::InvalidScenario);
  MissingnessSpec m;
  m.mechanism = mechanism_from(get<std::string>(j, "mechanism", "MCAR"));
  m.rate = get<double>(j, "rate", 0.0);
  m.driver = get<int>(j, "driver", 0);
  m.slope = get<double>(j, "slope", m.slope);
  if (j.contains("time_pattern")) m.time_pattern = windows_from(j["time_pattern"], "time_pattern");
  if (j.contains("window_probability")) m.window_probability = get<double>(j, "window_probability", 0.0);
  m.lag = get<int>(j, "lag", m.lag);
  m.targets = get<std::vector<int>>(j, "targets", {});
  return m;
}

Json missingness_to_json(const MissingnessSpec& m) {
  Json j;
  j["mechanism"] = to_string(m.mechanism);
  j["rate"] = m.rate;
  j["driver"] = m.driver;
  j["slope"] = m.slope;
  if (!m.time_pattern.empty()) j["time_pattern"] = windows_to_json(m.time_pattern);
  if (m.window_probability) j["window_probability"] = *m.window_probability;
  j["lag"] = m.lag;
  if (!m.targets.empty()) j["targets"] = m.targets;
  return j;
}

RegimeSchedule regimes_from_json(const Json& j) {
  reject_unknown_keys(j, {"breakpoints", "regimes"}, "regimes", ErrorCode::InvalidScenario);
  RegimeSchedule r;
  r.breakpoints = get<std::vector<double>>(j, "breakpoints", {});
  if (!j.contains("regimes") || !j["regimes"].is_array()) bad("regimes.regimes must be an array");
  for (const auto& item : j["regimes"]) {
    reject_unknown_keys(item, {"A", "mean_offset"}, "regime", ErrorCode::InvalidScenario);
    RegimeOverride o;
    if (item.contains("A")) o.A = matrix_from_json(item["A"], "regime A");
    if (item.contains("mean_offset")) o.mean_offset = vector_from_json(item["mean_offset"], "mean_offset");
    r.regimes.push_back(std::move(o));
  }
  return r;
}

Json regimes_to_json(const RegimeSchedule& r) {
  Json j;
  j["breakpoints"] = r.breakpoints;
  Json list = Json::array();
  for (const auto& o : r.regimes) {
    Json item = Json::object();
    if (o.A) item["A"] = matrix_to_json(*o.A);
    if (o.mean_offset) item["mean_offset"] = vector_to_json(*o.mean_offset);
    list.push_back(item);
  }
  j["regimes"] = list;
  return j;
}

TvpSchedule tvp_from_json(const Json& j) {
  reject_unknown_keys(j, {"row", "col", "trajectory", "start_value", "end_value", "midpoint", "steepness"},
                      "tvp", ErrorCode::InvalidScenario);
  if (get<std::string>(j, "trajectory", "sigmoid") != "sigmoid") bad("tvp trajectory must be sigmoid");
  TvpSchedule t;
  t.row = get<int>(j, "row", 0);
  t.col = get<int>(j, "col", 0);
  t.start_value = get<double>(j, "start_value", t.start_value);
  t.end_value = get<double>(j, "end_value", t.end_value);
  t.midpoint = get<double>(j, "midpoint", t.midpoint);
  t.steepness = get<double>(j, "steepness", t.steepness);
  return t;
}

Json tvp_to_json(const TvpSchedule& t) {
  return Json{{"row", t.row},
              {"col", t.col},
              {"trajectory", "sigmoid"},
              {"start_value", t.start_value},
              {"end_value", t.end_value},
              {"midpoint", t.midpoint},
              {"steepness", t.steepness}};
}

ParamMatrix param_matrix_from(const std::string& name) {
  if (name == "A") return ParamMatrix::A;
  if (name == "G") return ParamMatrix::G;
  if (name == "H") return ParamMatrix::H;
  if (name == "Sigma") return ParamMatrix::Sigma;
  if (name == "Theta") return ParamMatrix::Theta;
  throw Error(ErrorCode::InvalidTemplate, "unknown parameter matrix '" + name + "'");
}

}  // namespace

Json schedule_to_json(const PingSchedule& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["horizon"] = s.horizon;
  switch (s.kind) {
    case ScheduleKind::Fixed: j["interval"] = s.interval; break;
    case ScheduleKind::Jittered:
      j["interval"] = s.interval;
      j["max_jitter"] = s.max_jitter;
      break;
    case ScheduleKind::RandomWindow:
      j["windows"] = windows_to_json(s.windows);
      j["pings_per_day"] = s.pings_per_day;
      break;
    case ScheduleKind::EventDriven: j["event_rate"] = s.event_rate; break;
  }
  if (s.day_length > 0.0 || s.night_length > 0.0) {
    j["day_length"] = s.day_length;
    j["night_length"] = s.night_length;
  }
  return j;
}

PingSchedule schedule_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"kind", "interval", "max_jitter", "windows", "pings_per_day", "event_rate",
                       "horizon", "day_length", "night_length"},
                      "schedule", ErrorCode::InvalidScenario);
  PingSchedule s;
  s.kind = schedule_kind_from(get<std::string>(j, "kind", "fixed"));
  s.interval = get<double>(j, "interval", s.interval);
  s.max_jitter = get<double>(j, "max_jitter", s.max_jitter);
  if (j.contains("windows")) s.windows = windows_from(j["windows"], "windows");
  s.pings_per_day = get<int>(j, "pings_per_day", s.pings_per_day);
  s.event_rate = get<double>(j, "event_rate", s.event_rate);
  if (!j.contains("horizon")) bad("schedule.horizon is required");
  s.horizon = get<double>(j, "horizon", 0.0);
  s.day_length = get<double>(j, "day_length", 0.0);
  s.night_length = get<double>(j, "night_length", 0.0);
  return s;
}

Json event_to_json(const DisturbanceEvent& e) {
  Json j{{"onset", e.onset}, {"coding", to_string(e.coding)}, {"magnitude", e.magnitude}};
  if (e.coding == DisturbanceCoding::GeometricDecay) j["decay_ratio"] = e.decay_ratio;
  j["input_slot"] = e.input_slot;
  return j;
}

DisturbanceEvent event_from_json(const Json& j) {
  reject_unknown_keys(j, {"onset", "coding", "magnitude", "decay_ratio", "input_slot"}, "event",
                      ErrorCode::InvalidScenario);
  DisturbanceEvent e;
  if (!j.contains("onset")) bad("event onset is required");
  e.onset = get<double>(j, "onset", 0.0);
  e.coding = coding_from(get<std::string>(j, "coding", "pulse"));
  e.magnitude = get<double>(j, "magnitude", e.magnitude);
  e.decay_ratio = get<double>(j, "decay_ratio", e.decay_ratio);
  e.input_slot = get<int>(j, "input_slot", 0);
  return e;
}

Scenario scenario_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"schedule", "trends", "events", "missingness", "regimes", "tvp",
                       "n_participants", "seed", "start_weekday", "start_clock"},
                      "scenario", ErrorCode::InvalidScenario);
  Scenario s;
  auto& r = s.request;
  if (!j.contains("schedule")) bad("scenario.schedule is required");
  r.schedule = schedule_from_json(j["schedule"]);
  if (j.contains("trends")) {
    for (const auto& t : j["trends"]) r.trends.push_back(trend_from_json(t));
  }
  if (j.contains("events")) {
    for (const auto& e : j["events"]) r.events.push_back(event_from_json(e));
  }
  if (j.contains("missingness")) {
    const Json& m = j["missingness"];
    if (m.is_array()) {
      for (const auto& item : m) s.missingness.push_back(missingness_from_json(item));
    } else {
      s.missingness.push_back(missingness_from_json(m));
    }
  }
  if (j.contains("regimes")) r.regimes = regimes_from_json(j["regimes"]);
  if (j.contains("tvp")) r.tvp = tvp_from_json(j["tvp"]);
  r.n_participants = get<int>(j, "n_participants", 1);
  r.seed = get<std::uint64_t>(j, "seed", 0);
  r.start_weekday = get<int>(j, "start_weekday", 0);
  r.start_clock = get<double>(j, "start_clock", 0.0);
  if (r.start_weekday < 0 || r.start_weekday > 6) bad("start_weekday must lie in 0..6");
  if (r.start_clock < 0.0 || r.start_clock >= 24.0) bad("start_clock must lie in [0, 24)");
  return s;
}

Json scenario_to_json(const Scenario& s) {
  const auto& r = s.request;
  Json j;
  j["schedule"] = schedule_to_json(r.schedule);
  Json trends = Json::array();
  for (const auto& t : r.trends) trends.push_back(trend_to_json(t));
  j["trends"] = trends;
  Json events = Json::array();
  for (const auto& e : r.events) events.push_back(event_to_json(e));
  j["events"] = events;
  Json miss = Json::array();
  for (const auto& m : s.missingness) miss.push_back(missingness_to_json(m));
  j["missingness"] = miss;
  if (r.regimes) j["regimes"] = regimes_to_json(*r.regimes);
  if (r.tvp) j["tvp"] = tvp_to_json(*r.tvp);
  j["n_participants"] = r.n_participants;
  j["seed"] = r.seed;
  j["start_weekday"] = r.start_weekday;
  j["start_clock"] = r.start_clock;
  return j;
}

ModelTemplate template_from_json(const Json& j) {
  reject_unknown_keys(j, {"id", "model", "parameters", "disturbances"}, "template",
                      ErrorCode::InvalidTemplate);
  if (!j.contains("model")) throw Error(ErrorCode::InvalidTemplate, "template.model is required");
  ModelTemplate t;
  t.id = j.value("id", std::string());
  t.spec = model_from_json(j["model"]);
  require_valid(t.spec);
  t.params = ParameterMap(t.spec);
  if (j.contains("parameters")) {
    const Json& params = j["parameters"];
    if (!params.is_object()) throw Error(ErrorCode::InvalidTemplate, "parameters must be an object");
    for (const auto& [name, grid] : params.items()) {
      const ParamMatrix which = param_matrix_from(name);
      const bool covariance = which == ParamMatrix::Sigma || which == ParamMatrix::Theta;
      if (!grid.is_array() || static_cast<Eigen::Index>(grid.size()) != t.params.rows(which)) {
        throw Error(ErrorCode::InvalidTemplate, "parameters." + name + " has the wrong shape");
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Json& row = grid[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != t.params.cols(which)) {
          throw Error(ErrorCode::InvalidTemplate, "parameters." + name + " has the wrong shape");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
          const auto r = static_cast<Eigen::Index>(i);
          const auto k = static_cast<Eigen::Index>(c);
          const Json& cell = row[c];
          if (covariance && k > r) {
            if (!(cell == "fixed" || (cell.is_number() && cell.get<double>() == 0.0))) {
              throw Error(ErrorCode::InvalidTemplate,
                          "parameters." + name + " upper-triangle cells must be \"fixed\" or 0");
            }
            continue;
          }
          if (cell.is_number()) {
            t.params.set_fixed(which, r, k, cell.get<double>());
          } else if (cell == "free") {
            t.params.set_free(which, r, k);
          } else if (cell == "fixed") {
            // keeps the template value
          } else if (cell.is_string() && cell.get<std::string>().rfind("tie:", 0) == 0) {
            t.params.set_tied(which, r, k, cell.get<std::string>().substr(4));
          } else {
            throw Error(ErrorCode::InvalidTemplate, "parameters." + name + " has an unknown cell " +
                                                        cell.dump());
          }
        }
      }
    }
  }
  t.params.apply_random_walk(t.spec.random_walk_states, t.spec.time_mode);
  if (j.contains("disturbances")) {
    for (const auto& e : j["disturbances"]) t.disturbances.push_back(event_from_json(e));
  }
  return t;
}

ModelTemplate load_template(const std::filesystem::path& path) {
  ModelTemplate t = template_from_json(read_json_file(path));
  if (t.id.empty()) t.id = path.stem().string();
  return t;
}

Json fit_result_to_json(const FitResult& fit) {
  Json j;
  if (!fit.participant.empty()) j["participant"] = fit.participant;
  j["log_likelihood"] = fit.log_likelihood;
  j["n_free"] = fit.n_free;
  j["n_obs_used"] = fit.n_obs_used;
  j["aic"] = fit.aic;
  j["bic"] = fit.bic;
  j["converged"] = fit.converged;
  j["gradient_norm"] = fit.gradient_norm;
  j["iterations"] = fit.iterations;
  j["n_restarts_used"] = fit.n_restarts_used;
  Json finals = Json::array();
  for (const double v : fit.restart_log_likelihoods) finals.push_back(std::isfinite(v) ? Json(v) : Json());
  j["restart_log_likelihoods"] = finals;
  j["seed"] = fit.seed;
  j["standard_errors"] = nullptr;
  j["spec_hat"] = model_to_json(fit.spec_hat);
  return j;
}

}  // namespace emass
