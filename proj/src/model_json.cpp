#include "emass/model_json.hpp"

#include <fstream>
#include <sstream>

#include "emass/error.hpp"

namespace emass {
namespace {

Family family_from(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "poisson") return Family::Poisson;
  if (s == "graded_response") return Family::GradedResponse;
  if (s == "bernoulli_logistic") return Family::BernoulliLogistic;
  throw Error(ErrorCode::InvalidModel, "unknown measurement family '" + s + "'");
}

Link link_from(const std::string& s) {
  if (s == "identity") return Link::Identity;
  if (s == "log") return Link::Log;
  throw Error(ErrorCode::InvalidModel, "unknown link '" + s + "'");
}

TimeMode mode_from(const std::string& s) {
  if (s == "discrete") return TimeMode::Discrete;
  if (s == "continuous") return TimeMode::Continuous;
  throw Error(ErrorCode::InvalidModel, "unknown time_mode '" + s + "'");
}

template <typename T>
T get_as(const Json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidModel, "field '" + std::string(what) + "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Gaussian: return "gaussian";
    case Family::Poisson: return "poisson";
    case Family::GradedResponse: return "graded_response";
    case Family::BernoulliLogistic: return "bernoulli_logistic";
  }
  return "gaussian";
}

std::string_view to_string(Link link) {
  return link == Link::Identity ? "identity" : "log";
}

std::string_view to_string(TimeMode mode) {
  return mode == TimeMode::Discrete ? "discrete" : "continuous";
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, std::string_view what) {
  if (!j.is_array()) {
    throw Error(ErrorCode::InvalidModel, std::string(what) + " must be an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  for (const auto& row : j) {
    if (!row.is_array()) {
      throw Error(ErrorCode::InvalidModel, std::string(what) + " rows must be arrays");
    }
    if (cols < 0) cols = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::InvalidModel, std::string(what) + " is ragged");
    }
  }
  Eigen::MatrixXd m(rows, std::max<Eigen::Index>(cols, 0));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto& cell = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      if (!cell.is_number()) {
        throw Error(ErrorCode::InvalidModel, std::string(what) + " has a non-numeric entry");
      }
      m(i, c) = cell.get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j, std::string_view what) {
  if (!j.is_array()) {
    throw Error(ErrorCode::InvalidModel, std::string(what) + " must be an array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw Error(ErrorCode::InvalidModel, std::string(what) + " has a non-numeric entry");
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

void reject_unknown_keys(const Json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view where, ErrorCode code) {
  if (!object.is_object()) {
    throw Error(code, std::string(where) + " must be an object");
  }
  for (const auto& item : object.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) {
      throw Error(code, "unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

Json model_to_json(const ModelSpec& spec) {
  Json j;
  j["n_states"] = spec.n_states;
  j["n_obs"] = spec.n_obs;
  j["n_inputs"] = spec.n_inputs;
  j["A"] = matrix_to_json(spec.A);
  j["G"] = matrix_to_json(spec.G);
  j["H"] = matrix_to_json(spec.H);
  j["Sigma"] = matrix_to_json(spec.Sigma);
  j["Theta"] = matrix_to_json(spec.Theta);
  Json channels = Json::array();
  for (const auto& ch : spec.channels) {
    Json c;
    c["name"] = ch.name;
    c["family"] = to_string(ch.family);
    if (ch.family != Family::Gaussian) c["state_index"] = ch.state_index;
    if (ch.family == Family::Poisson) {
      c["scale"] = ch.scale;
      c["link"] = to_string(ch.link);
    }
    if (ch.family == Family::GradedResponse || ch.family == Family::BernoulliLogistic) {
      c["discrimination"] = ch.discrimination;
      c["thresholds"] = ch.thresholds;
    }
    if (ch.family == Family::GradedResponse) c["categories"] = ch.categories;
    channels.push_back(std::move(c));
  }
  j["channels"] = std::move(channels);
  if (spec.initial_mean) j["initial_mean"] = vector_to_json(*spec.initial_mean);
  if (spec.initial_cov) j["initial_cov"] = matrix_to_json(*spec.initial_cov);
  j["time_mode"] = to_string(spec.time_mode);
  j["random_walk_states"] = Json(std::vector<int>(spec.random_walk_states.begin(),
                                                  spec.random_walk_states.end()));
  return j;
}

ModelSpec model_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"n_states", "n_obs", "n_inputs", "A", "G", "H", "Sigma", "Theta",
                       "channels", "initial_mean", "initial_cov", "time_mode",
                       "random_walk_states"},
                      "model", ErrorCode::InvalidModel);
  for (const char* key : {"n_states", "n_obs", "A"}) {
    if (!j.contains(key)) {
      throw Error(ErrorCode::InvalidModel, std::string("model is missing '") + key + "'");
    }
  }
  ModelSpec spec;
  spec.n_states = get_as<int>(j["n_states"], "n_states");
  spec.n_obs = get_as<int>(j["n_obs"], "n_obs");
  spec.n_inputs = j.contains("n_inputs") ? get_as<int>(j["n_inputs"], "n_inputs") : 0;
  if (spec.n_states < 1 || spec.n_obs < 1 || spec.n_inputs < 0) {
    throw Error(ErrorCode::InvalidModel, "model dimensions out of range");
  }
  const auto read = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    if (!j.contains(key)) return Eigen::MatrixXd::Zero(rows, cols).eval();
    if (cols == 0 && j[key].is_array() && j[key].size() == static_cast<std::size_t>(rows)) {
      // [[], [], ...] parses as rows x 0.
      return Eigen::MatrixXd(rows, 0);
    }
    return matrix_from_json(j[key], key);
  };
  spec.A = read("A", spec.n_states, spec.n_states);
  spec.G = read("G", spec.n_states, spec.n_inputs);
  spec.H = read("H", spec.n_obs, spec.n_states);
  spec.Sigma = read("Sigma", spec.n_states, spec.n_states);
  spec.Theta = read("Theta", spec.n_obs, spec.n_obs);

  if (j.contains("channels")) {
    if (!j["channels"].is_array()) {
      throw Error(ErrorCode::InvalidModel, "channels must be an array");
    }
    for (const auto& c : j["channels"]) {
      reject_unknown_keys(c,
                          {"name", "family", "state_index", "scale", "link",
                           "discrimination", "thresholds", "categories"},
                          "channel", ErrorCode::InvalidModel);
      MeasurementChannel ch;
      ch.name = c.value("name", "y" + std::to_string(spec.channels.size()));
      ch.family = family_from(c.value("family", std::string("gaussian")));
      if (c.contains("state_index")) ch.state_index = get_as<int>(c["state_index"], "state_index");
      if (c.contains("scale")) ch.scale = get_as<double>(c["scale"], "scale");
      if (c.contains("link")) ch.link = link_from(get_as<std::string>(c["link"], "link"));
      if (c.contains("discrimination")) {
        ch.discrimination = get_as<double>(c["discrimination"], "discrimination");
      }
      if (c.contains("thresholds")) {
        ch.thresholds = get_as<std::vector<double>>(c["thresholds"], "thresholds");
      }
      if (c.contains("categories")) {
        ch.categories = get_as<int>(c["categories"], "categories");
      } else if (ch.family == Family::GradedResponse) {
        ch.categories = static_cast<int>(ch.thresholds.size()) + 1;
      }
      spec.channels.push_back(std::move(ch));
    }
  } else {
    for (int i = 0; i < spec.n_obs; ++i) {
      MeasurementChannel ch;
      ch.name = "y" + std::to_string(i);
      spec.channels.push_back(ch);
    }
  }
  if (j.contains("initial_mean")) {
    spec.initial_mean = vector_from_json(j["initial_mean"], "initial_mean");
  }
  if (j.contains("initial_cov")) {
    spec.initial_cov = matrix_from_json(j["initial_cov"], "initial_cov");
  }
  if (j.contains("time_mode")) {
    spec.time_mode = mode_from(get_as<std::string>(j["time_mode"], "time_mode"));
  }
  if (j.contains("random_walk_states")) {
    for (int s : get_as<std::vector<int>>(j["random_walk_states"], "random_walk_states")) {
      spec.random_walk_states.insert(s);
    }
  }
  return spec;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

ModelSpec load_model(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

void save_model(const ModelSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << model_to_json(spec).dump(2) << '\n';
}

}  // namespace emass
