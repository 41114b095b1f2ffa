#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

#include "emass/error.hpp"
#include "emass/model.hpp"

namespace emass {

using Json = nlohmann::ordered_json;

// Matrices travel as row-major arrays of arrays.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, std::string_view what);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, std::string_view what);

/// Throws `code` naming the first key of `object` not in `allowed`.
void reject_unknown_keys(const Json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view where, ErrorCode code);

Json model_to_json(const ModelSpec& spec);
/// Strict reader: unknown keys are rejected, matrices must be rectangular.
/// Omitted G/H/Sigma/Theta default to zeros of the declared shape.
ModelSpec model_from_json(const Json& j);

ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& spec, const std::filesystem::path& path);

/// Parse a whole file as JSON; I/O and syntax failures become Error.
Json read_json_file(const std::filesystem::path& path);

std::string_view to_string(Family family);
std::string_view to_string(Link link);
std::string_view to_string(TimeMode mode);

}  // namespace emass
