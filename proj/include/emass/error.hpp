#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emass {

/// Machine-readable failure codes shared by every module.
enum class ErrorCode {
  // model_core
  InvalidModel,
  NonFinite,
  NoPrincipalLog,
  NotStationary,
  // simulator
  EmptySchedule,
  InvalidSchedule,
  NegativeRate,
  ScheduleModeMismatch,
  CalibrationFailed,
  InvalidScenario,
  // filtering
  SingularInnovation,
  DegenerateWeights,
  ParticlesTooFew,
  // estimation
  NoFreeParams,
  NonfiniteLikelihood,
  LikelihoodModeMismatch,
  InvalidTemplate,
  // ema_io
  ParseError,
  NonMonotoneTime,
  NaInU,
  MissingWakeTimes,
  Io,
  // cli
  UnknownFigure,
};

/// Upper-snake identifier used in reports, logs and CLI output.
std::string_view to_string(ErrorCode code) noexcept;

/// Broad category of a code; drives CLI exit statuses.
enum class ErrorKind { Validation, Numerical, Io };
ErrorKind kind_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emass
