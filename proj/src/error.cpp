#include "emass/error.hpp"

namespace emass {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidModel: return "INVALID_MODEL";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::NoPrincipalLog: return "NO_PRINCIPAL_LOG";
    case ErrorCode::NotStationary: return "NOT_STATIONARY";
    case ErrorCode::EmptySchedule: return "EMPTY_SCHEDULE";
    case ErrorCode::InvalidSchedule: return "INVALID_SCHEDULE";
    case ErrorCode::NegativeRate: return "NEGATIVE_RATE";
    case ErrorCode::ScheduleModeMismatch: return "SCHEDULE_MODE_MISMATCH";
    case ErrorCode::CalibrationFailed: return "CALIBRATION_FAILED";
    case ErrorCode::InvalidScenario: return "INVALID_SCENARIO";
    case ErrorCode::SingularInnovation: return "SINGULAR_INNOVATION";
    case ErrorCode::DegenerateWeights: return "DEGENERATE_WEIGHTS";
    case ErrorCode::ParticlesTooFew: return "PARTICLES_TOO_FEW";
    case ErrorCode::NoFreeParams: return "NO_FREE_PARAMS";
    case ErrorCode::NonfiniteLikelihood: return "NONFINITE_LIKELIHOOD";
    case ErrorCode::LikelihoodModeMismatch: return "LIKELIHOOD_MODE_MISMATCH";
    case ErrorCode::InvalidTemplate: return "INVALID_TEMPLATE";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::NonMonotoneTime: return "NON_MONOTONE_TIME";
    case ErrorCode::NaInU: return "NA_IN_U";
    case ErrorCode::MissingWakeTimes: return "MISSING_WAKE_TIMES";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::UnknownFigure: return "UNKNOWN_FIGURE";
  }
  return "UNKNOWN";
}

ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::NoPrincipalLog:
    case ErrorCode::NotStationary:
    case ErrorCode::NegativeRate:
    case ErrorCode::CalibrationFailed:
    case ErrorCode::SingularInnovation:
    case ErrorCode::DegenerateWeights:
    case ErrorCode::NonfiniteLikelihood:
      return ErrorKind::Numerical;
    case ErrorCode::ParseError:
    case ErrorCode::Io:
      return ErrorKind::Io;
    default:
      return ErrorKind::Validation;
  }
}

}  // namespace emass
