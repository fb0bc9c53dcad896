#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace transonic {

enum class ErrorKind {
  InvalidGasModel,
  SpeedExceedsLimit,
  NonpositiveDensity,
  UnboundedForIsothermal,
  NotSupersonic,
  NonUnitNormal,
  DegenerateFront,
  NewtonDiverged,
  SonicDegeneracy,
  ExitConditionInfeasible,
  StationOutsideRegion,
  InvalidArgument,
  ConfigParse,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGasModel: return "InvalidGasModel";
    case ErrorKind::SpeedExceedsLimit: return "SpeedExceedsLimit";
    case ErrorKind::NonpositiveDensity: return "NonpositiveDensity";
    case ErrorKind::UnboundedForIsothermal: return "UnboundedForIsothermal";
    case ErrorKind::NotSupersonic: return "NotSupersonic";
    case ErrorKind::NonUnitNormal: return "NonUnitNormal";
    case ErrorKind::DegenerateFront: return "DegenerateFront";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::SonicDegeneracy: return "SonicDegeneracy";
    case ErrorKind::ExitConditionInfeasible: return "ExitConditionInfeasible";
    case ErrorKind::StationOutsideRegion: return "StationOutsideRegion";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigParse: return "ConfigParse";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace transonic
