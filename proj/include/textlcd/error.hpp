#pragma once

#include <stdexcept>
#include <string>

namespace textlcd {

enum class ErrorCode {
  NonPositiveDepth,
  RayParallelToPlane,
  NegativeDepth,
  OutOfRangeFactor,
  NearPiRotation,
  EmptyWindow,
  TooFewPoints,
  DegenerateSample,
  LowInlierRatio,
  DegenerateEdge,
  UnbracketedTimestamp,
  InvalidPattern,
  SingularNormalEquations,
  LengthMismatch,
  WaypointOutsideWorld,
  ConfigError,
  MalformedRecord,
  MissingInput,
};

const char* to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace textlcd
