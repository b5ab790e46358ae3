#include "vocstiff/types.hpp"

namespace vocstiff {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::numeric_blowup: return "numeric-blowup";
    case ErrorCode::oscillator_collapse: return "oscillator-collapse";
    case ErrorCode::undefined_angle: return "undefined-angle";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::infeasible_operating_point: return "infeasible-operating-point";
    case ErrorCode::assembly: return "assembly";
    case ErrorCode::solver: return "solver";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace vocstiff
