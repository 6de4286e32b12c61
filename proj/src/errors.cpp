#include "censet/errors.hpp"

namespace censet {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Mode: return "mode";
    case ErrorCode::Coverage: return "coverage";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Structural: return "structural";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::Io: return "io";
    case ErrorCode::Usage: return "usage";
  }
  return "unknown";
}

}  // namespace censet
