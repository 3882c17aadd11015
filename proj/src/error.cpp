#include "extremal/error.hpp"

namespace extremal {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DegeneratePoint: return "DegeneratePoint";
    case Errc::NoRealAngles: return "NoRealAngles";
    case Errc::NoJump: return "NoJump";
    case Errc::SingularControlUndefined: return "SingularControlUndefined";
    case Errc::NotOnSingularLocus: return "NotOnSingularLocus";
    case Errc::ChartSingular: return "ChartSingular";
    case Errc::StepFailure: return "StepFailure";
    case Errc::DriftExceeded: return "DriftExceeded";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::IntegrationFailure: return "IntegrationFailure";
    case Errc::Unreachable: return "Unreachable";
    case Errc::EnvelopeViolated: return "EnvelopeViolated";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace extremal
