#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace extremal {

enum class Errc {
  DegeneratePoint,
  NoRealAngles,
  NoJump,
  SingularControlUndefined,
  NotOnSingularLocus,
  ChartSingular,
  StepFailure,
  DriftExceeded,
  PreconditionViolated,
  IntegrationFailure,
  Unreachable,
  EnvelopeViolated,
  ParseError,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the toolkit; `code()` tells callers which
/// contract was broken.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace extremal
