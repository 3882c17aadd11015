#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "extremal/control_system.hpp"

namespace extremal {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
  /// 0 means no limit.
  double time_limit = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 42;
  /// Fault injection: build every suite system with this bracket sign.
  BracketSign sign = BracketSign::Standard;
  unsigned threads = 0;
  /// Also run the piecewise-constant search family in the direct search.
  bool wide = false;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, std::string>> environment;

  bool passed() const;
  std::string to_text() const;
  std::string to_json() const;
};

/// The full acceptance suite on the built-in example systems.
VerificationReport run_builtin_suite(const VerifyOptions& opt = {});

/// Checks that apply to a user system around `point`: bracket and Poisson
/// oracles, classification, and the case-specific flow checks.
VerificationReport run_spec_suite(const ControlSystem& sys, const Vec3& point,
                                  const VerifyOptions& opt = {});

}  // namespace extremal
