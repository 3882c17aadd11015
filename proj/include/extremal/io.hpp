#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "extremal/control_system.hpp"
#include "extremal/extremal_flow.hpp"

namespace extremal {

/// Parsed system file. `fields` hold numeric coefficients after parameter
/// substitution.
struct SystemSpec {
  std::string name;
  std::map<std::string, double> params;
  std::array<PolyField, 3> fields;

  ControlSystem system(BracketSign sign = BracketSign::Standard) const;
};

/// Parses the JSON system format:
///
///   {"name": "...", "params": {"alpha": 2},
///    "f0": [[{"c": 1, "p": [1,0,0]}, ...], [...], [...]], "f1": ..., "f2": ...}
///
/// A coefficient is a number or a string "[sign][number*]name" naming a
/// parameter. `overrides` replace declared parameter values. Syntax errors
/// carry line and column; content errors carry the JSON path. Throws
/// Error(ParseError).
SystemSpec parse_system_spec(std::string_view text,
                             const std::map<std::string, double>& overrides = {});
SystemSpec load_system_spec(const std::filesystem::path& path,
                            const std::map<std::string, double>& overrides = {});

/// JSON with numeric coefficients only; parses back to identical fields.
std::string serialize_system_spec(const SystemSpec& spec);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Header `t,x1,x2,x3,rho,theta,h3,u1,u2,event`, one row per sample.
void write_trajectory_csv(std::ostream& os, const ExtremalTrajectory& traj);

struct TrajectoryRow {
  double t;
  BlowupState state;
  ControlValue u;
  bool event;
};
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& is);

}  // namespace extremal
