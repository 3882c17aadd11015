#include "extremal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "extremal/error.hpp"

namespace extremal {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw Error(Errc::ParseError, where + ": " + msg);
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

double coefficient(const json& c, const std::map<std::string, double>& params,
                   const std::string& where) {
  if (c.is_number()) {
    const double v = c.get<double>();
    if (!std::isfinite(v)) fail(where, "coefficient is not finite");
    return v;
  }
  if (!c.is_string()) fail(where, "coefficient must be a number or a parameter expression");
  static const std::regex expr(
      R"(^\s*([+-])?\s*(?:([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\*\s*)?([A-Za-z_][A-Za-z0-9_]*)\s*$)");
  const std::string s = c.get<std::string>();
  std::smatch m;
  if (!std::regex_match(s, m, expr)) fail(where, "cannot read coefficient expression '" + s + "'");
  const auto it = params.find(m[3].str());
  if (it == params.end()) fail(where, "unknown parameter '" + m[3].str() + "'");
  double v = it->second;
  if (m[2].matched) v *= std::stod(m[2].str());
  if (m[1].matched && m[1].str() == "-") v = -v;
  return v;
}

PolyField read_field(const json& f, const std::map<std::string, double>& params,
                     const std::string& where) {
  if (!f.is_array() || f.size() != 3) fail(where, "a field needs exactly 3 component arrays");
  std::array<Polynomial, 3> comp;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string wi = where + "/" + std::to_string(i);
    if (!f[i].is_array()) fail(wi, "component must be an array of monomials");
    std::vector<Monomial> terms;
    for (std::size_t k = 0; k < f[i].size(); ++k) {
      const json& m = f[i][k];
      const std::string wk = wi + "/" + std::to_string(k);
      if (!m.is_object() || !m.contains("c") || !m.contains("p"))
        fail(wk, "monomial needs keys 'c' and 'p'");
      const json& p = m["p"];
      if (!p.is_array() || p.size() != 3) fail(wk + "/p", "powers must be 3 integers");
      Powers pw{};
      for (std::size_t j = 0; j < 3; ++j) {
        if (!p[j].is_number_integer() || p[j].get<long>() < 0 || p[j].get<long>() > 64)
          fail(wk + "/p", "powers must be non-negative integers");
        pw[j] = p[j].get<int>();
      }
      terms.push_back({coefficient(m["c"], params, wk + "/c"), pw});
    }
    comp[i] = Polynomial(std::move(terms));
  }
  return PolyField(std::move(comp));
}

json write_field(const PolyField& f) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) {
    json comp = json::array();
    for (const Monomial& m : f[i].terms())
      comp.push_back({{"c", m.coeff}, {"p", {m.powers[0], m.powers[1], m.powers[2]}}});
    out.push_back(comp);
  }
  return out;
}

}  // namespace

ControlSystem SystemSpec::system(BracketSign sign) const {
  return ControlSystem(fields[0], fields[1], fields[2], sign);
}

SystemSpec parse_system_spec(std::string_view text, const std::map<std::string, double>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    fail("line " + std::to_string(line) + ", column " + std::to_string(col), e.what());
  }
  if (!doc.is_object()) fail("/", "top level must be an object");
  SystemSpec spec;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) fail("/name", "must be a string");
    spec.name = doc["name"].get<std::string>();
  }
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) fail("/params", "must be an object of numbers");
    for (const auto& [k, v] : doc["params"].items()) {
      if (!v.is_number()) fail("/params/" + k, "parameter value must be a number");
      spec.params[k] = v.get<double>();
    }
  }
  for (const auto& [k, v] : overrides) {
    if (!spec.params.contains(k)) fail("--param " + k, "the spec declares no such parameter");
    spec.params[k] = v;
  }
  static constexpr const char* keys[3] = {"f0", "f1", "f2"};
  for (int i = 0; i < 3; ++i) {
    if (!doc.contains(keys[i])) fail("/", std::string("missing field '") + keys[i] + "'");
    spec.fields[i] = read_field(doc[keys[i]], spec.params, std::string("/") + keys[i]);
  }
  return spec;
}

SystemSpec load_system_spec(const std::filesystem::path& path,
                            const std::map<std::string, double>& overrides) {
  std::ifstream in(path);
  if (!in) fail(path.string(), "cannot open spec file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system_spec(ss.str(), overrides);
}

std::string serialize_system_spec(const SystemSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["params"] = json::object();
  for (const auto& [k, v] : spec.params) doc["params"][k] = v;
  doc["f0"] = write_field(spec.fields[0]);
  doc["f1"] = write_field(spec.fields[1]);
  doc["f2"] = write_field(spec.fields[2]);
  return doc.dump(2) + "\n";
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_trajectory_csv(std::ostream& os, const ExtremalTrajectory& traj) {
  os << "t,x1,x2,x3,rho,theta,h3,u1,u2,event\n";
  for (const TrajectorySample& s : traj.samples) {
    const double v[9] = {s.t,           s.state.x[0],  s.state.x[1], s.state.x[2], s.state.rho,
                         s.state.theta, s.state.h3,    s.u.u1,       s.u.u2};
    for (double d : v) os << format_double(d) << ',';
    os << (s.event ? 1 : 0) << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "t,x1,x2,x3,rho,theta,h3,u1,u2,event")
    fail("line 1", "unexpected trajectory header");
  std::vector<TrajectoryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v[10];
    std::size_t pos = 0;
    for (int k = 0; k < 10; ++k) {
      const std::size_t end = k < 9 ? line.find(',', pos) : line.size();
      if (end == std::string::npos) fail("line " + std::to_string(lineno), "too few columns");
      const auto r = std::from_chars(line.data() + pos, line.data() + end, v[k]);
      if (r.ec != std::errc() || r.ptr != line.data() + end)
        fail("line " + std::to_string(lineno) + ", column " + std::to_string(pos + 1), "bad number");
      pos = end + 1;
    }
    rows.push_back({v[0], {v[4], v[5], v[6], Vec3(v[1], v[2], v[3])}, {v[7], v[8]}, v[9] != 0.0});
  }
  return rows;
}

}  // namespace extremal
