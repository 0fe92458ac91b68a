#include "dbpark/scenario.h"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "dbpark/certificates.h"
#include "dbpark/errors.h"

namespace dbpark {
namespace {

namespace pt = boost::property_tree;

constexpr const char* kScenarioSchema = "dbpark-scenario/1";
constexpr const char* kSweepSchema = "dbpark-sweep/1";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_number(std::string_view text) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(fmt::format("'{}' is not a number", t));
  }
  return value;
}

int parse_int(const std::string& text) {
  const std::string t = trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(fmt::format("'{}' is not an integer", t));
  }
  return value;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) {
    out.push_back(parse_angle_expr(item));
  }
  return out;
}

std::array<double, 3> parse_triple(const std::string& key,
                                   const std::string& text) {
  const std::vector<double> v = parse_list(text);
  if (v.size() != 3) {
    throw ParseError(fmt::format("{} needs three values, got '{}'", key, text));
  }
  return {v[0], v[1], v[2]};
}

unsigned parse_outputs(const std::string& text) {
  unsigned flags = 0;
  for (const std::string& item : split(text, ',')) {
    if (item == "csv") {
      flags |= kOutputCsv;
    } else if (item == "svg") {
      flags |= kOutputSvg;
    } else if (item == "report") {
      flags |= kOutputReport;
    } else if (item != "none") {
      throw ParseError(fmt::format("unknown output '{}'", item));
    }
  }
  return flags;
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

// Applies one scenario key. Returns false for keys it does not own.
bool apply_key(Scenario& s, const std::string& key, const std::string& value) {
  if (key == "name") {
    s.name = value;
  } else if (key == "law") {
    s.law.kind = law_kind_from_string(value);
  } else if (key == "c0") {
    s.law.gains.c0 = parse_number(value);
  } else if (key == "c1") {
    s.c1_auto = value == "auto";
    if (!s.c1_auto) s.law.gains.c1 = parse_number(value);
  } else if (key == "c2") {
    s.law.gains.c2 = parse_number(value);
  } else if (key == "n") {
    s.law.gains.n = parse_int(value);
  } else if (key == "v") {
    s.law.v = parse_number(value);
    s.omega_limit.reset();
  } else if (key == "omega_limit") {
    s.omega_limit = parse_number(value);
  } else if (key == "rho_floor") {
    s.rho_floor_auto = value == "auto";
    if (!s.rho_floor_auto) s.law.rho_floor = parse_number(value);
  } else if (key == "initial.polar") {
    const auto [rho, delta, gamma] = parse_triple(key, value);
    s.initial = {rho, delta, gamma};
    s.initial_pose.reset();
  } else if (key == "initial.pose") {
    const auto [x, y, theta] = parse_triple(key, value);
    s.initial_pose = CartesianPose{x, y, theta};
  } else if (key == "step") {
    s.step = value == "auto" ? 0.0 : parse_number(value);
  } else if (key == "substeps") {
    s.substeps = value == "auto" ? 0 : parse_int(value);
  } else if (key == "cutoff") {
    s.cutoff_rho = parse_number(value);
  } else if (key == "horizon") {
    if (value == "auto") {
      s.horizon.reset();
    } else {
      s.horizon = parse_number(value);
    }
  } else if (key == "outputs") {
    s.outputs = parse_outputs(value);
  } else if (key == "note") {
    s.note = value;
  } else {
    return false;
  }
  return true;
}

// Applies the keys of one block, rejecting both initial forms together.
void apply_block(Scenario& s, const pt::ptree& block,
                 const std::vector<std::string>& extra_keys) {
  bool polar = false, pose = false;
  for (const auto& [key, child] : block) {
    if (!child.empty()) continue;  // nested section
    const std::string value = child.data();
    polar |= key == "initial.polar";
    pose |= key == "initial.pose";
    if (polar && pose) {
      throw ParseError(
          "give the initial state either as initial.polar or initial.pose, "
          "not both");
    }
    try {
      if (apply_key(s, key, value)) continue;
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("key '{}': {}", key, e.what()));
    }
    bool known = false;
    for (const std::string& k : extra_keys) {
      if (key == k || key.rfind(k, 0) == 0) known = true;
    }
    if (!known) throw ParseError(fmt::format("unknown key '{}'", key));
  }
}

pt::ptree read_ini(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(fmt::format("line {}: {}", e.line(), e.message()));
  }
  return tree;
}

void require_schema(const pt::ptree& tree, const char* expected) {
  const auto schema = tree.get_optional<std::string>(pt::ptree::path_type(
      "schema", '\0'));
  if (!schema) {
    throw ParseError(fmt::format("missing 'schema = {}'", expected));
  }
  if (*schema != expected) {
    throw ParseError(fmt::format("unsupported schema '{}' (expected {})",
                                 *schema, expected));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string title_of(const pt::ptree& tree, const std::string& fallback) {
  return tree.get<std::string>(pt::ptree::path_type("title", '\0'), fallback);
}

}  // namespace

double parse_angle_expr(const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) throw ParseError("empty value");
  double sign = 1.0;
  if (t[0] == '-' || t[0] == '+') {
    sign = t[0] == '-' ? -1.0 : 1.0;
    t = trim(t.substr(1));
  }
  const auto pi_pos = t.find("pi");
  if (pi_pos == std::string::npos) return sign * parse_number(t);
  double factor = 1.0;
  if (pi_pos > 0) {
    std::string head = trim(t.substr(0, pi_pos));
    if (head.empty() || head.back() != '*') {
      throw ParseError(fmt::format("'{}': expected k*pi/d", text));
    }
    head.pop_back();
    factor = parse_number(head);
  }
  std::string tail = trim(t.substr(pi_pos + 2));
  double divisor = 1.0;
  if (!tail.empty()) {
    if (tail[0] != '/') {
      throw ParseError(fmt::format("'{}': expected k*pi/d", text));
    }
    divisor = parse_number(tail.substr(1));
    if (divisor == 0.0) throw ParseError("division by zero");
  }
  return sign * factor * kPi / divisor;
}

void finalize(Scenario& s) {
  try {
    if (s.initial_pose) s.initial = cart_to_polar(*s.initial_pose);
    if (!(s.cutoff_rho > 0.0)) throw DomainError("cutoff must be positive");
    if (s.step < 0.0) throw DomainError("step must be positive");
    if (s.substeps < 0) throw DomainError("substeps must be positive");
    if (s.horizon && !(*s.horizon > 0.0)) {
      throw DomainError("horizon must be positive");
    }
    if (s.rho_floor_auto) s.law.rho_floor = s.cutoff_rho;
    if (s.c1_auto) {
      if (s.law.kind != LawKind::kCurbSafe) {
        throw DomainError("c1 = auto is only defined for the curbsafe law");
      }
      s.law.gains.c1 = curbsafe_c1_lower_bound(s.initial) + 1.0;
    }
    if (s.omega_limit) {
      if (s.law.kind != LawKind::kBackstep) {
        throw DomainError("omega_limit is only defined for the backstep law");
      }
      s.law.v = velocity_for_omega_limit(*s.omega_limit, s.initial,
                                         s.law.gains.c1, s.law.gains.c2);
    }
    validate(s.law, s.initial);
  } catch (const Error& e) {
    throw DomainError(fmt::format("run '{}': {}", s.name, e.what()));
  }
}

double resolved_horizon(const Scenario& s) {
  if (s.horizon) return *s.horizon;
  return 10.0 * arrival_horizon(s.law, s.initial);
}

ScenarioSet parse_scenario_text(const std::string& text) {
  const pt::ptree tree = read_ini(text);
  require_schema(tree, kScenarioSchema);
  ScenarioSet set;
  set.title = title_of(tree, "scenario");

  Scenario defaults;
  apply_block(defaults, tree, {"schema", "title"});
  for (const auto& [key, child] : tree) {
    if (child.empty()) continue;
    if (key.rfind("run", 0) != 0 || trim(key.substr(3)).empty()) {
      throw ParseError(fmt::format("unknown section [{}]", key));
    }
    Scenario s = defaults;
    s.name = trim(key.substr(3));
    apply_block(s, child, {});
    set.runs.push_back(std::move(s));
  }
  if (set.runs.empty()) set.runs.push_back(defaults);
  for (Scenario& s : set.runs) finalize(s);
  return set;
}

ScenarioSet load_scenario_file(const std::string& path) {
  return parse_scenario_text(read_file(path));
}

void apply_key_value(Scenario& scenario, const std::string& key,
                     const std::string& value) {
  bool known = false;
  try {
    known = apply_key(scenario, key, trim(value));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("key '{}': {}", key, e.what()));
  }
  if (!known) throw ParseError(fmt::format("unknown key '{}'", key));
}

void apply_override(ScenarioSet& set, const std::string& key,
                    const std::string& value) {
  for (Scenario& s : set.runs) {
    apply_key_value(s, key, value);
    finalize(s);
  }
}

std::string serialize_scenario(const Scenario& s) {
  std::string out;
  out += fmt::format("schema = {}\n", kScenarioSchema);
  out += fmt::format("name = {}\n", s.name);
  if (!s.note.empty()) out += fmt::format("note = {}\n", s.note);
  out += fmt::format("law = {}\n", to_string(s.law.kind));
  out += fmt::format("c0 = {}\nc1 = {}\nc2 = {}\nn = {}\nv = {}\n",
                     num(s.law.gains.c0), num(s.law.gains.c1),
                     num(s.law.gains.c2), s.law.gains.n, num(s.law.v));
  out += fmt::format("rho_floor = {}\n", num(s.law.rho_floor));
  out += fmt::format("initial.polar = {}, {}, {}\n", num(s.initial.rho),
                     num(s.initial.delta), num(s.initial.gamma));
  out += fmt::format("step = {}\n", s.step > 0 ? num(s.step) : "auto");
  out += fmt::format("substeps = {}\n",
                     s.substeps > 0 ? std::to_string(s.substeps) : "auto");
  out += fmt::format("cutoff = {}\n", num(s.cutoff_rho));
  out += fmt::format("horizon = {}\n", s.horizon ? num(*s.horizon) : "auto");
  std::vector<std::string> outs;
  if (s.outputs & kOutputCsv) outs.emplace_back("csv");
  if (s.outputs & kOutputSvg) outs.emplace_back("svg");
  if (s.outputs & kOutputReport) outs.emplace_back("report");
  out += fmt::format("outputs = {}\n",
                     outs.empty() ? "none" : fmt::format("{}", fmt::join(outs, ", ")));
  return out;
}

ControlLaw parse_law_spec(const std::string& spec, double default_floor) {
  const std::vector<std::string> parts = split(spec, ',');
  if (parts.empty()) throw ParseError("empty law spec");
  ControlLaw law;
  law.kind = law_kind_from_string(parts[0]);
  law.rho_floor = default_floor;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      throw ParseError(fmt::format("law spec item '{}' is not key=value",
                                   parts[i]));
    }
    const std::string key = trim(parts[i].substr(0, eq));
    const std::string value = trim(parts[i].substr(eq + 1));
    if (key == "c0") {
      law.gains.c0 = parse_number(value);
    } else if (key == "c1") {
      law.gains.c1 = parse_number(value);
    } else if (key == "c2") {
      law.gains.c2 = parse_number(value);
    } else if (key == "n") {
      law.gains.n = parse_int(value);
    } else if (key == "v") {
      law.v = parse_number(value);
    } else if (key == "rho_floor") {
      law.rho_floor = parse_number(value);
    } else {
      throw ParseError(fmt::format("unknown law spec key '{}'", key));
    }
  }
  return law;
}

std::string format_law(const ControlLaw& law) {
  return fmt::format("{},c0={},c1={},c2={},n={},v={},rho_floor={}",
                     to_string(law.kind), num(law.gains.c0),
                     num(law.gains.c1), num(law.gains.c2), law.gains.n,
                     num(law.v), num(law.rho_floor));
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kDelta0:
      return "delta0";
    case SweepAxis::kGamma0:
      return "gamma0";
    case SweepAxis::kC1:
      return "c1";
    case SweepAxis::kC2:
      return "c2";
    case SweepAxis::kV:
      return "v";
  }
  return "?";
}

std::size_t SweepSpec::point_count() const {
  if (grid.empty()) return 0;
  std::size_t n = 1;
  for (const auto& [axis, values] : grid) n *= values.size();
  return n;
}

std::vector<double> SweepSpec::point_values(std::size_t index) const {
  std::vector<double> out(grid.size());
  for (std::size_t i = grid.size(); i-- > 0;) {
    const std::size_t m = grid[i].second.size();
    out[i] = grid[i].second[index % m];
    index /= m;
  }
  return out;
}

SweepSpec parse_sweep_text(const std::string& text) {
  const pt::ptree tree = read_ini(text);
  require_schema(tree, kSweepSchema);
  SweepSpec spec;
  spec.title = title_of(tree, "sweep");
  spec.base.name = spec.title;
  apply_block(spec.base, tree, {"schema", "title", "workers", "grid."});
  for (const auto& [key, child] : tree) {
    if (!child.empty()) {
      throw ParseError(fmt::format("sweep files have no sections ([{}])", key));
    }
    if (key == "workers") {
      const int w = parse_int(child.data());
      if (w < 1) throw ParseError("workers must be >= 1");
      spec.workers = static_cast<std::size_t>(w);
    } else if (key.rfind("grid.", 0) == 0) {
      const std::string name = key.substr(5);
      SweepAxis axis;
      if (name == "delta0") {
        axis = SweepAxis::kDelta0;
      } else if (name == "gamma0") {
        axis = SweepAxis::kGamma0;
      } else if (name == "c1") {
        axis = SweepAxis::kC1;
      } else if (name == "c2") {
        axis = SweepAxis::kC2;
      } else if (name == "v") {
        axis = SweepAxis::kV;
      } else {
        throw ParseError(fmt::format("unknown sweep axis '{}'", name));
      }
      spec.grid.emplace_back(axis, parse_list(child.data()));
    }
  }
  return spec;
}

SweepSpec load_sweep_file(const std::string& path) {
  return parse_sweep_text(read_file(path));
}

}  // namespace dbpark
