#pragma once

// Flat key = value experiment documents with dotted sections, e.g.
//
//   epsilon = 0.1
//   potential.width = 1.0
//   qmc.points = 65536
//   point.x = 0.1, -0.2, 0.4
//   scan.grid = 0.3, 0.2, 0.15, 0.1
//
// Every key has a fixed type; unknown keys, duplicates and type mismatches
// are errors that name the key.

#include "mott/core.hpp"
#include "mott/model.hpp"
#include "mott/oscillatory.hpp"
#include "mott/probability.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mott::harness {

/// Shortest text that reads back to the same double: 17 significant digits,
/// never affected by the C locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string format_integer(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_unsigned(std::uint64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {
inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

// Decimal number, or an optional multiple / fraction of pi ("pi/6", "2*pi/3").
inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec == std::errc() && res.ptr == e && std::isfinite(v)) return v;
  static const std::regex pi_form(R"(^([0-9]*\.?[0-9]+)?\s*\*?\s*pi\s*(/\s*([0-9]*\.?[0-9]+))?$)");
  std::smatch m;
  if (std::regex_match(s, m, pi_form)) {
    double num = 1.0, den = 1.0;
    if (m[1].matched) {
      if (!std::regex_match(s, std::regex(R"(^[0-9]*\.?[0-9]+\s*\*\s*pi.*$)"))) return std::nullopt;
      num = std::stod(m[1].str());
    }
    if (m[3].matched) den = std::stod(m[3].str());
    if (den == 0.0) return std::nullopt;
    return num * pi / den;
  }
  return std::nullopt;
}

inline std::optional<std::uint64_t> parse_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec == std::errc() && res.ptr == e) return v;
  return std::nullopt;
}

inline std::optional<bool> parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}
} // namespace detail

/// Everything a command needs: the physical inputs plus quadrature, scan and
/// output settings.
struct ExperimentConfig {
  PhysicalConfig physical;
  QuadraturePlan plan;
  AmplitudeEstimator estimator = AmplitudeEstimator::reduced;
  std::optional<double> theta_bar;
  double theta_bar_exponent = 0.5;
  Kinematics point{Vec3(0.1, -0.2, 0.4), Vec3(0.3, 0.2, -0.1), Vec3(-0.2, 0.1, 0.3)};
  double eta1 = 0.3;
  double eta2 = -0.1;
  ScanSpec scan;
  bool scan_grid_set = false;
  int bounds_starts = 64;
  std::string output_dir = "results";
  bool record_runtime = false;
  std::vector<std::string> warnings;

  /// Aperture of the cap at the configured epsilon.
  SphereDecomposition decomposition(double epsilon) const {
    SphereDecomposition d = theta_bar ? SphereDecomposition{*theta_bar}
                                      : SphereDecomposition::from_exponent(epsilon, theta_bar_exponent);
    d.validate();
    return d;
  }

  /// Scan specification with the point, plan and seed filled in; an unset
  /// grid defaults to the configured epsilon or chi.
  ScanSpec scan_spec(std::optional<ScanVariable> force = std::nullopt) const {
    ScanSpec s = scan;
    if (force) s.variable = *force;
    s.inner_plan = plan;
    s.estimator = estimator;
    s.point = point;
    if (!scan_grid_set || (force && *force != scan.variable))
      s.grid = {s.variable == ScanVariable::epsilon ? physical.epsilon : physical.chi};
    return s;
  }
};

namespace detail {
enum class KeyType { real, unsigned_int, boolean, word, vector3, real_list };

struct KeySpec {
  KeyType type;
  bool required;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> apply;
  std::function<std::optional<std::string>(const ExperimentConfig&)> print;  // nullopt: omit (unset)
};

inline Vec3 parse_vec3(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) throw ConfigError("expected three comma-separated numbers", key);
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const auto x = parse_real(parts[static_cast<std::size_t>(i)]);
    if (!x) throw ConfigError("expected a number, got '" + parts[static_cast<std::size_t>(i)] + "'", key);
    out[i] = *x;
  }
  return out;
}

inline double need_real(const std::string& key, const std::string& v) {
  const auto x = parse_real(v);
  if (!x) throw ConfigError("expected a number, got '" + v + "'", key);
  return *x;
}

inline std::uint64_t need_unsigned(const std::string& key, const std::string& v) {
  const auto x = parse_unsigned(v);
  if (!x) throw ConfigError("expected a nonnegative integer, got '" + v + "'", key);
  return *x;
}

inline int need_int(const std::string& key, const std::string& v) {
  const auto x = need_unsigned(key, v);
  if (x > 1000000000ULL) throw ConfigError("value too large", key);
  return static_cast<int>(x);
}

inline bool need_bool(const std::string& key, const std::string& v) {
  const auto x = parse_bool(v);
  if (!x) throw ConfigError("expected true or false, got '" + v + "'", key);
  return *x;
}

inline std::string print_vec3(const Vec3& v) {
  return format_number(v.x()) + ", " + format_number(v.y()) + ", " + format_number(v.z());
}

template <class E>
E need_word(const std::string& key, const std::string& v, std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError("unknown value '" + v + "' (expected one of: " + names + ")", key);
}

inline const std::map<std::string, KeySpec>& key_table() {
  using C = ExperimentConfig;
  using S = std::string;
  auto real_key = [](double PhysicalConfig::*field, bool required) {
    return KeySpec{KeyType::real, required,
                   [field](C& c, const S& k, const S& v) { c.physical.*field = need_real(k, v); },
                   [field](const C& c) -> std::optional<S> { return format_number(c.physical.*field); }};
  };
  static const std::map<std::string, KeySpec> table = {
      {"epsilon", real_key(&PhysicalConfig::epsilon, true)},
      {"a1_over_gamma", real_key(&PhysicalConfig::a1_over_gamma, true)},
      {"a2_over_a1", real_key(&PhysicalConfig::a2_over_a1, true)},
      {"t_over_tau2", real_key(&PhysicalConfig::t_over_tau2, true)},
      {"lambda0", real_key(&PhysicalConfig::lambda0, true)},
      {"mass_ratio", real_key(&PhysicalConfig::mass_ratio, false)},
      {"chi", real_key(&PhysicalConfig::chi, false)},
      {"chi_bar", real_key(&PhysicalConfig::chi_bar, false)},
      {"seed",
       {KeyType::unsigned_int, false, [](C& c, const S& k, const S& v) { c.plan.seed = need_unsigned(k, v); },
        [](const C& c) -> std::optional<S> { return format_unsigned(c.plan.seed); }}},
      {"potential.kind",
       {KeyType::word, false,
        [](C& c, const S& k, const S& v) {
          c.physical.potential.kind = need_word<PotentialKind>(k, v, {{"gaussian", PotentialKind::gaussian}});
        },
        [](const C&) -> std::optional<S> { return S("gaussian"); }}},
      {"potential.amplitude",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.physical.potential.amplitude = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.physical.potential.amplitude); }}},
      {"potential.width",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.physical.potential.width = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.physical.potential.width); }}},
      {"qmc.points",
       {KeyType::unsigned_int, false, [](C& c, const S& k, const S& v) { c.plan.point_count = need_unsigned(k, v); },
        [](const C& c) -> std::optional<S> { return format_unsigned(c.plan.point_count); }}},
      {"qmc.replicates",
       {KeyType::unsigned_int, false, [](C& c, const S& k, const S& v) { c.plan.replicates = need_int(k, v); },
        [](const C& c) -> std::optional<S> { return format_integer(c.plan.replicates); }}},
      {"qmc.sequence",
       {KeyType::word, false,
        [](C& c, const S& k, const S& v) {
          c.plan.sequence_kind = need_word<SequenceKind>(
              k, v, {{"sobol", SequenceKind::low_discrepancy}, {"pseudo-random", SequenceKind::pseudo_random}});
        },
        [](const C& c) -> std::optional<S> {
          return S(c.plan.sequence_kind == SequenceKind::low_discrepancy ? "sobol" : "pseudo-random");
        }}},
      {"qmc.truncation_radius",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.plan.truncation_radius = need_real(k, v); },
        [](const C& c) -> std::optional<S> {
          if (!c.plan.truncation_radius) return std::nullopt;
          return format_number(*c.plan.truncation_radius);
        }}},
      {"qmc.estimator",
       {KeyType::word, false,
        [](C& c, const S& k, const S& v) {
          c.estimator = need_word<AmplitudeEstimator>(
              k, v, {{"direct", AmplitudeEstimator::direct}, {"reduced", AmplitudeEstimator::reduced}});
        },
        [](const C& c) -> std::optional<S> { return S(to_string(c.estimator)); }}},
      {"qmc.theta_bar",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.theta_bar = need_real(k, v); },
        [](const C& c) -> std::optional<S> {
          if (!c.theta_bar) return std::nullopt;
          return format_number(*c.theta_bar);
        }}},
      {"qmc.theta_bar_exponent",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.theta_bar_exponent = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.theta_bar_exponent); }}},
      {"point.x",
       {KeyType::vector3, false, [](C& c, const S& k, const S& v) { c.point.x = parse_vec3(k, v); },
        [](const C& c) -> std::optional<S> { return print_vec3(c.point.x); }}},
      {"point.y1",
       {KeyType::vector3, false, [](C& c, const S& k, const S& v) { c.point.y1 = parse_vec3(k, v); },
        [](const C& c) -> std::optional<S> { return print_vec3(c.point.y1); }}},
      {"point.y2",
       {KeyType::vector3, false, [](C& c, const S& k, const S& v) { c.point.y2 = parse_vec3(k, v); },
        [](const C& c) -> std::optional<S> { return print_vec3(c.point.y2); }}},
      {"point.eta1",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.eta1 = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.eta1); }}},
      {"point.eta2",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.eta2 = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.eta2); }}},
      {"scan.variable",
       {KeyType::word, false,
        [](C& c, const S& k, const S& v) {
          c.scan.variable =
              need_word<ScanVariable>(k, v, {{"epsilon", ScanVariable::epsilon}, {"chi", ScanVariable::chi}});
        },
        [](const C& c) -> std::optional<S> { return S(to_string(c.scan.variable)); }}},
      {"scan.grid",
       {KeyType::real_list, false,
        [](C& c, const S& k, const S& v) {
          c.scan.grid.clear();
          for (const auto& part : split_list(v)) c.scan.grid.push_back(need_real(k, part));
          c.scan_grid_set = true;
        },
        [](const C& c) -> std::optional<S> {
          if (!c.scan_grid_set) return std::nullopt;
          S out;
          for (double g : c.scan.grid) out += (out.empty() ? "" : ", ") + format_number(g);
          return out;
        }}},
      {"scan.observable",
       {KeyType::word, false,
        [](C& c, const S& k, const S& v) {
          c.scan.observable = need_word<Observable>(k, v,
                                                    {{"probability", Observable::probability},
                                                     {"leading", Observable::leading},
                                                     {"pointwise", Observable::pointwise},
                                                     {"pointwise_12", Observable::pointwise_12},
                                                     {"pointwise_21", Observable::pointwise_21}});
        },
        [](const C& c) -> std::optional<S> { return S(to_string(c.scan.observable)); }}},
      {"scan.outer_samples",
       {KeyType::unsigned_int, false, [](C& c, const S& k, const S& v) { c.scan.outer_samples = need_int(k, v); },
        [](const C& c) -> std::optional<S> { return format_integer(c.scan.outer_samples); }}},
      {"scan.hold_groups",
       {KeyType::boolean, false, [](C& c, const S& k, const S& v) { c.scan.hold_groups = need_bool(k, v); },
        [](const C& c) -> std::optional<S> { return S(c.scan.hold_groups ? "true" : "false"); }}},
      {"scan.x_radius",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.scan.domain.x_radius = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.scan.domain.x_radius); }}},
      {"scan.y_max",
       {KeyType::real, false, [](C& c, const S& k, const S& v) { c.scan.domain.y_max = need_real(k, v); },
        [](const C& c) -> std::optional<S> { return format_number(c.scan.domain.y_max); }}},
      {"scan.leading_nodes",
       {KeyType::unsigned_int, false, [](C& c, const S& k, const S& v) { c.scan.leading_nodes = need_int(k, v); },
        [](const C& c) -> std::optional<S> { return format_integer(c.scan.leading_nodes); }}},
      {"bounds.starts",
       {KeyType::unsigned_int, false, [](C& c, const S& k, const S& v) { c.bounds_starts = need_int(k, v); },
        [](const C& c) -> std::optional<S> { return format_integer(c.bounds_starts); }}},
      {"output.dir",
       {KeyType::word, false, [](C& c, const S&, const S& v) { c.output_dir = v; },
        [](const C& c) -> std::optional<S> { return c.output_dir; }}},
      {"output.record_runtime",
       {KeyType::boolean, false, [](C& c, const S& k, const S& v) { c.record_runtime = need_bool(k, v); },
        [](const C& c) -> std::optional<S> { return S(c.record_runtime ? "true" : "false"); }}},
  };
  return table;
}
} // namespace detail

/// Checks that span several keys, reported against the most specific key.
inline void validate(ExperimentConfig& c) {
  c.physical.validate();
  c.plan.validate();
  if (c.theta_bar && !(*c.theta_bar > 0.0 && *c.theta_bar < 0.5 * pi))
    throw ConfigError("must lie in (0, pi/2)", "qmc.theta_bar");
  if (!(c.theta_bar_exponent > 0.0 && c.theta_bar_exponent < 1.0))
    throw ConfigError("must lie in (0, 1)", "qmc.theta_bar_exponent");
  if (c.bounds_starts < 1) throw ConfigError("must be at least 1", "bounds.starts");
  if (c.scan.outer_samples < 1) throw ConfigError("must be at least 1", "scan.outer_samples");
  if (c.scan.leading_nodes < 2) throw ConfigError("must be at least 2", "scan.leading_nodes");
  c.scan.domain.validate();
  if (c.scan_grid_set) {
    ScanSpec s = c.scan;
    s.inner_plan = c.plan;
    s.validate();
    for (double v : s.grid) {
      if (s.variable == ScanVariable::epsilon && !(v > 0.0)) throw ConfigError("epsilon values must be > 0", "scan.grid");
      if (s.variable == ScanVariable::chi && !(v >= 0.0 && v <= pi))
        throw ConfigError("chi values must lie in [0, pi]", "scan.grid");
    }
  }
  if (c.output_dir.empty()) throw ConfigError("must not be empty", "output.dir");
  // groups must be constructible; regime warnings are collected, not fatal
  c.warnings.clear();
  build_groups(c.physical, &c.warnings).validate();
}

/// Parses and validates a document.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'", "<document>");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    const auto& table = detail::key_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key", key.empty() ? "<empty key>" : key);
    if (!seen.insert(key).second) throw ConfigError("duplicate key", key);
    if (value.empty()) throw ConfigError("missing value", key);
    it->second.apply(c, key, value);
  }
  for (const auto& [key, spec] : detail::key_table())
    if (spec.required && !seen.count(key)) throw ConfigError("missing required key", key);
  validate(c);
  return c;
}

/// Canonical document listing every set key in table order; parse_config of
/// the result gives back the same configuration.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [key, spec] : detail::key_table()) {
    const auto v = spec.print(c);
    if (v) out += key + " = " + *v + "\n";
  }
  return out;
}

/// Canonical text of `base` with a different physical configuration, as
/// embedded in each record of a scan.
inline std::string snapshot_with(const ExperimentConfig& base, const PhysicalConfig& physical) {
  ExperimentConfig c = base;
  c.physical = physical;
  return canonical_text(c);
}

} // namespace mott::harness
