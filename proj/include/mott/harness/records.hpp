#pragma once

// Persistence of results: records.csv (fixed column order), records.json
// (the same records plus their config snapshots) and manifest.json.

#include "mott/harness/config.hpp"
#include "mott/probability.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mott::harness {

inline constexpr const char* kCodeVersion = "1.0.0";
inline constexpr const char* kCsvHeader = "variable,value,estimate,std_error,n_inner,n_outer,seed,runtime_ms";

struct Manifest {
  std::string command;
  std::string code_version = kCodeVersion;
  std::string config_snapshot;
  std::uint64_t seed = 0;
  std::string started_utc;
  std::string finished_utc;
  std::int64_t wall_ms = 0;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> results;  ///< command-specific summary values

  bool operator==(const Manifest&) const = default;
};

struct ResultSet {
  Manifest manifest;
  std::vector<RunRecord> records;
};

namespace detail {

using nlohmann::json;

// Doubles travel through JSON as 17-digit strings so that text and value
// round-trip exactly.
inline json physical_to_json(const PhysicalConfig& c) {
  return json{{"epsilon", format_number(c.epsilon)},
              {"mass_ratio", format_number(c.mass_ratio)},
              {"a1_over_gamma", format_number(c.a1_over_gamma)},
              {"a2_over_a1", format_number(c.a2_over_a1)},
              {"chi", format_number(c.chi)},
              {"chi_bar", format_number(c.chi_bar)},
              {"t_over_tau2", format_number(c.t_over_tau2)},
              {"lambda0", format_number(c.lambda0)},
              {"potential.kind", "gaussian"},
              {"potential.amplitude", format_number(c.potential.amplitude)},
              {"potential.width", format_number(c.potential.width)}};
}

inline double number_from(const json& j, const char* key) {
  const std::string s = j.at(key).get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  const auto v = parse_real(s);
  if (!v) throw Error(std::string("records: malformed number for ") + key + ": " + s);
  return *v;
}

inline PhysicalConfig physical_from_json(const json& j) {
  PhysicalConfig c;
  c.epsilon = number_from(j, "epsilon");
  c.mass_ratio = number_from(j, "mass_ratio");
  c.a1_over_gamma = number_from(j, "a1_over_gamma");
  c.a2_over_a1 = number_from(j, "a2_over_a1");
  c.chi = number_from(j, "chi");
  c.chi_bar = number_from(j, "chi_bar");
  c.t_over_tau2 = number_from(j, "t_over_tau2");
  c.lambda0 = number_from(j, "lambda0");
  c.potential.amplitude = number_from(j, "potential.amplitude");
  c.potential.width = number_from(j, "potential.width");
  return c;
}

inline json record_to_json(const RunRecord& r) {
  return json{{"variable", r.variable},
              {"value", format_number(r.value)},
              {"estimate", format_number(r.estimate)},
              {"std_error", format_number(r.std_error)},
              {"n_inner", r.n_inner},
              {"n_outer", r.n_outer},
              {"seed", r.seed},
              {"runtime_ms", r.runtime_ms},
              {"ok", r.ok},
              {"failure", r.failure},
              {"physical", physical_to_json(r.cfg)},
              {"config", r.config_snapshot}};
}

inline RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.variable = j.at("variable").get<std::string>();
  r.value = number_from(j, "value");
  r.estimate = number_from(j, "estimate");
  r.std_error = number_from(j, "std_error");
  r.n_inner = j.at("n_inner").get<std::uint64_t>();
  r.n_outer = j.at("n_outer").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.runtime_ms = j.at("runtime_ms").get<std::int64_t>();
  r.ok = j.at("ok").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.cfg = physical_from_json(j.at("physical"));
  r.config_snapshot = j.at("config").get<std::string>();
  return r;
}

inline json manifest_to_json(const Manifest& m) {
  return json{{"command", m.command},   {"code_version", m.code_version}, {"config", m.config_snapshot},
              {"seed", m.seed},         {"started_utc", m.started_utc},   {"finished_utc", m.finished_utc},
              {"wall_ms", m.wall_ms},   {"warnings", m.warnings},         {"results", m.results},
              {"files", {"records.csv", "records.json"}}};
}

inline Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  m.config_snapshot = j.at("config").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.started_utc = j.at("started_utc").get<std::string>();
  m.finished_utc = j.at("finished_utc").get<std::string>();
  m.wall_ms = j.at("wall_ms").get<std::int64_t>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  m.results = j.at("results").get<std::map<std::string, std::string>>();
  return m;
}

// CSV fields are quoted only when they contain a separator or quote.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + p.string());
  f << text;
  f.close();
  if (!f) throw Error("write failed: " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open for reading: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace detail

inline std::string records_csv(const std::vector<RunRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    out += detail::csv_field(r.variable) + "," + format_number(r.value) + "," + format_number(r.estimate) + "," +
           format_number(r.std_error) + "," + format_unsigned(r.n_inner) + "," + format_unsigned(r.n_outer) + "," +
           format_unsigned(r.seed) + "," + format_integer(r.runtime_ms) + "\n";
  }
  return out;
}

inline std::string records_json(const std::vector<RunRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(detail::record_to_json(r));
  return arr.dump(2) + "\n";
}

inline std::string manifest_json(const Manifest& m) { return detail::manifest_to_json(m).dump(2) + "\n"; }

/// Writes manifest.json, records.csv and records.json into `dir` (created if
/// missing).
inline void write_records(const ResultSet& rs, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  detail::write_file(dir / "records.csv", records_csv(rs.records));
  detail::write_file(dir / "records.json", records_json(rs.records));
  detail::write_file(dir / "manifest.json", manifest_json(rs.manifest));
}

/// Reads back what write_records produced. The JSON mirror carries the full
/// records; the CSV is checked against it.
inline ResultSet read_records(const std::filesystem::path& dir) {
  ResultSet rs;
  try {
    rs.manifest = detail::manifest_from_json(nlohmann::json::parse(detail::read_file(dir / "manifest.json")));
    for (const auto& j : nlohmann::json::parse(detail::read_file(dir / "records.json")))
      rs.records.push_back(detail::record_from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed result files in " + dir.string() + ": " + e.what());
  }
  if (detail::read_file(dir / "records.csv") != records_csv(rs.records))
    throw Error("records.csv and records.json disagree in " + dir.string());
  return rs;
}

// ---------------------------------------------------------------------------
// Plot data

struct PlotTable {
  std::string name;                      ///< "loglog" or "chi"
  std::string x_label, y_label;
  std::vector<std::pair<double, double>> rows;
  std::optional<LogLogFit> fit;
  std::vector<std::string> warnings;

  std::string to_csv() const {
    std::string out;
    if (fit)
      out += "# fit: slope=" + format_number(fit->slope) + " intercept=" + format_number(fit->intercept) +
             " residual=" + format_number(fit->residual) + " points=" + format_unsigned(fit->points) + "\n";
    for (const auto& w : warnings) out += "# warning: " + w + "\n";
    out += x_label + "," + y_label + "\n";
    for (const auto& [x, y] : rows) out += format_number(x) + "," + format_number(y) + "\n";
    return out;
  }
};

/// One table per scanned variable present in the records: (log eps, log
/// estimate) for epsilon records and (chi, estimate) for chi records, each
/// annotated with the log-log slope when a fit is possible.
inline std::vector<PlotTable> emit_plot_data(const ResultSet& rs) {
  if (rs.records.empty()) throw DomainError("emit_plot_data: no records");
  std::vector<PlotTable> out;
  for (const char* var : {"epsilon", "chi"}) {
    std::vector<RunRecord> sel;
    for (const auto& r : rs.records)
      if (r.variable == var && r.ok) sel.push_back(r);
    if (sel.empty()) continue;
    PlotTable t;
    const bool loglog = std::string(var) == "epsilon";
    t.name = loglog ? "loglog" : "chi";
    t.x_label = loglog ? "log_epsilon" : "chi";
    t.y_label = loglog ? "log_estimate" : "estimate";
    bool nonpositive = false;
    for (const auto& r : sel) {
      if (!(r.estimate > 0.0) || (loglog && !(r.value > 0.0))) {
        nonpositive = true;
        if (loglog) continue;
      }
      t.rows.emplace_back(loglog ? std::log(r.value) : r.value, loglog ? std::log(r.estimate) : r.estimate);
    }
    if (nonpositive) {
      t.warnings.push_back("nonpositive estimates present; no slope annotation");
    } else {
      try {
        t.fit = fit_loglog_slope(sel);
      } catch (const DomainError& e) {
        t.warnings.push_back(std::string("no slope annotation: ") + e.what());
      }
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) {
    PlotTable t;
    t.name = "records";
    t.x_label = "value";
    t.y_label = "estimate";
    for (const auto& r : rs.records) t.rows.emplace_back(r.value, r.estimate);
    t.warnings.push_back("no epsilon or chi records; no slope annotation");
    out.push_back(std::move(t));
  }
  return out;
}

inline void write_plot_data(const std::vector<PlotTable>& tables, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& t : tables) detail::write_file(dir / ("plot_" + t.name + ".csv"), t.to_csv());
}

} // namespace mott::harness
