#pragma once

// The seven experiments behind the CLI. Each returns its records, plot
// tables, human-readable report lines and the process exit status.

#include "mott/harness/config.hpp"
#include "mott/harness/records.hpp"
#include "mott/harness/verification.hpp"
#include "mott/oscillatory.hpp"
#include "mott/phase.hpp"
#include "mott/probability.hpp"

#include <chrono>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

namespace mott::harness {

enum class Command { verify, critical_point, bounds, stationary_check, scan_epsilon, scan_angle, probability };

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInvariant = 4;

inline const char* to_string(Command c) {
  switch (c) {
    case Command::verify: return "verify";
    case Command::critical_point: return "critical-point";
    case Command::bounds: return "bounds";
    case Command::stationary_check: return "stationary-check";
    case Command::scan_epsilon: return "scan-epsilon";
    case Command::scan_angle: return "scan-angle";
    case Command::probability: return "probability";
  }
  return "?";
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (Command c : {Command::verify, Command::critical_point, Command::bounds, Command::stationary_check,
                    Command::scan_epsilon, Command::scan_angle, Command::probability})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct CommandOutcome {
  ResultSet results;
  std::vector<PlotTable> plots;
  std::vector<std::string> report;
  int exit_code = kExitOk;
};

namespace detail {

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RunRecord named_record(const ExperimentConfig& cfg, std::string variable, double value, double estimate,
                              double std_error = 0.0) {
  RunRecord r;
  r.cfg = cfg.physical;
  r.variable = std::move(variable);
  r.value = value;
  r.estimate = estimate;
  r.std_error = std_error;
  r.seed = cfg.plan.seed;
  return r;
}

inline std::string vec_text(const Vec3& v) {
  return "(" + format_number(v.x()) + ", " + format_number(v.y()) + ", " + format_number(v.z()) + ")";
}

inline ChartParams chart_params(const ExperimentConfig& cfg, const DimensionlessGroups& g) {
  return ChartParams{g, cfg.point, cfg.eta1, cfg.eta2, 0.5 * pi - 1e-9};
}

inline void run_verify(const ExperimentConfig& cfg, CommandOutcome& out) {
  const auto checks = invariant_suite(cfg.physical, cfg.plan.seed, cfg.bounds_starts);
  int failed = 0;
  for (const auto& c : checks) {
    RunRecord r = named_record(cfg, c.name, c.tolerance, c.measured);
    r.ok = c.passed;
    if (!c.passed) r.failure = c.detail.empty() ? "tolerance exceeded" : c.detail;
    out.results.records.push_back(r);
    out.report.push_back(std::string(c.passed ? "PASS " : "FAIL ") + c.name + "  measured=" +
                         format_number(c.measured) + "  tolerance=" + format_number(c.tolerance) +
                         (c.detail.empty() ? "" : "  (" + c.detail + ")"));
    failed += !c.passed;
  }
  out.results.manifest.results["checks"] = format_integer(static_cast<std::int64_t>(checks.size()));
  out.results.manifest.results["failed"] = format_integer(failed);
  out.report.push_back(std::to_string(checks.size() - static_cast<std::size_t>(failed)) + "/" +
                       std::to_string(checks.size()) + " checks passed");
  if (failed) out.exit_code = kExitInvariant;
}

inline void run_critical_point(const ExperimentConfig& cfg, const DimensionlessGroups& g, CommandOutcome& out) {
  const ChartParams prm = chart_params(cfg, g);
  const CriticalPoint cp = critical_point_closed(prm);
  ChartPoint start = cp.q0;
  start.mu = 0.05;
  start.nu = -0.05;
  start.alpha += 0.05;
  start.eta3 -= 0.1;
  start.xi += Vec3(0.1, -0.1, 0.1);
  const NewtonResult nr = solve_critical_newton(start, prm);
  const double newton_dev = (nr.point.q0.to_vector() - cp.q0.to_vector()).cwiseAbs().maxCoeff();
  const double grad = grad_theta_chart(cp.q0, prm).cwiseAbs().maxCoeff();
  const double eps = cfg.physical.epsilon;
  auto& res = out.results.manifest.results;
  res["u0"] = vec_text(Vec3(cp.q0.mu, cp.q0.nu, std::sqrt(1.0 - cp.q0.mu * cp.q0.mu - cp.q0.nu * cp.q0.nu)));
  res["alpha0"] = format_number(cp.q0.alpha);
  res["beta0"] = format_number(cp.q0.beta);
  res["eta3_0"] = format_number(cp.q0.eta3);
  res["xi0"] = vec_text(cp.q0.xi);
  res["theta0"] = format_number(cp.theta0);
  res["abs_det_hessian"] = format_number(cp.abs_det_hessian);
  res["det_hessian_numeric"] = format_number(cp.det_hessian);
  res["signature"] = format_integer(cp.signature);
  res["newton_iterations"] = format_integer(nr.iterations);
  res["newton_deviation"] = format_number(newton_dev);
  out.results.records.push_back(named_record(cfg, "abs_det_hessian", eps, cp.abs_det_hessian));
  out.results.records.push_back(named_record(cfg, "gradient_residual", eps, grad));
  out.results.records.push_back(named_record(cfg, "newton_deviation", eps, newton_dev));
  out.report.push_back("groups: a=" + format_number(g.a) + " b1=" + format_number(g.b1) + " b2=" +
                       format_number(g.b2) + " c1=" + format_number(prm.c1()) + " c2=" + format_number(prm.c2()));
  out.report.push_back("q0: u=" + res["u0"] + " alpha=" + res["alpha0"] + " beta=" + res["beta0"] +
                       " eta3=" + res["eta3_0"] + " xi=" + res["xi0"]);
  out.report.push_back("Theta0 = " + res["theta0"]);
  out.report.push_back("|det H| = " + res["abs_det_hessian"] + " (numeric " + res["det_hessian_numeric"] + ")");
  out.report.push_back("mu0 = " + res["signature"]);
  out.report.push_back("Newton: " + res["newton_iterations"] + " iterations, deviation " + res["newton_deviation"]);
}

inline void run_bounds(const ExperimentConfig& cfg, const DimensionlessGroups& g, CommandOutcome& out) {
  DescentBudget budget;
  budget.starts = cfg.bounds_starts;
  budget.seed = qmc::mix(cfg.plan.seed, 0xb0b0ULL);
  const double chi = cfg.physical.chi;
  std::vector<std::pair<std::string, BoundFamily>> families = {{"delta21", BoundFamily::delta21()}};
  if (chi > 0.0)
    families.emplace_back("delta12", BoundFamily::delta12());
  else
    out.report.push_back("delta12: skipped (needs chi > 0)");
  families.emplace_back("delta_cone", BoundFamily::cone(cfg.decomposition(cfg.physical.epsilon).theta_bar));
  bool violated = false;
  for (const auto& [name, fam] : families) {
    const double D = delta_lower_bound(fam, g, chi);
    const auto res = verify_delta_bound_numeric(fam, g, chi, budget);
    const bool ok = res.min_value >= D * D - 1e-8;
    RunRecord closed = named_record(cfg, name + "_bound_sq", chi, D * D);
    RunRecord found = named_record(cfg, name + "_numeric_min", chi, res.min_value);
    found.ok = ok;
    if (!ok) found.failure = "numeric minimum below the closed-form bound";
    out.results.records.push_back(closed);
    out.results.records.push_back(found);
    out.results.manifest.results[name + "_witness_u"] = vec_text(res.witness.u_hat);
    out.results.manifest.results[name + "_witness_alpha"] = format_number(res.witness.alpha);
    out.results.manifest.results[name + "_witness_beta"] = format_number(res.witness.beta);
    out.report.push_back(std::string(ok ? "PASS " : "FAIL ") + name + ": Delta^2=" + format_number(D * D) +
                         " min=" + format_number(res.min_value) + " at u=" + vec_text(res.witness.u_hat) +
                         " alpha=" + format_number(res.witness.alpha) + " beta=" + format_number(res.witness.beta) +
                         " (" + std::to_string(res.converged_starts) + "/" + std::to_string(res.starts) +
                         " starts converged)");
    violated |= !ok;
  }
  if (violated) out.exit_code = kExitInvariant;
}

inline void run_stationary(const ExperimentConfig& cfg, const DimensionlessGroups& g, CommandOutcome& out) {
  std::vector<double> grid = {cfg.physical.epsilon};
  if (cfg.scan_grid_set && cfg.scan.variable == ScanVariable::epsilon) grid = cfg.scan.grid;
  std::vector<double> devs;
  for (double e : grid) {
    const auto t0 = std::chrono::steady_clock::now();
    const PhysicalConfig pc = with_epsilon_holding_groups(cfg.physical, e);
    const SphereDecomposition dec = cfg.decomposition(e);
    const OscEstimate I = integrate_I_eps(cfg.eta1, cfg.eta2, cfg.point, pc, g, dec, cfg.plan);
    const Complex L = stationary_leading_I(cfg.eta1, cfg.eta2, cfg.point, pc, g);
    const double dev = std::abs(I.value - L) / std::abs(L);
    RunRecord r = named_record(cfg, "epsilon", e, dev, I.std_error / std::abs(L));
    r.cfg = pc;
    r.n_inner = I.n_points;
    r.n_outer = 1;
    r.runtime_ms = mott::detail::elapsed_ms(t0);
    out.results.records.push_back(r);
    devs.push_back(dev);
    const std::string key = "epsilon=" + format_number(e);
    out.results.manifest.results[key + ".I"] =
        format_number(I.value.real()) + (I.value.imag() < 0 ? "" : "+") + format_number(I.value.imag()) + "i";
    out.results.manifest.results[key + ".lead"] =
        format_number(L.real()) + (L.imag() < 0 ? "" : "+") + format_number(L.imag()) + "i";
    out.results.manifest.results[key + ".theta_bar"] = format_number(dec.theta_bar);
    out.report.push_back("epsilon=" + format_number(e) + " theta_bar=" + format_number(dec.theta_bar) +
                         " |I_lead|=" + format_number(std::abs(L)) + " relative deviation=" + format_number(dev) +
                         " +- " + format_number(r.std_error));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < devs.size(); ++i)
    monotone &= (grid[i] < grid[i - 1]) ? devs[i] < devs[i - 1] : devs[i] > devs[i - 1];
  out.results.manifest.results["deviation_decreases_with_epsilon"] = monotone ? "true" : "false";
  out.report.push_back(std::string("deviation monotone in epsilon: ") + (monotone ? "yes" : "no"));
}

inline void run_scan(const ExperimentConfig& cfg, const DimensionlessGroups& g, ScanVariable var,
                     CommandOutcome& out) {
  const ScanSpec spec = cfg.scan_spec(var);
  out.results.records = scan(spec, cfg.physical, g);
  int failed = 0;
  for (const auto& r : out.results.records) {
    out.report.push_back(std::string(to_string(var)) + "=" + format_number(r.value) + "  " +
                         to_string(spec.observable) + "=" + format_number(r.estimate) + " +- " +
                         format_number(r.std_error) + (r.ok ? "" : "  FAILED: " + r.failure));
    failed += !r.ok;
  }
  out.results.manifest.results["observable"] = to_string(spec.observable);
  out.results.manifest.results["estimator"] = to_string(spec.estimator);
  if (failed) out.exit_code = kExitNumerical;
}

inline void run_probability(const ExperimentConfig& cfg, const DimensionlessGroups& g, CommandOutcome& out) {
  const ScanSpec spec = cfg.scan_spec(ScanVariable::epsilon);
  RunRecord direct = p_direct_sampled(cfg.physical, g, spec.outer_samples, cfg.plan, cfg.estimator, spec.domain);
  RunRecord lead = p_leading(cfg.physical, g, spec.outer_samples,
                             LeadingPlan{spec.leading_nodes, std::nullopt, cfg.plan.seed}, spec.domain);
  direct.variable = "p_direct";
  lead.variable = "p_leading";
  out.results.records = {direct, lead};
  out.report.push_back("P (sampled, " + std::string(to_string(cfg.estimator)) + ") = " +
                       format_number(direct.estimate) + " +- " + format_number(direct.std_error));
  out.report.push_back("P (leading order) = " + format_number(lead.estimate) + " +- " +
                       format_number(lead.std_error) + (cfg.physical.chi > 0.0 ? "  (aligned formula; chi > 0)" : ""));
}

} // namespace detail

/// Runs one command. Errors are turned into a diagnostic record and an exit
/// status instead of escaping.
inline CommandOutcome run_command(Command cmd, const ExperimentConfig& cfg) {
  CommandOutcome out;
  Manifest& m = out.results.manifest;
  m.command = to_string(cmd);
  m.config_snapshot = canonical_text(cfg);
  m.seed = cfg.plan.seed;
  m.warnings = cfg.warnings;
  m.started_utc = detail::utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const DimensionlessGroups g = build_groups(cfg.physical);
    switch (cmd) {
      case Command::verify: detail::run_verify(cfg, out); break;
      case Command::critical_point: detail::run_critical_point(cfg, g, out); break;
      case Command::bounds: detail::run_bounds(cfg, g, out); break;
      case Command::stationary_check: detail::run_stationary(cfg, g, out); break;
      case Command::scan_epsilon: detail::run_scan(cfg, g, ScanVariable::epsilon, out); break;
      case Command::scan_angle: detail::run_scan(cfg, g, ScanVariable::chi, out); break;
      case Command::probability: detail::run_probability(cfg, g, out); break;
    }
  } catch (const Error& e) {
    const bool config = dynamic_cast<const ConfigError*>(&e) != nullptr;
    RunRecord r = detail::named_record(cfg, "failure", cfg.physical.epsilon, 0.0);
    r.ok = false;
    r.failure = e.what();
    out.results.records.push_back(r);
    out.report.push_back(std::string(config ? "configuration error: " : "numerical failure: ") + e.what());
    out.exit_code = config ? kExitConfig : kExitNumerical;
  }
  std::vector<std::int64_t> runtimes;
  for (auto& r : out.results.records) {
    r.config_snapshot = snapshot_with(cfg, r.cfg);
    runtimes.push_back(r.runtime_ms);
    // wall-clock times would break byte-identical reruns, so they stay in
    // the manifest unless explicitly requested in the records
    if (!cfg.record_runtime) r.runtime_ms = 0;
  }
  std::string rt;
  for (auto v : runtimes) rt += (rt.empty() ? "" : ",") + format_integer(v);
  m.results["record_runtimes_ms"] = rt;
  m.wall_ms = mott::detail::elapsed_ms(t0);
  m.finished_utc = detail::utc_now();
  if (!out.results.records.empty()) {
    out.plots = emit_plot_data(out.results);
    if (cmd == Command::scan_epsilon || cmd == Command::scan_angle) {
      for (const auto& t : out.plots) {
        if (t.fit) {
          m.results["fit." + t.name + ".slope"] = format_number(t.fit->slope);
          out.report.push_back("fitted log-log slope (" + t.name + "): " + format_number(t.fit->slope));
        }
        for (const auto& w : t.warnings) out.report.push_back("plot " + t.name + ": " + w);
      }
    }
  }
  return out;
}

} // namespace mott::harness
