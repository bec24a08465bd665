#pragma once

// Second-order double-ionization probability: the sampled representation
// over (x, y1, y2), its leading order in epsilon for aligned geometries, and
// the epsilon / angle scans built on top of them.

#include "mott/core.hpp"
#include "mott/model.hpp"
#include "mott/oscillatory.hpp"
#include "mott/quadrature.hpp"
#include "mott/reduced.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mott {

enum class AmplitudeEstimator { direct, reduced };

inline const char* to_string(AmplitudeEstimator e) { return e == AmplitudeEstimator::direct ? "direct" : "reduced"; }

/// Truncation of the outer variables: |x| <= x_radius, |y_j| <= y_max.
struct OuterDomain {
  double x_radius = 6.0;
  double y_max = 4.0;

  void validate() const {
    if (!(x_radius > 0.0)) throw ConfigError("must be positive", "scan.x_radius");
    if (!(y_max > 0.0)) throw ConfigError("must be positive", "scan.y_max");
  }

  double volume() const {
    const double bx = 4.0 / 3.0 * pi * x_radius * x_radius * x_radius;
    const double by = 4.0 / 3.0 * pi * y_max * y_max * y_max;
    return bx * by * by;
  }
};

struct RunRecord {
  PhysicalConfig cfg;
  std::string variable;
  double value = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n_inner = 0;
  std::uint64_t n_outer = 0;
  std::uint64_t seed = 0;
  std::int64_t runtime_ms = 0;
  bool ok = true;
  std::string failure;
  std::string config_snapshot;  ///< filled in by the harness
};

namespace detail {
inline Vec3 ball_map(double u, double v, double w, double radius) {
  return radius * std::cbrt(u) * qmc::sphere_map(v, w);
}

inline Kinematics outer_point(const qmc::PointSet& ps, std::uint64_t i, const OuterDomain& dom) {
  std::array<double, 9> u{};
  ps.point(i, u.data());
  return {ball_map(u[0], u[1], u[2], dom.x_radius), ball_map(u[3], u[4], u[5], dom.y_max),
          ball_map(u[6], u[7], u[8], dom.y_max)};
}

inline std::uint64_t outer_seed(std::uint64_t seed) { return qmc::mix(seed, 0x07e5eedULL); }

inline std::int64_t elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
}

// Mean and standard error of the per-sample values.
inline std::pair<double, double> mean_and_error(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = qmc::pairwise_sum(v, 0, v.size()) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}
} // namespace detail

/// Amplitude of one graph order with the chosen estimator.
inline OscEstimate graph_amplitude(AmplitudeEstimator estimator, GraphOrder order, const Kinematics& kin,
                                   const PhysicalConfig& cfg, const DimensionlessGroups& g,
                                   const QuadraturePlan& plan) {
  return estimator == AmplitudeEstimator::direct ? integrate_G_eps(order, kin, cfg, g, plan)
                                                 : integrate_G_eps_reduced(order, kin, cfg, g, plan);
}

/// |G_12 + G_21|^2 at one outer point, with the propagated standard error.
inline std::pair<double, double> pointwise_mass(AmplitudeEstimator estimator, const Kinematics& kin,
                                                const PhysicalConfig& cfg, const DimensionlessGroups& g,
                                                const QuadraturePlan& plan, std::optional<GraphOrder> only = {}) {
  Complex sum{};
  double var = 0.0;
  for (GraphOrder o : {GraphOrder::Order12, GraphOrder::Order21}) {
    if (only && *only != o) continue;
    const OscEstimate e = graph_amplitude(estimator, o, kin, cfg, g, plan);
    sum += e.value;
    var += e.std_error * e.std_error;
  }
  return {std::norm(sum), 2.0 * std::abs(sum) * std::sqrt(var)};
}

/// kappa^4 N^2 eps^-2 * vol * mean |G_12 + G_21|^2 over quasi-random outer
/// points; both graph orders are evaluated at every outer point.
inline RunRecord p_direct_sampled(const PhysicalConfig& cfg, const DimensionlessGroups& g, int outer_samples,
                                  const QuadraturePlan& inner_plan,
                                  AmplitudeEstimator estimator = AmplitudeEstimator::reduced,
                                  const OuterDomain& dom = {}) {
  if (outer_samples < 1) throw ConfigError("must be at least 1", "scan.outer_samples");
  dom.validate();
  inner_plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.cfg = cfg;
  rec.variable = "epsilon";
  rec.value = cfg.epsilon;
  rec.n_outer = static_cast<std::uint64_t>(outer_samples);
  rec.n_inner = inner_plan.point_count * static_cast<std::uint64_t>(inner_plan.replicates);
  rec.seed = inner_plan.seed;
  const double eps = cfg.epsilon;
  const double N = normalization_N(eps);
  const double pre = std::pow(g.kappa, 4) * N * N / (eps * eps) * dom.volume();
  if (pre == 0.0 || cfg.potential.amplitude == 0.0) {
    rec.runtime_ms = detail::elapsed_ms(t0);
    return rec;
  }
  const qmc::PointSet outer(SequenceKind::low_discrepancy, 9, detail::outer_seed(inner_plan.seed), 0);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(outer_samples));
  double inner_var = 0.0;
  for (int i = 0; i < outer_samples; ++i) {
    const Kinematics kin = detail::outer_point(outer, static_cast<std::uint64_t>(i), dom);
    const auto [mass, err] = pointwise_mass(estimator, kin, cfg, g, inner_plan);
    terms.push_back(mass);
    inner_var += err * err;
  }
  const auto [mean, err] = detail::mean_and_error(terms);
  rec.estimate = pre * mean;
  const double n = static_cast<double>(outer_samples);
  rec.std_error = pre * (outer_samples > 1 ? err : std::sqrt(inner_var) / n);
  rec.runtime_ms = detail::elapsed_ms(t0);
  return rec;
}

/// kappa^4 N^2 eps^6 / (a^4 b1^4), the prefactor of the leading order.
inline double leading_prefactor(const DimensionlessGroups& g, double epsilon) {
  const double N = normalization_N(epsilon);
  return std::pow(g.kappa, 4) * N * N * std::pow(epsilon, 6) / std::pow(g.a * g.b1, 4);
}

/// The same prefactor in physical inputs: eps^2 (lambda0/eps)^4 (gamma/(eps |a1|))^4 N^2.
inline double leading_prefactor_physical(const PhysicalConfig& cfg) {
  const double e = cfg.epsilon;
  const double N = normalization_N(e);
  return e * e * std::pow(cfg.lambda0 / e, 4) * std::pow(1.0 / (e * cfg.a1_over_gamma), 4) * N * N;
}

/// Inner (eta1, eta2) rule of the leading order.
struct LeadingPlan {
  int nodes = 48;  ///< Gauss-Legendre nodes per axis
  std::optional<double> eta_radius;  ///< unset: 8 / potential width
  std::uint64_t seed = 1;
};

/// |int deta1 deta2 F|^2 at one outer point.
inline double leading_inner(const Kinematics& kin, const PhysicalConfig& cfg, const DimensionlessGroups& g,
                            const quad::Rule& rule, int signature) {
  Complex acc{};
  for (std::size_t i = 0; i < rule.size(); ++i) {
    Complex row{};
    for (std::size_t j = 0; j < rule.size(); ++j) {
      const double e1 = rule.nodes[i], e2 = rule.nodes[j];
      ChartParams prm{g, kin, e1, e2, 0.5 * pi - 1e-9};
      const ChartPoint q0 = critical_point_location(prm);
      const ComplexAmplitude G0 = amplitude_G(GraphOrder::Order12, to_phase_point(q0, prm), kin, g, cfg.potential);
      row += rule.weights[j] * G0 * expi(-cfg.chi_bar * g.b2 * e1);
    }
    acc += rule.weights[i] * row;
  }
  return std::norm(std::pow(two_pi, 4) * acc * expi(0.25 * pi * signature));
}

/// Leading order kappa^4 N^2 eps^6 / (a^4 b1^4) int dx dy1 dy2 |int deta1 deta2 F|^2
/// with a tensor Gauss-Legendre inner rule and quasi-random outer points.
inline RunRecord p_leading(const PhysicalConfig& cfg, const DimensionlessGroups& g, int outer_samples,
                           const LeadingPlan& plan = {}, const OuterDomain& dom = {}) {
  if (outer_samples < 1) throw ConfigError("must be at least 1", "scan.outer_samples");
  if (plan.nodes < 2) throw ConfigError("must be at least 2", "scan.leading_nodes");
  dom.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.cfg = cfg;
  rec.variable = "epsilon";
  rec.value = cfg.epsilon;
  rec.n_outer = static_cast<std::uint64_t>(outer_samples);
  rec.n_inner = static_cast<std::uint64_t>(plan.nodes) * static_cast<std::uint64_t>(plan.nodes);
  rec.seed = plan.seed;
  const double pre = leading_prefactor(g, cfg.epsilon) * dom.volume();
  if (pre == 0.0 || cfg.potential.amplitude == 0.0) {
    rec.runtime_ms = detail::elapsed_ms(t0);
    return rec;
  }
  const double R = plan.eta_radius ? *plan.eta_radius : 8.0 * cfg.potential.momentum_scale();
  const quad::Rule rule = quad::gauss_legendre(static_cast<std::size_t>(plan.nodes), -R, R);
  // the signature does not depend on the outer point or on (eta1, eta2)
  const int signature = critical_point_closed(ChartParams{g, Kinematics{}, 0.0, 0.0, 0.5 * pi - 1e-9}).signature;
  const qmc::PointSet outer(SequenceKind::low_discrepancy, 9, detail::outer_seed(plan.seed), 0);
  std::vector<double> terms(static_cast<std::size_t>(outer_samples));
  for (int i = 0; i < outer_samples; ++i)
    terms[static_cast<std::size_t>(i)] =
        leading_inner(detail::outer_point(outer, static_cast<std::uint64_t>(i), dom), cfg, g, rule, signature);
  const auto [mean, err] = detail::mean_and_error(terms);
  rec.estimate = pre * mean;
  rec.std_error = pre * err;
  rec.runtime_ms = detail::elapsed_ms(t0);
  return rec;
}

// ---------------------------------------------------------------------------
// Scans

enum class ScanVariable { epsilon, chi };

inline const char* to_string(ScanVariable v) { return v == ScanVariable::epsilon ? "epsilon" : "chi"; }

/// What each grid point measures.
enum class Observable {
  probability,   ///< p_direct_sampled
  leading,       ///< p_leading
  pointwise,     ///< |G_12 + G_21|^2 at a fixed outer point
  pointwise_12,  ///< |G_12|^2 at a fixed outer point
  pointwise_21,  ///< |G_21|^2 at a fixed outer point
};

inline const char* to_string(Observable o) {
  switch (o) {
    case Observable::probability: return "probability";
    case Observable::leading: return "leading";
    case Observable::pointwise: return "pointwise";
    case Observable::pointwise_12: return "pointwise_12";
    case Observable::pointwise_21: return "pointwise_21";
  }
  return "?";
}

struct ScanSpec {
  ScanVariable variable = ScanVariable::epsilon;
  std::vector<double> grid;
  int outer_samples = 64;
  QuadraturePlan inner_plan;
  Observable observable = Observable::probability;
  AmplitudeEstimator estimator = AmplitudeEstimator::reduced;
  OuterDomain domain;
  Kinematics point;          ///< outer point of the pointwise observables
  int leading_nodes = 48;
  bool hold_groups = true;   ///< epsilon scans keep (a, b_j, c_coeff, kappa) fixed

  void validate() const {
    if (grid.empty()) throw ConfigError("must not be empty", "scan.grid");
    if (grid.size() > 1) {
      const bool up = grid[1] > grid[0];
      for (std::size_t i = 1; i < grid.size(); ++i)
        if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
          throw ConfigError("must be strictly monotone", "scan.grid");
    }
    if (outer_samples < 1) throw ConfigError("must be at least 1", "scan.outer_samples");
    inner_plan.validate();
    domain.validate();
  }
};

/// Physical configuration at a new epsilon with the dimensionless groups
/// unchanged: |a1|/gamma scales like 1/eps, m/M like eps, lambda0 like eps^2.
inline PhysicalConfig with_epsilon_holding_groups(PhysicalConfig cfg, double epsilon) {
  const double r = epsilon / cfg.epsilon;
  cfg.a1_over_gamma /= r;
  cfg.mass_ratio *= r;
  cfg.lambda0 *= r * r;
  cfg.epsilon = epsilon;
  return cfg;
}

/// One measurement of the scan observable at (cfg, groups).
inline RunRecord measure(const ScanSpec& spec, const PhysicalConfig& cfg, const DimensionlessGroups& g) {
  switch (spec.observable) {
    case Observable::probability:
      return p_direct_sampled(cfg, g, spec.outer_samples, spec.inner_plan, spec.estimator, spec.domain);
    case Observable::leading:
      return p_leading(cfg, g, spec.outer_samples, LeadingPlan{spec.leading_nodes, std::nullopt, spec.inner_plan.seed},
                       spec.domain);
    default: break;
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<GraphOrder> only;
  if (spec.observable == Observable::pointwise_12) only = GraphOrder::Order12;
  if (spec.observable == Observable::pointwise_21) only = GraphOrder::Order21;
  RunRecord rec;
  rec.cfg = cfg;
  const auto [mass, err] = pointwise_mass(spec.estimator, spec.point, cfg, g, spec.inner_plan, only);
  rec.estimate = mass;
  rec.std_error = err;
  rec.n_inner = spec.inner_plan.point_count * static_cast<std::uint64_t>(spec.inner_plan.replicates);
  rec.n_outer = 1;
  rec.seed = spec.inner_plan.seed;
  rec.runtime_ms = detail::elapsed_ms(t0);
  return rec;
}

/// One record per grid value. All grid points share the seeds, so the
/// differences between neighbouring records are paired. A failing grid
/// point yields a record with ok = false instead of aborting the scan.
inline std::vector<RunRecord> scan(const ScanSpec& spec, const PhysicalConfig& cfg, const DimensionlessGroups& g) {
  spec.validate();
  std::vector<RunRecord> out;
  out.reserve(spec.grid.size());
  for (double v : spec.grid) {
    PhysicalConfig c = cfg;
    DimensionlessGroups gv = g;
    RunRecord rec;
    try {
      if (spec.variable == ScanVariable::epsilon) {
        if (!(v > 0.0)) throw ConfigError("epsilon grid values must be positive", "scan.grid");
        if (spec.hold_groups) {
          c = with_epsilon_holding_groups(cfg, v);
        } else {
          c.epsilon = v;
          gv = build_groups(c);
        }
      } else {
        if (!(v >= 0.0 && v <= pi)) throw ConfigError("chi grid values must lie in [0, pi]", "scan.grid");
        c.chi = v;
      }
      rec = measure(spec, c, gv);
    } catch (const Error& e) {
      rec = RunRecord{};
      rec.cfg = c;
      rec.ok = false;
      rec.failure = e.what();
      rec.seed = spec.inner_plan.seed;
    }
    rec.variable = to_string(spec.variable);
    rec.value = v;
    out.push_back(std::move(rec));
  }
  return out;
}

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root-mean-square residual in log estimate
  std::size_t points = 0;
};

/// Least-squares line through (log value, log estimate). Records with a
/// nonpositive value or estimate, or marked failed, are skipped.
inline LogLogFit fit_loglog_slope(const std::vector<RunRecord>& records) {
  std::vector<double> lx, ly;
  for (const auto& r : records) {
    if (!r.ok || !(r.value > 0.0) || !(r.estimate > 0.0)) continue;
    lx.push_back(std::log(r.value));
    ly.push_back(std::log(r.estimate));
  }
  if (lx.size() < 3) throw DomainError("fit_loglog_slope: fewer than 3 usable records");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_loglog_slope: all usable records share one value");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.points = lx.size();
  return fit;
}

} // namespace mott
