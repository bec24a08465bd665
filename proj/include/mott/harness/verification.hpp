#pragma once

// Invariant suite behind the `verify` command: every invariant of the model
// and phase modules, each measured against its tolerance.

#include "mott/core.hpp"
#include "mott/model.hpp"
#include "mott/phase.hpp"
#include "mott/probability.hpp"
#include "mott/qmc.hpp"
#include "mott/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mott::harness {

struct Check {
  std::string name;
  double measured = 0.0;   ///< worst discrepancy found
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

/// Reproducible uniform draws from a counter-based generator.
class Draws {
public:
  explicit Draws(std::uint64_t seed) : state_(qmc::splitmix64(seed)) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    const double u = static_cast<double>(qmc::splitmix64(state_++) >> 11) * (1.0 / 9007199254740992.0);
    return lo + (hi - lo) * u;
  }

  Vec3 cube(double half) { return {uniform(-half, half), uniform(-half, half), uniform(-half, half)}; }

private:
  std::uint64_t state_;
};

namespace detail {

inline Check make_check(std::string name, double measured, double tol, std::string detail = {}) {
  Check c{std::move(name), measured, tol, std::isfinite(measured) && measured <= tol, std::move(detail)};
  return c;
}

// ||f||^2 = 4 pi int r^2 |f(r)|^2 dr for a radial function on [0, R].
template <class F>
double radial_norm2(F&& f, double R, std::size_t panels) {
  const quad::Rule r = quad::composite_gauss_legendre(panels, 16, 0.0, R);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = r.nodes[i];
    s += r.weights[i] * x * x * f(x);
  }
  return 4.0 * pi * s;
}

inline double zeta0_norm() {
  // r zeta0 is bounded, so integrate |r zeta0|^2 directly
  const quad::Rule r = quad::composite_gauss_legendre(40, 16, 0.0, 40.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(zeta0_radial(r.nodes[i]), 2);
  return std::sqrt(4.0 * pi * s);
}

inline double psi_norm(double eps) {
  const std::size_t panels = static_cast<std::size_t>(std::ceil(12.0 / eps)) * 4;
  return std::sqrt(radial_norm2([&](double r) { return std::norm(psi_wave(Vec3(0.0, 0.0, r), eps)); }, 12.0, panels));
}

// int dy |h(xi, y)|^2 over R^3 in coordinates (|y|, cos angle(y, xi)), with
// |y| = u / (1 - u).
inline double h_y_norm2_numeric(double k) {
  const quad::Rule ru = quad::composite_gauss_legendre(64, 16, 0.0, 1.0);
  const quad::Rule rc = quad::composite_gauss_legendre(48, 16, -1.0, 1.0);
  const Vec3 xi(0.0, 0.0, k);
  double total = 0.0;
  for (std::size_t i = 0; i < ru.size(); ++i) {
    const double u = ru.nodes[i];
    const double om = 1.0 - u;
    const double ky = u / om;
    double inner = 0.0;
    for (std::size_t j = 0; j < rc.size(); ++j) {
      const double c = rc.nodes[j];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      inner += rc.weights[j] * std::norm(form_factor_h(xi, Vec3(ky * s, 0.0, ky * c)));
    }
    total += ru.weights[i] * ky * ky / (om * om) * inner;
  }
  return two_pi * total;
}

inline DimensionlessGroups random_groups(Draws& d) {
  DimensionlessGroups g;
  g.b1 = d.uniform(0.2, 1.0);
  g.b2 = g.b1 * d.uniform(1.2, 3.0);
  g.a = g.b2 * d.uniform(1.1, 2.0);
  g.c_coeff = d.uniform(0.1, 2.0);
  g.kappa = d.uniform(0.1, 1.0);
  return g;
}

inline ChartParams random_params(Draws& d) {
  ChartParams p;
  p.groups = random_groups(d);
  p.kin = Kinematics{d.cube(1.0), d.cube(1.0), d.cube(1.0)};
  p.eta1 = d.uniform(-1.0, 1.0);
  p.eta2 = d.uniform(-1.0, 1.0);
  p.theta_bar = 0.5 * pi - 1e-9;
  return p;
}

inline ChartPoint random_chart_point(Draws& d, double radius) {
  ChartPoint q;
  const double r = radius * std::sqrt(d.uniform());
  const double ph = d.uniform(0.0, two_pi);
  q.mu = r * std::cos(ph);
  q.nu = r * std::sin(ph);
  q.alpha = d.uniform(0.2, 1.0);
  q.beta = d.uniform(0.0, q.alpha);
  q.eta3 = d.uniform(-1.0, 1.0);
  q.xi = d.cube(1.0);
  return q;
}

inline PhysicalConfig random_physical(Draws& d) {
  PhysicalConfig c;
  c.epsilon = d.uniform(0.02, 0.4);
  c.mass_ratio = c.epsilon * d.uniform(0.2, 5.0);
  c.a1_over_gamma = d.uniform(0.5, 5.0) / c.epsilon;
  c.a2_over_a1 = d.uniform(1.1, 4.0);
  c.t_over_tau2 = d.uniform(1.1, 3.0);
  c.lambda0 = c.epsilon * d.uniform(0.1, 5.0);
  c.chi = d.uniform(0.0, pi);
  return c;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Eigen::Matrix3d rotation(Draws& d) {
  const Vec3 axis = Vec3(d.uniform(-1, 1), d.uniform(-1, 1), d.uniform(-1, 1)).normalized();
  return Eigen::AngleAxisd(d.uniform(0.0, two_pi), axis).toRotationMatrix();
}

} // namespace detail

/// Model-module invariants.
inline std::vector<Check> model_checks(const PhysicalConfig& cfg, std::uint64_t seed) {
  std::vector<Check> out;
  Draws d(qmc::mix(seed, 1));

  out.push_back(detail::make_check("zeta0_norm", std::abs(detail::zeta0_norm() - 1.0), 1e-10));
  {
    double worst = 0.0;
    std::string where;
    for (double e : {0.5, 0.2, 0.1, cfg.epsilon}) {
      const double dev = std::abs(detail::psi_norm(e) - 1.0);
      if (dev >= worst) where = "epsilon=" + std::to_string(e);
      worst = std::max(worst, dev);
    }
    out.push_back(detail::make_check("psi_norm", worst, 1e-10, where));
  }
  {
    double closed = 0.0, oracle = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Vec3 y = d.cube(3.0);
      closed = std::max(closed, std::abs(form_factor_h(Vec3::Zero(), y)));
      oracle = std::max(oracle, std::abs(form_factor_h_oracle(Vec3::Zero(), y).value));
    }
    out.push_back(detail::make_check("h_orthogonality_closed", closed, 1e-12));
    out.push_back(detail::make_check("h_orthogonality_oracle", oracle, 1e-6));
  }
  {
    double worst = 0.0, above = 0.0;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      const double num = detail::h_y_norm2_numeric(k);
      worst = std::max(worst, detail::rel(num, form_factor_y_norm2(k)));
      above = std::max(above, num - std::pow(two_pi, -3.0));
    }
    out.push_back(detail::make_check("h_completeness", worst, 1e-4));
    out.push_back(detail::make_check("h_operator_bound", std::max(0.0, above), 0.0));
  }
  {
    // b1 < b2 <= a for the configured inputs and for random ones
    int bad = 0;
    auto ordered = [](const DimensionlessGroups& g) { return g.b1 < g.b2 && g.b2 <= g.a; };
    PhysicalConfig strict = cfg;
    if (strict.a2_over_a1 <= 1.0) strict.a2_over_a1 = 2.0;
    if (!ordered(build_groups(strict))) ++bad;
    for (int i = 0; i < 50; ++i)
      if (!ordered(build_groups(detail::random_physical(d)))) ++bad;
    out.push_back(detail::make_check("groups_ordering", bad, 0.0));
  }
  {
    // rotating source frame and every vector jointly leaves the phases and
    // amplitudes unchanged
    double worst = 0.0;
    const DimensionlessGroups g = build_groups(cfg);
    for (int i = 0; i < 20; ++i) {
      const Eigen::Matrix3d R = detail::rotation(d);
      const AtomGeometry geo = AtomGeometry::from_angle(d.uniform(0.0, pi));
      const Kinematics kin{d.cube(1.0), d.cube(1.0), d.cube(1.0)};
      PhasePoint p;
      p.u_hat = d.cube(1.0).normalized();
      p.alpha = d.uniform(0.2, 1.0);
      p.beta = d.uniform(0.0, p.alpha);
      p.eta = d.cube(1.0);
      p.xi = d.cube(1.0);
      const AtomGeometry rgeo{R * geo.a1_hat, R * geo.a2_hat};
      const Kinematics rkin{R * kin.x, R * kin.y1, R * kin.y2};
      PhasePoint rp = p;
      rp.u_hat = R * p.u_hat;
      rp.eta = R * p.eta;
      rp.xi = R * p.xi;
      for (GraphOrder o : {GraphOrder::Order12, GraphOrder::Order21}) {
        worst = std::max(worst, std::abs(theta_general(o, p, kin, g, geo) - theta_general(o, rp, rkin, g, rgeo)));
        const Complex A = amplitude_G(o, p, kin, g, cfg.potential);
        const Complex B = amplitude_G(o, rp, rkin, g, cfg.potential);
        worst = std::max(worst, std::abs(A - B) / std::max(std::abs(A), 1e-300));
      }
    }
    out.push_back(detail::make_check("rotation_invariance", worst, 1e-12));
  }
  return out;
}

/// Phase-module invariants, plus the prefactor identity that joins the
/// physical and dimensionless descriptions.
inline std::vector<Check> phase_checks(const PhysicalConfig& cfg, std::uint64_t seed, int bound_starts = 64) {
  std::vector<Check> out;
  Draws d(qmc::mix(seed, 2));

  {
    // worked example
    ChartParams prm;
    prm.groups = DimensionlessGroups{2.0, 0.5, 1.0, 0.0, 0.0};
    prm.kin.x = Vec3(0.1, -0.2, 0.4);
    prm.eta1 = 0.3;
    prm.eta2 = -0.1;
    prm.theta_bar = 0.5 * pi - 1e-9;
    // c1 = 0.3 and c2 = 0.7 via c_coeff omega(y): pick y with omega = c / c_coeff
    prm.groups.c_coeff = 0.3 / omega(Vec3::Zero());
    const double w2 = 0.7 / prm.groups.c_coeff;
    prm.kin.y2 = Vec3(0.0, 0.0, std::sqrt(2.0 * w2 - 1.0));
    const CriticalPoint cp = critical_point_closed(prm);
    const double dev = std::max({std::abs(cp.q0.alpha - 0.5), std::abs(cp.q0.beta - 0.25),
                                 std::abs(cp.q0.eta3 + 0.35), (cp.q0.xi - Vec3(-0.8, 0.6, -0.15)).cwiseAbs().maxCoeff(),
                                 std::abs(cp.q0.mu), std::abs(cp.q0.nu)});
    out.push_back(detail::make_check("worked_example_point", dev, 1e-12));
    out.push_back(detail::make_check("worked_example_theta0",
                                     std::max(std::abs(cp.theta0 - 0.825),
                                              std::abs(theta_aligned(cp.q0, prm) - 0.825)),
                                     1e-12));
    out.push_back(detail::make_check("worked_example_det", std::abs(cp.abs_det_hessian - 1.0), 1e-12));
  }

  std::vector<ChartParams> draws;
  for (int i = 0; i < 50; ++i) draws.push_back(detail::random_params(d));

  {
    double grad = 0.0, det = 0.0, wres = 0.0, theta = 0.0;
    int sig0 = 0, sig_bad = 0, sign0 = 0, sign_bad = 0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const CriticalPoint cp = critical_point_closed(draws[i]);
      grad = std::max(grad, grad_theta_chart(cp.q0, draws[i]).cwiseAbs().maxCoeff());
      det = std::max(det, detail::rel(std::abs(cp.det_hessian), cp.abs_det_hessian));
      const Vec3 w = chart_w(cp.q0, draws[i]);
      wres = std::max({wres, std::abs(w.x()), std::abs(w.y())});
      theta = std::max(theta, std::abs(theta_aligned(cp.q0, draws[i]) - cp.theta0));
      const int sign = cp.det_hessian > 0 ? 1 : -1;
      if (i == 0) {
        sig0 = cp.signature;
        sign0 = sign;
      }
      sig_bad += cp.signature != sig0;
      sign_bad += sign != sign0;
    }
    out.push_back(detail::make_check("critical_point_gradient", grad, 1e-12));
    out.push_back(detail::make_check("critical_point_theta0", theta, 1e-12));
    out.push_back(detail::make_check("hessian_abs_det", det, 1e-8));
    out.push_back(detail::make_check("hessian_signature_constant", sig_bad + sign_bad, 0.0,
                                     "signature " + std::to_string(sig0)));
    out.push_back(detail::make_check("w_transverse_zero", wres, 1e-12));
  }
  {
    // central differences at step 1e-5, 20 random points per derivative
    const double h = 1e-5;
    double g_err = 0.0, h_err = 0.0;
    for (int i = 0; i < 20; ++i) {
      const ChartParams& prm = draws[static_cast<std::size_t>(i)];
      const ChartPoint q = detail::random_chart_point(d, 0.6);
      const Vec8 z = q.to_vector();
      const Vec8 g = grad_theta_chart(q, prm);
      const Mat8 H = hessian_theta_chart(q, prm);
      Vec8 g_fd;
      Mat8 H_fd;
      for (int k = 0; k < 8; ++k) {
        Vec8 zp = z, zm = z;
        zp[k] += h;
        zm[k] -= h;
        const ChartPoint qp = ChartPoint::from_vector(zp), qm = ChartPoint::from_vector(zm);
        g_fd[k] = (theta_aligned(qp, prm) - theta_aligned(qm, prm)) / (2.0 * h);
        H_fd.col(k) = (grad_theta_chart(qp, prm) - grad_theta_chart(qm, prm)) / (2.0 * h);
      }
      g_err = std::max(g_err, (g - g_fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff());
      h_err = std::max(h_err, (H - H_fd).cwiseAbs().maxCoeff() / H.cwiseAbs().maxCoeff());
    }
    out.push_back(detail::make_check("gradient_finite_difference", g_err, 1e-6));
    out.push_back(detail::make_check("hessian_finite_difference", h_err, 1e-6));
  }
  {
    // Newton from random feasible starts around the critical point
    double worst = 0.0;
    int failures = 0;
    for (int i = 0; i < 20; ++i) {
      const ChartParams& prm = draws[static_cast<std::size_t>(i)];
      const CriticalPoint cp = critical_point_closed(prm);
      ChartPoint start = cp.q0;
      const ChartPoint kick = detail::random_chart_point(d, 0.3);
      start.mu = kick.mu;
      start.nu = kick.nu;
      start.alpha += d.uniform(-0.1, 0.1);
      start.beta += d.uniform(-0.1, 0.1);
      start.eta3 += d.uniform(-0.3, 0.3);
      start.xi += d.cube(0.3);
      try {
        const NewtonResult nr = solve_critical_newton(start, prm);
        worst = std::max(worst, (nr.point.q0.to_vector() - cp.q0.to_vector()).cwiseAbs().maxCoeff());
      } catch (const Error&) {
        ++failures;
      }
    }
    out.push_back(detail::make_check("newton_converges_to_closed_form", failures ? INFINITY : worst, 1e-10,
                                     std::to_string(failures) + " failed starts"));
  }
  {
    // multistart minima never undercut the closed-form bounds
    DescentBudget budget;
    budget.starts = bound_starts;
    double worst = 0.0;
    for (int fam = 0; fam < 3; ++fam) {
      for (int i = 0; i < 10; ++i) {
        const DimensionlessGroups g = detail::random_groups(d);
        // Delta12 bounds the minimum only for chi <= pi/2; at obtuse angles
        // beta = 0 reaches b1^2 < b1^2 (1 - cos chi)
        const double chi = fam == 1 ? d.uniform(0.2, 0.5 * pi) : d.uniform(0.2, pi);
        const BoundFamily f = fam == 0 ? BoundFamily::delta21()
                              : fam == 1 ? BoundFamily::delta12()
                                         : BoundFamily::cone(d.uniform(0.1, 1.2));
        const double D = delta_lower_bound(f, g, chi);
        const auto res = verify_delta_bound_numeric(f, g, chi, budget);
        worst = std::max(worst, D * D - res.min_value);
      }
    }
    out.push_back(detail::make_check("delta_bounds_hold", std::max(0.0, worst), 1e-8));
  }
  {
    // equality at the degenerate geometries, at the analytic witnesses
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      DimensionlessGroups g = detail::random_groups(d);
      // Delta21 with aligned atoms: alpha = beta = (b1 + b2) / (2a), u = e3
      {
        const double D = delta_lower_bound(BoundFamily::delta21(), g, 0.0);
        const double ab = (g.b1 + g.b2) / (2.0 * g.a);
        const mott::detail::GradObjective obj{g.a, g.b1 * Vec3::UnitZ(), g.b2 * Vec3::UnitZ()};
        worst = std::max(worst, std::abs(obj.value(Vec3::UnitZ(), ab, ab) - D * D));
        worst = std::max(worst, std::abs(verify_delta_bound_numeric(BoundFamily::delta21(), g, 0.0).min_value - D * D));
      }
      DimensionlessGroups eq = g;
      eq.b2 = eq.b1;
      // Delta12 at b1 = b2: u0 = (sin chi/2, 0, cos chi/2)
      {
        const double chi = d.uniform(0.3, 0.5 * pi);
        const double D = delta_lower_bound(BoundFamily::delta12(), eq, chi);
        const AtomGeometry geo = AtomGeometry::from_angle(chi);
        const Vec3 u0(std::sin(0.5 * chi), 0.0, std::cos(0.5 * chi));
        const mott::detail::GradObjective obj{eq.a, eq.b2 * geo.a2_hat, eq.b1 * geo.a1_hat};
        const auto [al, be] = obj.best_ab(u0);
        worst = std::max(worst, std::abs(obj.value(u0, al, be) - D * D));
        worst = std::max(worst, std::abs(verify_delta_bound_numeric(BoundFamily::delta12(), eq, chi).min_value - D * D));
      }
      // cone at b1 = b2: u on the cap boundary
      {
        const double tb = d.uniform(0.1, 1.2);
        const double D = delta_lower_bound(BoundFamily::cone(tb), eq, 0.0);
        const Vec3 u0(std::sin(tb), 0.0, std::cos(tb));
        const mott::detail::GradObjective obj{eq.a, eq.b2 * Vec3::UnitZ(), eq.b1 * Vec3::UnitZ()};
        const auto [al, be] = obj.best_ab(u0);
        worst = std::max(worst, std::abs(obj.value(u0, al, be) - D * D));
        worst = std::max(worst,
                         std::abs(verify_delta_bound_numeric(BoundFamily::cone(tb), eq, 0.0).min_value - D * D));
      }
    }
    out.push_back(detail::make_check("delta_bounds_sharp", worst, 1e-6));
  }
  {
    // physical and dimensionless forms of the bounds agree for the configuration
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const PhysicalConfig c = detail::random_physical(d);
      const DimensionlessGroups g = build_groups(c);
      worst = std::max(worst, detail::rel(delta_lower_bound(BoundFamily::delta21(), c),
                                          delta_lower_bound(BoundFamily::delta21(), g, c.chi)));
      if (c.chi > 0.0)
        worst = std::max(worst, detail::rel(delta_lower_bound(BoundFamily::delta12(), c),
                                            delta_lower_bound(BoundFamily::delta12(), g, c.chi)));
    }
    out.push_back(detail::make_check("delta_bounds_physical_form", worst, 1e-12));
  }
  {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const PhysicalConfig c = detail::random_physical(d);
      worst = std::max(worst, detail::rel(leading_prefactor(build_groups(c), c.epsilon), leading_prefactor_physical(c)));
    }
    out.push_back(detail::make_check("prefactor_identity", worst, 1e-12));
  }
  (void)cfg;
  return out;
}

inline std::vector<Check> invariant_suite(const PhysicalConfig& cfg, std::uint64_t seed, int bound_starts = 64) {
  std::vector<Check> all = model_checks(cfg, seed);
  auto more = phase_checks(cfg, seed, bound_starts);
  all.insert(all.end(), more.begin(), more.end());
  return all;
}

} // namespace mott::harness
