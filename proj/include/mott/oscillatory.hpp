#pragma once

// Estimators for the oscillatory amplitudes: the full ten-dimensional
// integral over S^2 x simplex x R^6, its eight-dimensional aligned-chart
// restriction to a polar cap, and the stationary-phase leading term.

#include "mott/core.hpp"
#include "mott/model.hpp"
#include "mott/phase.hpp"
#include "mott/qmc.hpp"

#include <array>
#include <cmath>
#include <optional>

namespace mott {

/// Split of the sphere into the polar cap of half-aperture theta_bar around
/// e3 and its complement.
struct SphereDecomposition {
  double theta_bar = 0.0;

  /// theta_bar = epsilon^d with 0 < d < 1.
  static SphereDecomposition from_exponent(double epsilon, double d) {
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("must lie in (0, 1)", "theta_bar_exponent");
    return SphereDecomposition{std::pow(epsilon, d)};
  }

  void validate() const {
    if (!(theta_bar > 0.0 && theta_bar < 0.5 * pi)) throw ConfigError("must lie in (0, pi/2)", "theta_bar");
  }

  double cap_area() const { return two_pi * (1.0 - std::cos(theta_bar)); }
};

enum class SpherePart { cap, complement };

inline SpherePart decompose_sphere(const SphereDecomposition& dec, const Vec3& u_hat) {
  if (std::abs(u_hat.norm() - 1.0) > 1e-12) throw DomainError("decompose_sphere: u_hat must be a unit vector");
  const double polar = std::acos(std::clamp(u_hat.z(), -1.0, 1.0));
  return polar <= dec.theta_bar ? SpherePart::cap : SpherePart::complement;
}

struct OscEstimate {
  ComplexAmplitude value{0.0, 0.0};
  double std_error = 0.0;
  std::uint64_t n_points = 0;  ///< total evaluations over all replicates
  double truncation_radius = 0.0;
  double tail_bound = 0.0;  ///< bound on |integral over the region cut off by the truncation|
};

/// Randomized QMC mean of `integrand` over [0,1)^Dim. The integrand receives
/// the point and returns the weighted complex value.
template <unsigned Dim, class F>
OscEstimate rqmc_estimate(const QuadraturePlan& plan, F&& integrand) {
  plan.validate();
  const std::uint64_t n = plan.point_count;
  std::vector<Complex> means;
  means.reserve(static_cast<std::size_t>(plan.replicates));
  qmc::Moments total;
  for (int r = 0; r < plan.replicates; ++r) {
    const qmc::PointSet ps(plan.sequence_kind, Dim, plan.seed, static_cast<std::uint64_t>(r));
    const qmc::Moments m = qmc::deterministic_reduce<qmc::Moments>(n, [&](std::uint64_t b, std::uint64_t e) {
      std::array<double, Dim> u{};
      qmc::Moments acc;
      for (std::uint64_t i = b; i < e; ++i) {
        ps.point(i, u.data());
        const Complex v = integrand(u);
        acc.sum += v;
        acc.sum_sq += std::norm(v);
      }
      return acc;
    });
    means.push_back(m.sum / static_cast<double>(n));
    total += m;
  }
  OscEstimate est;
  const double R = static_cast<double>(plan.replicates);
  est.n_points = n * static_cast<std::uint64_t>(plan.replicates);
  est.value = qmc::pairwise_sum(means, 0, means.size()) / R;
  if (plan.replicates >= 2) {
    double ss = 0.0;
    for (const auto& m : means) ss += std::norm(m - est.value);
    est.std_error = std::sqrt(ss / (R * (R - 1.0)));
  } else {
    const double N = static_cast<double>(n);
    const double var = std::max(0.0, total.sum_sq / N - std::norm(total.sum / N));
    est.std_error = std::sqrt(var / (N - 1.0));
  }
  if (!is_finite(est.value) || !std::isfinite(est.std_error))
    throw NumericalError("rqmc_estimate: non-finite estimate");
  return est;
}

namespace detail {
// Radius at which the Gaussian tail per axis is far below double resolution.
inline constexpr double kAutoTruncationSigmas = 9.0;

inline double truncation_radius(const QuadraturePlan& plan, const PotentialSpec& pot) {
  return plan.truncation_radius ? *plan.truncation_radius : kAutoTruncationSigmas * pot.momentum_scale();
}

// Bound on the integral of |V~| over R^k outside the box [-R, R]^k.
inline double gaussian_box_tail(const PotentialSpec& pot, double radius, int k) {
  const double s = pot.momentum_scale();
  const double e = std::erfc(radius / (s * std::sqrt(2.0)));
  const double full_per_axis = std::sqrt(two_pi) * s;
  return std::pow(full_per_axis, k) * -std::expm1(k * std::log1p(-e));
}

inline void check_tail(const QuadraturePlan& plan, const OscEstimate& est) {
  if (!plan.truncation_radius) return;
  const double scale = std::max(std::abs(est.value), 3.0 * est.std_error);
  if (est.tail_bound > 1e-8 * scale)
    throw NumericalError("truncation radius " + std::to_string(*plan.truncation_radius) +
                         " too small: tail bound " + std::to_string(est.tail_bound) + " exceeds 1e-8 of the estimate");
}
} // namespace detail

/// Estimate of the ten-dimensional amplitude integral
///   int_{S^2} du int_simplex dalpha dbeta int deta dxi G_lj e^{i Theta_lj / eps}
/// for the exact geometry at angle cfg.chi.
inline OscEstimate integrate_G_eps(GraphOrder order, const Kinematics& kin, const PhysicalConfig& cfg,
                                   const DimensionlessGroups& g, const QuadraturePlan& plan) {
  const PotentialSpec& pot = cfg.potential;
  const double eps = cfg.epsilon;
  const AtomGeometry geo = AtomGeometry::from_angle(cfg.chi);
  const double R = detail::truncation_radius(plan, pot);
  const qmc::TruncatedGaussian tg(pot.momentum_scale(), R);
  const double measure = qmc::sphere_measure * qmc::simplex_measure;

  OscEstimate est;
  if (pot.amplitude == 0.0) {
    est.n_points = plan.point_count * static_cast<std::uint64_t>(plan.replicates);
  } else {
    est = rqmc_estimate<10>(plan, [&](const std::array<double, 10>& u) {
      PhasePoint p;
      p.u_hat = qmc::sphere_map(u[0], u[1]);
      const auto s = qmc::simplex_map(u[2], u[3]);
      p.alpha = s.alpha;
      p.beta = s.beta;
      double w = measure;
      for (int k = 0; k < 3; ++k) {
        const auto a = tg(u[4 + k]);
        const auto b = tg(u[7 + k]);
        p.eta[k] = a.value;
        p.xi[k] = b.value;
        w *= a.weight * b.weight;
      }
      const double th = theta_general(order, p, kin, g, geo);
      return amplitude_G(order, p, kin, g, pot) * expi(th / eps) * w;
    });
  }
  est.truncation_radius = R;
  const double h = form_factor_sup_bound();
  est.tail_bound = pot.amplitude * pot.amplitude * h * h * measure * detail::gaussian_box_tail(pot, R, 6);
  detail::check_tail(plan, est);
  return est;
}

/// Estimate of the eight-dimensional aligned-chart integral over the cap,
///   int dmu dnu / s int_simplex int deta3 dxi G_12 e^{i delta_eps} e^{i Theta / eps},
/// at fixed (eta1, eta2), with chi_eps = chi_bar * eps.
inline OscEstimate integrate_I_eps(double eta1, double eta2, const Kinematics& kin, const PhysicalConfig& cfg,
                                   const DimensionlessGroups& g, const SphereDecomposition& dec,
                                   const QuadraturePlan& plan) {
  dec.validate();
  const PotentialSpec& pot = cfg.potential;
  const double eps = cfg.epsilon;
  const double R = detail::truncation_radius(plan, pot);
  const qmc::TruncatedGaussian tg(pot.momentum_scale(), R);
  const double rad = std::sin(dec.theta_bar);
  const double measure = pi * rad * rad * qmc::simplex_measure;
  const AlignedExtra extra{cfg.chi_bar * eps, eps};
  ChartParams prm{g, kin, eta1, eta2, dec.theta_bar};
  const double c1 = prm.c1(), c2 = prm.c2();

  OscEstimate est;
  if (pot.amplitude == 0.0) {
    est.n_points = plan.point_count * static_cast<std::uint64_t>(plan.replicates);
  } else {
    est = rqmc_estimate<8>(plan, [&](const std::array<double, 8>& u) {
      const auto [mu, nu] = qmc::disk_map(u[0], u[1], rad);
      const auto sp = qmc::simplex_map(u[2], u[3]);
      const auto e3 = tg(u[4]);
      double w = measure * e3.weight;
      PhasePoint p;
      const double s = std::sqrt(1.0 - mu * mu - nu * nu);
      p.u_hat = Vec3(mu, nu, s);
      p.alpha = sp.alpha;
      p.beta = sp.beta;
      p.eta = Vec3(eta1, eta2, e3.value);
      for (int k = 0; k < 3; ++k) {
        const auto b = tg(u[5 + k]);
        p.xi[k] = b.value;
        w *= b.weight;
      }
      const Vec3 wv = detail::packet_center(kin.x, g, p.alpha, p.beta, p.eta, p.xi);
      const double th = p.u_hat.dot(wv) - g.b2 * p.eta.z() - g.b1 * p.xi.z() + c2 * p.alpha + c1 * p.beta;
      return amplitude_G(GraphOrder::Order12, p, kin, g, pot, extra) * expi(th / eps) * (w / s);
    });
  }
  est.truncation_radius = R;
  const double h = form_factor_sup_bound();
  const double v12 = std::exp(-0.5 * (eta1 * eta1 + eta2 * eta2) * pot.width * pot.width);
  est.tail_bound = pot.amplitude * pot.amplitude * v12 * h * h * dec.cap_area() * qmc::simplex_measure *
                   detail::gaussian_box_tail(pot, R, 4);
  detail::check_tail(plan, est);
  return est;
}

namespace detail {
struct LeadingParts {
  CriticalPoint cp;
  ComplexAmplitude G0;
  double delta0;
};

inline LeadingParts leading_parts(double eta1, double eta2, const Kinematics& kin, const PhysicalConfig& cfg,
                                  const DimensionlessGroups& g) {
  ChartParams prm{g, kin, eta1, eta2, 0.5 * pi - 1e-9};
  LeadingParts out;
  out.cp = critical_point_closed(prm);
  out.G0 = amplitude_G(GraphOrder::Order12, to_phase_point(out.cp.q0, prm), kin, g, cfg.potential);
  out.delta0 = -cfg.chi_bar * g.b2 * eta1;
  return out;
}
} // namespace detail

/// Stationary-phase leading term of integrate_I_eps:
///   (2 pi eps)^4 / (a^2 b1^2) e^{i Theta0 / eps} G_12(q0) e^{i delta0} e^{i pi mu0 / 4}.
inline ComplexAmplitude stationary_leading_I(double eta1, double eta2, const Kinematics& kin,
                                             const PhysicalConfig& cfg, const DimensionlessGroups& g) {
  const auto L = detail::leading_parts(eta1, eta2, kin, cfg, g);
  const double eps = cfg.epsilon;
  const double pre = std::pow(two_pi * eps, 4) / (g.a * g.a * g.b1 * g.b1);
  return pre * expi(L.cp.theta0 / eps) * L.G0 * expi(L.delta0) * expi(0.25 * pi * L.cp.signature);
}

/// Epsilon-independent integrand of the leading-order probability:
///   (2 pi)^4 G_12(q0) e^{i delta0} e^{i pi mu0 / 4}.
inline ComplexAmplitude leading_F(double eta1, double eta2, const Kinematics& kin, const PhysicalConfig& cfg,
                                  const DimensionlessGroups& g) {
  const auto L = detail::leading_parts(eta1, eta2, kin, cfg, g);
  return std::pow(two_pi, 4) * L.G0 * expi(L.delta0) * expi(0.25 * pi * L.cp.signature);
}

/// Majorant (sup|h|)^2 (2 pi)^4 |V~(eta1, eta2, eta3^0)| |V~(xi^0)| f(w0) of |leading_F|.
inline double leading_F_majorant(double eta1, double eta2, const Kinematics& kin, const PhysicalConfig& cfg,
                                 const DimensionlessGroups& g) {
  ChartParams prm{g, kin, eta1, eta2, 0.5 * pi - 1e-9};
  const CriticalPoint cp = critical_point_closed(prm);
  const double h = form_factor_sup_bound();
  const PotentialSpec& pot = cfg.potential;
  return h * h * std::pow(two_pi, 4) * std::abs(pot.transform(prm.eta(cp.q0.eta3))) *
         std::abs(pot.transform(cp.q0.xi)) * envelope_f(chart_w(cp.q0, prm));
}

} // namespace mott
