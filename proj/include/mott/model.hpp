#pragma once

// Physical kernels of the three-particle model in dimensionless variables:
// positions in units of the scattering length (x = R / gamma), momenta in
// inverse units (y = gamma k). Nothing here carries physical dimensions.

#include "mott/core.hpp"
#include "mott/quadrature.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace mott {

enum class PotentialKind { gaussian };

/// Fourier transform of the alpha-atom potential. The transform is the
/// primitive; the potential itself is never evaluated.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::gaussian;
  double amplitude = 1.0;
  double width = 1.0;

  void validate() const {
    if (!std::isfinite(amplitude)) throw ConfigError("amplitude must be finite", "potential.amplitude");
    if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("width must be positive", "potential.width");
  }

  /// V~(xi) = amplitude * exp(-|xi|^2 width^2 / 2)
  double transform(const Vec3& xi) const {
    return amplitude * std::exp(-0.5 * xi.squaredNorm() * width * width);
  }

  /// Standard deviation of the Gaussian density proportional to |V~| along
  /// one momentum axis.
  double momentum_scale() const { return 1.0 / width; }
};

/// Dimensionless inputs of one experiment.
struct PhysicalConfig {
  double epsilon = 0.1;       ///< hbar / (P0 gamma)
  double mass_ratio = 0.1;    ///< m / M
  double a1_over_gamma = 50.0;
  double a2_over_a1 = 2.0;
  double chi = 0.0;           ///< angle between the atom directions [rad]
  double chi_bar = 0.0;       ///< limit of chi_eps / eps entering delta_0
  double t_over_tau2 = 1.5;
  double lambda0 = 0.01;      ///< lambda / (M v0^2)
  PotentialSpec potential{};

  double a2_over_gamma() const { return a2_over_a1 * a1_over_gamma; }

  /// Hard invariants; violations are configuration errors.
  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(epsilon > 0.0) || !finite(epsilon)) throw ConfigError("must be > 0", "epsilon");
    if (!(mass_ratio > 0.0) || !finite(mass_ratio)) throw ConfigError("must be > 0", "mass_ratio");
    if (!(a1_over_gamma > 0.0) || !finite(a1_over_gamma)) throw ConfigError("must be > 0", "a1_over_gamma");
    if (!(a2_over_a1 >= 1.0) || !finite(a2_over_a1))
      throw ConfigError("must be >= 1 (the first atom is the closer one)", "a2_over_a1");
    if (!(t_over_tau2 > 1.0) || !finite(t_over_tau2)) throw ConfigError("must be > 1", "t_over_tau2");
    if (!(chi >= 0.0 && chi <= pi)) throw ConfigError("must lie in [0, pi]", "chi");
    if (!(chi_bar >= 0.0) || !finite(chi_bar)) throw ConfigError("must be >= 0", "chi_bar");
    if (!(lambda0 >= 0.0) || !finite(lambda0)) throw ConfigError("must be >= 0", "lambda0");
    potential.validate();
  }

  /// Soft checks of the semiclassical regime. Never fatal.
  std::vector<std::string> regime_warnings() const {
    std::vector<std::string> out;
    auto order_eps = [&](double v) {
      const double r = v / epsilon;
      return r >= 0.1 && r <= 10.0;
    };
    if (epsilon >= 0.5) out.push_back("epsilon >= 0.5: not in the semiclassical regime");
    if (!order_eps(1.0 / a1_over_gamma)) out.push_back("gamma/|a1| is not O(epsilon)");
    if (!order_eps(1.0 / a2_over_gamma())) out.push_back("gamma/|a2| is not O(epsilon)");
    if (!order_eps(mass_ratio)) out.push_back("m/M is not O(epsilon)");
    if (!order_eps(lambda0)) out.push_back("lambda0 is not O(epsilon)");
    return out;
  }
};

/// Order-one combinations of times and energies that parametrize the phases.
struct DimensionlessGroups {
  double a = 0.0;        ///< hbar t / (M gamma^2)
  double b1 = 0.0;       ///< hbar tau_1 / (M gamma^2)
  double b2 = 0.0;       ///< hbar tau_2 / (M gamma^2)
  double c_coeff = 0.0;  ///< c_j(y) = c_coeff * omega(y)
  double kappa = 0.0;    ///< lambda t / hbar

  /// Positivity and 0 < b1 <= b2 <= a. Raw groups may be degenerate
  /// (b1 == b2); groups built from a configuration with |a1| < |a2| are not.
  void validate() const {
    if (!(a > 0.0 && b1 > 0.0 && b2 > 0.0)) throw ConfigError("groups a, b1, b2 must be positive");
    if (!(b1 <= b2)) throw ConfigError("groups must satisfy b1 <= b2");
    if (!(b2 <= a)) throw ConfigError("groups must satisfy b2 <= a (t >= tau_2)");
    if (!(c_coeff >= 0.0) || !std::isfinite(c_coeff)) throw ConfigError("c_coeff must be >= 0");
  }

  double c(double omega_value) const { return c_coeff * omega_value; }
};

/// omega(y) = (1 + |y|^2) / 2
inline double omega(const Vec3& y) { return 0.5 * (1.0 + y.squaredNorm()); }

inline DimensionlessGroups build_groups(const PhysicalConfig& cfg, std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  DimensionlessGroups g;
  g.b1 = cfg.epsilon * cfg.a1_over_gamma;
  g.b2 = cfg.epsilon * cfg.a2_over_gamma();
  g.a = g.b2 * cfg.t_over_tau2;
  g.c_coeff = cfg.epsilon * g.a / cfg.mass_ratio;
  g.kappa = cfg.lambda0 * g.a / (cfg.epsilon * cfg.epsilon);
  if (warnings) {
    auto w = cfg.regime_warnings();
    warnings->insert(warnings->end(), w.begin(), w.end());
  }
  return g;
}

/// Bound state zeta0(x) = e^{-|x|} / (sqrt(2 pi) |x|). Singular at the origin.
inline double zeta0(const Vec3& x) {
  const double r = x.norm();
  if (r == 0.0) throw DomainError("zeta0 is singular at the origin; use zeta0_radial");
  return std::exp(-r) / (std::sqrt(two_pi) * r);
}

/// r * zeta0, finite everywhere.
inline double zeta0_radial(double r) { return std::exp(-r) / std::sqrt(two_pi); }

/// Continuum eigenfunction: plane wave minus the s-wave scattered term.
inline Complex phi0(const Vec3& x, const Vec3& y) {
  const double r = x.norm();
  if (r == 0.0) throw DomainError("phi0 is singular at the origin");
  const double ky = y.norm();
  const Complex scattered = expi(-ky * r) / (Complex(1.0, -ky) * r);
  return std::pow(two_pi, -1.5) * (expi(y.dot(x)) - scattered);
}

/// Normalization of the spherical wave.
inline double normalization_N(double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("normalization_N: epsilon must be positive");
  return 1.0 / (4.0 * std::pow(pi, 1.75) * std::sqrt(-std::expm1(-1.0 / (epsilon * epsilon))));
}

/// Spherical wave profile in units gamma = 1. Real-valued and radial.
inline ComplexAmplitude psi_wave(const Vec3& x, double epsilon) {
  const double n = normalization_N(epsilon);
  const double r = x.norm();
  const double s = r / epsilon;
  // sin(r/eps)/r, with the removable singularity at r = 0
  const double sinc_over_eps = (s < 1e-4) ? (1.0 - s * s / 6.0) / epsilon : std::sin(s) / r;
  return {4.0 * pi * n * std::exp(-0.5 * r * r) * sinc_over_eps, 0.0};
}

namespace detail {
// arctan(k / mu) / k for complex mu with Re mu > 0; series below k = 1e-4.
inline Complex atan_over_k(double k, Complex mu) {
  if (k < 1e-4) {
    const Complex m2 = mu * mu;
    return (1.0 - k * k / (3.0 * m2) + k * k * k * k / (5.0 * m2 * m2)) / mu;
  }
  return std::atan(Complex(k, 0.0) / mu) / k;
}
} // namespace detail

/// Form factor h(xi, y): overlap of exp(i xi.x) zeta0 with the continuum
/// eigenfunction phi0(., y), in closed form.
inline ComplexAmplitude form_factor_h(const Vec3& xi, const Vec3& y) {
  static const double prefactor = std::pow(two_pi, -3.5) * 4.0 * pi;
  const double k = xi.norm();
  const double ky = y.norm();
  const double plane = 1.0 / (1.0 + (xi + y).squaredNorm());
  const Complex mu(1.0, -ky);
  const Complex scattered = detail::atan_over_k(k, mu) / Complex(1.0, ky);
  return prefactor * (plane - scattered);
}

/// Rigorous bound sup_{xi,y} |h(xi, y)| <= 8 pi (2 pi)^{-7/2}, from
/// |h| <= (2pi)^{-3/2} int |phi0| |zeta0| and |1/(1 - i|y|)| <= 1.
inline double form_factor_sup_bound() { return 8.0 * pi * std::pow(two_pi, -3.5); }

/// Exact value of int dy |h(xi, y)|^2 at |xi| = k (bound-state completeness).
inline double form_factor_y_norm2(double k) {
  const double overlap = (k < 1e-6) ? 1.0 - k * k / 12.0 : (2.0 / k) * std::atan(0.5 * k);
  return std::pow(two_pi, -3.0) * (1.0 - overlap * overlap);
}

/// Node counts and cutoff of the direct spherical-coordinate quadrature.
struct OracleResolution {
  int radial_panels = 24;
  int radial_per_panel = 16;
  int polar = 64;
  int azimuthal = 64;
  double cutoff = 36.0;
  double tolerance = 1e-9;  ///< absolute; the radial truncation must stay below it

  OracleResolution coarser() const {
    OracleResolution r = *this;
    r.radial_panels = std::max(1, radial_panels / 2);
    r.polar = std::max(2, polar / 2);
    r.azimuthal = std::max(2, azimuthal / 2);
    return r;
  }

  OracleResolution finer() const {
    OracleResolution r = *this;
    r.radial_panels *= 2;
    r.polar *= 2;
    r.azimuthal *= 2;
    return r;
  }
};

struct OracleResult {
  ComplexAmplitude value;
  double error_estimate = 0.0;    ///< |value - value at coarser resolution| + truncation bound
  double truncation_bound = 0.0;  ///< bound on the discarded radial tail
};

namespace detail {
inline Complex h_direct(const Vec3& xi, const Vec3& y, const OracleResolution& res) {
  const double ky = y.norm();
  const quad::Rule radial =
      quad::composite_gauss_legendre(static_cast<std::size_t>(res.radial_panels),
                                     static_cast<std::size_t>(res.radial_per_panel), 0.0, res.cutoff);
  const quad::Rule polar = quad::gauss_legendre(static_cast<std::size_t>(res.polar));
  const int naz = res.azimuthal;
  const Vec3 k_plane = xi + y;
  const Complex scatter_coeff = 1.0 / Complex(1.0, ky);
  Complex total{};
  for (int ia = 0; ia < naz; ++ia) {
    const double phi = two_pi * (ia + 0.5) / naz;
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    Complex az_sum{};
    for (std::size_t ip = 0; ip < polar.size(); ++ip) {
      const double ct = polar.nodes[ip];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      const Vec3 n(st * cphi, st * sphi, ct);
      const double kp = k_plane.dot(n), kx = xi.dot(n);
      Complex r_sum{};
      for (std::size_t ir = 0; ir < radial.size(); ++ir) {
        const double r = radial.nodes[ir];
        // r^2 * conj(phi0) * zeta0 * exp(-i xi.x), common constants dropped
        const Complex plane = r * expi(-kp * r);
        const Complex scat = scatter_coeff * expi(ky * r - kx * r);
        r_sum += radial.weights[ir] * std::exp(-r) * (plane - scat);
      }
      az_sum += polar.weights[ip] * r_sum;
    }
    total += (two_pi / naz) * az_sum;
  }
  return std::pow(two_pi, -3.5) * total;
}
} // namespace detail

/// Direct numerical evaluation of the defining integral of h in spherical
/// coordinates. Verification path only; the closed form is form_factor_h.
inline OracleResult form_factor_h_oracle(const Vec3& xi, const Vec3& y, const OracleResolution& res = {}) {
  if (res.radial_panels < 1 || res.radial_per_panel < 1 || res.polar < 2 || res.azimuthal < 2)
    throw DomainError("form_factor_h_oracle: invalid resolution");
  OracleResult out;
  // int_c^inf (r + 1) e^{-r} dr * 4 pi, times the constants of the integrand
  out.truncation_bound = std::pow(two_pi, -3.5) * 4.0 * pi * std::exp(-res.cutoff) * (res.cutoff + 2.0);
  if (out.truncation_bound > res.tolerance)
    throw NumericalError("form_factor_h_oracle: cutoff too small for the requested tolerance");
  out.value = detail::h_direct(xi, y, res);
  const Complex coarse = detail::h_direct(xi, y, res.coarser());
  out.error_estimate = std::abs(out.value - coarse) + out.truncation_bound;
  return out;
}

/// g(xi, y) = V~(xi) h(xi, y)
inline ComplexAmplitude coupling_g(const Vec3& xi, const Vec3& y, const PotentialSpec& pot) {
  return pot.transform(xi) * form_factor_h(xi, y);
}

/// Gaussian wave-packet envelope f(w) = exp(-|w|^2 / 2).
inline double envelope_f(const Vec3& w) { return std::exp(-0.5 * w.squaredNorm()); }

} // namespace mott
