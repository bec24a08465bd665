#pragma once

// Momentum-reduced estimator of the full amplitude integral. The form
// factor is written as a superposition of Gaussians,
//
//   h(xi, y) = C [ int_0^inf dt e^{-t} e^{-t |xi + y|^2}
//                - e^{-i th} int_0^1 ds int_0^inf dtau e^{-tau lam} e^{-tau s^2 e^{i th} |xi|^2} ],
//
// with th = atan|y| and lam = (1 + |y|^2) e^{-i th}. For fixed (u, alpha,
// beta) and mixture parameters the six momentum integrals are then complex
// Gaussian integrals with a closed form, and the large 1/eps oscillation of
// the momentum variables is carried out exactly. What remains is an
// eight-dimensional integral (sphere, simplex, two mixture variables per
// momentum) that is sampled by randomized QMC with importance sampling
// around the minimum of |grad_{eta,xi} Theta|.

#include "mott/oscillatory.hpp"

#include <array>
#include <cmath>

namespace mott {

namespace mixture {

using Vec3c = Eigen::Matrix<Complex, 3, 1>;

/// One Gaussian weight * exp(-p |xi + q|^2) of the form-factor superposition.
struct Component {
  Complex p;
  Vec3 q;
  Complex weight;
};

inline double form_factor_constant() { return 4.0 * pi * std::pow(two_pi, -3.5); }

/// Plane-wave part at mixture parameter t >= 0 (weight per unit t).
inline Component plane(double t, const Vec3& y) { return {Complex(t, 0.0), y, Complex(std::exp(-t), 0.0)}; }

/// Scattered part at (s, tau) in [0,1] x [0, inf) (weight per unit s tau),
/// including the minus sign of h.
inline Component scattered(double s, double tau, const Vec3& y) {
  const double ky = y.norm();
  const double th = std::atan(ky);
  const Complex rot = expi(th);
  const Complex lam = (1.0 + ky * ky) / rot;
  return {tau * s * s * rot, Vec3::Zero(), -std::exp(-tau * lam) / rot};
}

/// The map t = u / (1 - u) from [0, 1) to [0, inf) and its Jacobian.
struct HalfLine {
  double value;
  double jacobian;
};
inline HalfLine half_line(double u) {
  const double om = 1.0 - u;
  return {u / om, 1.0 / (om * om)};
}

/// Value of the Gaussian superposition at (xi, y) by tensor Gauss-Legendre
/// quadrature in the mapped mixture variables. Verification path only.
inline Complex form_factor_from_mixture(const Vec3& xi, const Vec3& y, int nodes = 200) {
  const quad::Rule r = quad::gauss_legendre(static_cast<std::size_t>(nodes), 0.0, 1.0);
  auto gauss = [&](const Component& c) { return c.weight * std::exp(-c.p * (xi + c.q).squaredNorm()); };
  Complex plane_sum{}, scat_sum{};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto t = half_line(r.nodes[i]);
    plane_sum += r.weights[i] * t.jacobian * gauss(plane(t.value, y));
    Complex inner{};
    for (std::size_t j = 0; j < r.size(); ++j) inner += r.weights[j] * gauss(scattered(r.nodes[j], t.value, y));
    scat_sum += r.weights[i] * t.jacobian * inner;
  }
  return form_factor_constant() * (plane_sum + scat_sum);
}

/// int_{R^6} exp(-1/2 z^T (M (x) I_3) z + B^T z + c0) dz for z = (z1, z2) in
/// R^3 x R^3 and a complex symmetric 2x2 M with positive definite real part.
inline Complex gaussian_pair_integral(Complex m11, Complex m12, Complex m22, const Vec3c& b1, const Vec3c& b2,
                                      Complex c0) {
  const Complex det = m11 * m22 - m12 * m12;
  const Complex tr = m11 + m22;
  const Complex disc = std::sqrt(tr * tr - 4.0 * det);
  const Complex l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
  // eigenvalues lie in the right half plane, so principal roots continue the
  // real positive definite case
  const Complex inv_sqrt_det = 1.0 / (std::sqrt(l1) * std::sqrt(l2));
  Complex quad{};
  for (int k = 0; k < 3; ++k) quad += m22 * b1[k] * b1[k] - 2.0 * m12 * b1[k] * b2[k] + m11 * b2[k] * b2[k];
  quad /= det;
  return std::pow(two_pi, 3) * inv_sqrt_det * inv_sqrt_det * inv_sqrt_det * std::exp(c0 + 0.5 * quad);
}

} // namespace mixture

/// Importance-sampling settings of the reduced estimator.
struct ReducedSampling {
  double scale = 2.0;        ///< proposal scale in units of eps / a (simplex) and eps / (a alpha*) (sphere)
  double defensive = 0.15;   ///< probability of the uniform component per variable group
  DescentBudget center_search{16, 20000, 1e-13, 12345};
};

namespace detail {
// Truncated Cauchy on [0, 1] mixed with the uniform density.
class IntervalProposal {
public:
  IntervalProposal(double center, double scale, double defensive)
      : c_(center), s_(scale), d_(defensive), a0_(std::atan(-center / scale)),
        a1_(std::atan((1.0 - center) / scale)) {}

  double sample(double u) const {
    if (u < d_) return u / d_;
    const double v = (u - d_) / (1.0 - d_);
    return std::clamp(c_ + s_ * std::tan(a0_ + v * (a1_ - a0_)), 0.0, 1.0);
  }

  double density(double x) const {
    const double z = (x - c_) / s_;
    return d_ + (1.0 - d_) / (s_ * (1.0 + z * z) * (a1_ - a0_));
  }

private:
  double c_, s_, d_, a0_, a1_;
};

// Radially symmetric proposal on S^2 around `center`: the geodesic distance
// has the radial law of a planar Cauchy distribution, mixed with the
// uniform density.
class SphereProposal {
public:
  SphereProposal(const Vec3& center, double scale, double defensive) : c_(center.normalized()), s_(scale), d_(defensive) {
    const Vec3 trial = std::abs(c_.x()) < 0.9 ? Vec3(1.0, 0.0, 0.0) : Vec3(0.0, 1.0, 0.0);
    e1_ = (trial - trial.dot(c_) * c_).normalized();
    e2_ = c_.cross(e1_);
    z_ = 1.0 - s_ / std::sqrt(pi * pi + s_ * s_);
  }

  Vec3 sample(double u, double v) const {
    if (u < d_) return qmc::sphere_map(u / d_, v);
    const double f = (u - d_) / (1.0 - d_);
    const double r = s_ / (1.0 - f * z_);
    const double th = std::min(pi, std::sqrt(std::max(0.0, r * r - s_ * s_)));
    const double ph = two_pi * v;
    return std::cos(th) * c_ + std::sin(th) * (std::cos(ph) * e1_ + std::sin(ph) * e2_);
  }

  double density(const Vec3& u) const {
    const double th = std::atan2(u.cross(c_).norm(), u.dot(c_));
    const double st = std::sin(th);
    double local;
    if (th < 1e-8) {
      local = 1.0 / (two_pi * s_ * s_ * z_);  // limit of th / sin th -> 1
    } else {
      const double rr = th * th + s_ * s_;
      local = s_ * th / (rr * std::sqrt(rr) * z_) / (two_pi * st);
    }
    return d_ / qmc::sphere_measure + (1.0 - d_) * local;
  }

private:
  Vec3 c_, e1_, e2_;
  double s_, d_, z_;
};

using mixture::Vec3c;

inline Vec3c to_complex(const Vec3& v) { return v.cast<Complex>(); }
} // namespace detail

/// Estimate of the same ten-dimensional amplitude as integrate_G_eps, with
/// the momentum integrals done in closed form (see the file comment). Only
/// the Gaussian potential is supported. The momentum integrals extend over
/// all of R^6, so no truncation radius is involved.
inline OscEstimate integrate_G_eps_reduced(GraphOrder order, const Kinematics& kin, const PhysicalConfig& cfg,
                                           const DimensionlessGroups& g, const QuadraturePlan& plan,
                                           const ReducedSampling& smp = {}) {
  const PotentialSpec& pot = cfg.potential;
  OscEstimate est;
  if (pot.amplitude == 0.0) {
    est.n_points = plan.point_count * static_cast<std::uint64_t>(plan.replicates);
    return est;
  }
  const double eps = cfg.epsilon;
  const double a = g.a;
  const double W = pot.width * pot.width;
  const AtomGeometry geo = AtomGeometry::from_angle(cfg.chi);
  const auto legs = detail::legs(order, g, geo, kin);
  const Vec3 B_eta = legs.b_eta * legs.dir_eta, B_xi = legs.b_xi * legs.dir_xi;
  const double c_eta = g.c(omega(*legs.y_eta)), c_xi = g.c(omega(*legs.y_xi));
  const Vec3& x = kin.x;
  const Vec3& y_eta = *legs.y_eta;
  const Vec3& y_xi = *legs.y_xi;

  const BoundSearchResult center = gradient_minimum(order, g, geo, smp.center_search);
  const double s_ab = smp.scale * eps / a;
  const double s_u = std::min(1.0, smp.scale * eps / (a * std::max(center.witness.alpha, 1e-3)));
  const detail::IntervalProposal prop_alpha(center.witness.alpha, s_ab, smp.defensive);
  const detail::IntervalProposal prop_beta(center.witness.beta, s_ab, smp.defensive);
  const detail::SphereProposal prop_u(center.witness.u_hat, s_u, smp.defensive);

  const double amp2 = pot.amplitude * pot.amplitude;
  const double C2 = std::pow(mixture::form_factor_constant(), 2);
  const Complex I(0.0, 1.0);
  const detail::Vec3c ix = I * detail::to_complex(x);

  est = rqmc_estimate<8>(plan, [&](const std::array<double, 8>& u) -> Complex {
    const Vec3 uh = prop_u.sample(u[0], u[1]);
    const double al = prop_alpha.sample(u[2]);
    const double be = prop_beta.sample(u[3]);
    if (be > al) return Complex(0.0, 0.0);
    const double q = prop_u.density(uh) * prop_alpha.density(al) * prop_beta.density(be);

    const auto t_eta = mixture::half_line(u[4]);
    const auto t_xi = mixture::half_line(u[6]);
    const std::array<mixture::Component, 2> comp_eta = {mixture::plane(t_eta.value, y_eta),
                                                        mixture::scattered(u[5], t_eta.value, y_eta)};
    const std::array<mixture::Component, 2> comp_xi = {mixture::plane(t_xi.value, y_xi),
                                                       mixture::scattered(u[7], t_xi.value, y_xi)};

    const Complex base11 = W + a * a * al * al - I * (a * al);
    const Complex base22 = W + a * a * be * be - I * (a * be);
    const Complex m12 = a * a * al * be - I * (a * al);
    const detail::Vec3c lin_eta = detail::to_complex(-a * al * x) + ix + (I / eps) * detail::to_complex(a * al * uh - B_eta);
    const detail::Vec3c lin_xi = detail::to_complex(-a * be * x) + ix + (I / eps) * detail::to_complex(a * be * uh - B_xi);
    const Complex c_base = -0.5 * x.squaredNorm() + (I / eps) * (uh.dot(x) + c_eta * al + c_xi * be);

    Complex sum{};
    for (const auto& ce : comp_eta) {
      const detail::Vec3c b1 = lin_eta - 2.0 * ce.p * detail::to_complex(ce.q);
      for (const auto& cx : comp_xi) {
        const detail::Vec3c b2 = lin_xi - 2.0 * cx.p * detail::to_complex(cx.q);
        const Complex c0 = c_base - ce.p * ce.q.squaredNorm() - cx.p * cx.q.squaredNorm();
        sum += ce.weight * cx.weight *
               mixture::gaussian_pair_integral(base11 + 2.0 * ce.p, m12, base22 + 2.0 * cx.p, b1, b2, c0);
      }
    }
    return amp2 * C2 * sum * (t_eta.jacobian * t_xi.jacobian / q);
  });
  est.truncation_radius = 0.0;
  est.tail_bound = 0.0;
  return est;
}

} // namespace mott
