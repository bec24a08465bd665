#pragma once

// Phase functions of the second-order ionization amplitude, their exact
// derivatives in the aligned chart, the closed-form critical point, and the
// gradient lower bounds that rule out stationary points away from alignment.

#include "mott/core.hpp"
#include "mott/model.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

namespace mott {

/// Which atom is ionized first. Order12: the closer atom (a1) first.
enum class GraphOrder { Order12, Order21 };

inline const char* to_string(GraphOrder o) { return o == GraphOrder::Order12 ? "12" : "21"; }

/// Unit directions of the two atoms seen from the source. The frame is
/// fixed by a1_hat = e3 and a2_hat in the (1,3)-plane at angle chi, so every
/// output depends on the geometry only through chi.
struct AtomGeometry {
  Vec3 a1_hat{0.0, 0.0, 1.0};
  Vec3 a2_hat{0.0, 0.0, 1.0};

  static AtomGeometry from_angle(double chi) {
    AtomGeometry g;
    g.a2_hat = Vec3(std::sin(chi), 0.0, std::cos(chi));
    return g;
  }
};

/// Outer variables of the probability integral: alpha-particle position and
/// the momenta of the two ionized electrons.
struct Kinematics {
  Vec3 x = Vec3::Zero();
  Vec3 y1 = Vec3::Zero();
  Vec3 y2 = Vec3::Zero();
};

/// Integration variables of the general oscillatory integral.
struct PhasePoint {
  Vec3 u_hat{0.0, 0.0, 1.0};
  double alpha = 0.0;
  double beta = 0.0;
  Vec3 eta = Vec3::Zero();
  Vec3 xi = Vec3::Zero();

  void validate() const {
    if (std::abs(u_hat.norm() - 1.0) > 1e-12) throw DomainError("PhasePoint: u_hat must be a unit vector");
    if (!(0.0 <= beta && beta <= alpha && alpha <= 1.0))
      throw DomainError("PhasePoint: need 0 <= beta <= alpha <= 1");
  }
};

namespace detail {
// Per-graph assignment of atom data to the two momentum variables: eta
// belongs to the atom ionized second (time alpha t), xi to the one ionized
// first (time beta t).
struct GraphLegs {
  double b_eta, b_xi;
  Vec3 dir_eta, dir_xi;
  const Vec3* y_eta;
  const Vec3* y_xi;
};

inline GraphLegs legs(GraphOrder order, const DimensionlessGroups& g, const AtomGeometry& geo, const Kinematics& k) {
  if (order == GraphOrder::Order12) return {g.b2, g.b1, geo.a2_hat, geo.a1_hat, &k.y2, &k.y1};
  return {g.b1, g.b2, geo.a1_hat, geo.a2_hat, &k.y1, &k.y2};
}

inline Vec3 packet_center(const Vec3& x, const DimensionlessGroups& g, double alpha, double beta, const Vec3& eta,
                          const Vec3& xi) {
  return x + g.a * (alpha * eta + beta * xi);
}
} // namespace detail

/// Theta_lj(u, alpha, beta, eta, xi) for either graph order.
inline double theta_general(GraphOrder order, const PhasePoint& p, const Kinematics& k, const DimensionlessGroups& g,
                            const AtomGeometry& geo) {
  const auto L = detail::legs(order, g, geo, k);
  const Vec3 w = detail::packet_center(k.x, g, p.alpha, p.beta, p.eta, p.xi);
  return p.u_hat.dot(w) - L.b_eta * L.dir_eta.dot(p.eta) - L.b_xi * L.dir_xi.dot(p.xi) +
         g.c(omega(*L.y_eta)) * p.alpha + g.c(omega(*L.y_xi)) * p.beta;
}

/// Gradient of theta_general with respect to (eta, xi), in that order.
inline Eigen::Matrix<double, 6, 1> grad_theta_momentum(GraphOrder order, const PhasePoint& p, const Kinematics& k,
                                                       const DimensionlessGroups& g, const AtomGeometry& geo) {
  const auto L = detail::legs(order, g, geo, k);
  Eigen::Matrix<double, 6, 1> out;
  out.head<3>() = g.a * p.alpha * p.u_hat - L.b_eta * L.dir_eta;
  out.tail<3>() = g.a * p.beta * p.u_hat - L.b_xi * L.dir_xi;
  return out;
}

/// Non-oscillatory phase x.(eta + xi) + (a/2)(alpha eta^2 + beta xi^2 + 2 alpha eta.xi).
inline double slow_phase(const PhasePoint& p, const Vec3& x, const DimensionlessGroups& g) {
  return x.dot(p.eta + p.xi) +
         0.5 * g.a * (p.alpha * p.eta.squaredNorm() + p.beta * p.xi.squaredNorm() + 2.0 * p.alpha * p.eta.dot(p.xi));
}

/// delta_eps = -(sin chi / eps) b2 eta1 + ((1 - cos chi) / eps) b2 eta3
inline double misalignment_phase(double chi_eps, double epsilon, double b2, const Vec3& eta) {
  const double s = std::sin(0.5 * chi_eps);
  return (-std::sin(chi_eps) * eta.x() + 2.0 * s * s * eta.z()) * b2 / epsilon;
}

/// Parameters of the unimodular correction e^{i delta_eps} used when the
/// aligned-frame phase replaces the exact one.
struct AlignedExtra {
  double chi_eps = 0.0;
  double epsilon = 1.0;
};

/// G_lj = g(eta, y_j) g(xi, y_l) f(w) e^{i phi}, optionally times e^{i delta_eps}.
inline ComplexAmplitude amplitude_G(GraphOrder order, const PhasePoint& p, const Kinematics& k,
                                    const DimensionlessGroups& g, const PotentialSpec& pot,
                                    const std::optional<AlignedExtra>& aligned = std::nullopt) {
  const AtomGeometry geo{};  // the amplitude does not depend on the atom directions
  const auto L = detail::legs(order, g, geo, k);
  const Vec3 w = detail::packet_center(k.x, g, p.alpha, p.beta, p.eta, p.xi);
  double phase = slow_phase(p, k.x, g);
  if (aligned) phase += misalignment_phase(aligned->chi_eps, aligned->epsilon, g.b2, p.eta);
  return coupling_g(p.eta, *L.y_eta, pot) * coupling_g(p.xi, *L.y_xi, pot) * envelope_f(w) * expi(phase);
}

// ---------------------------------------------------------------------------
// Aligned chart: u = (mu, nu, sqrt(1 - mu^2 - nu^2)) on the cap around e3,
// with (eta1, eta2) held as parameters.

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

/// Fixed variable order of gradients and Hessians.
enum ChartIndex : int { kMu = 0, kNu, kAlpha, kBeta, kEta3, kXi1, kXi2, kXi3 };

struct ChartPoint {
  double mu = 0.0;
  double nu = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double eta3 = 0.0;
  Vec3 xi = Vec3::Zero();

  Vec8 to_vector() const {
    Vec8 v;
    v << mu, nu, alpha, beta, eta3, xi.x(), xi.y(), xi.z();
    return v;
  }

  static ChartPoint from_vector(const Vec8& v) {
    return {v[kMu], v[kNu], v[kAlpha], v[kBeta], v[kEta3], Vec3(v[kXi1], v[kXi2], v[kXi3])};
  }
};

/// Everything the aligned phase depends on besides the chart point.
struct ChartParams {
  DimensionlessGroups groups;
  Kinematics kin;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double theta_bar = pi / 4.0;  ///< cap aperture bounding the chart

  Vec3 eta(double eta3) const { return {eta1, eta2, eta3}; }
  double c1() const { return groups.c(omega(kin.y1)); }
  double c2() const { return groups.c(omega(kin.y2)); }
};

inline bool in_chart(const ChartPoint& q, double theta_bar) {
  const double sb = std::sin(theta_bar);
  return q.mu * q.mu + q.nu * q.nu <= sb * sb;
}

inline void require_chart(const ChartPoint& q, const ChartParams& prm) {
  if (!in_chart(q, prm.theta_bar)) throw ChartViolation("chart point outside the cap mu^2 + nu^2 <= sin^2(theta_bar)");
}

/// Converts a chart point to the general variables (with eta = (eta1, eta2, eta3)).
inline PhasePoint to_phase_point(const ChartPoint& q, const ChartParams& prm) {
  const double s = std::sqrt(1.0 - q.mu * q.mu - q.nu * q.nu);
  return {Vec3(q.mu, q.nu, s), q.alpha, q.beta, prm.eta(q.eta3), q.xi};
}

/// w = x + a (alpha eta + beta xi)
inline Vec3 chart_w(const ChartPoint& q, const ChartParams& prm) {
  return detail::packet_center(prm.kin.x, prm.groups, q.alpha, q.beta, prm.eta(q.eta3), q.xi);
}

/// Aligned phase mu w1 + nu w2 + s w3 - b2 eta3 - b1 xi3 + c2 alpha + c1 beta.
inline double theta_aligned(const ChartPoint& q, const ChartParams& prm) {
  require_chart(q, prm);
  const auto& g = prm.groups;
  const Vec3 w = chart_w(q, prm);
  const double s = std::sqrt(1.0 - q.mu * q.mu - q.nu * q.nu);
  return q.mu * w.x() + q.nu * w.y() + s * w.z() - g.b2 * q.eta3 - g.b1 * q.xi.z() + prm.c2() * q.alpha +
         prm.c1() * q.beta;
}

inline Vec8 grad_theta_chart(const ChartPoint& q, const ChartParams& prm) {
  require_chart(q, prm);
  const auto& g = prm.groups;
  const double a = g.a;
  const Vec3 w = chart_w(q, prm);
  const Vec3 eta = prm.eta(q.eta3);
  const double s = std::sqrt(1.0 - q.mu * q.mu - q.nu * q.nu);
  Vec8 d;
  d[kMu] = w.x() - q.mu / s * w.z();
  d[kNu] = w.y() - q.nu / s * w.z();
  d[kAlpha] = a * (q.mu * eta.x() + q.nu * eta.y() + s * eta.z()) + prm.c2();
  d[kBeta] = a * (q.mu * q.xi.x() + q.nu * q.xi.y() + s * q.xi.z()) + prm.c1();
  d[kEta3] = a * s * q.alpha - g.b2;
  d[kXi1] = a * q.mu * q.beta;
  d[kXi2] = a * q.nu * q.beta;
  d[kXi3] = a * s * q.beta - g.b1;
  return d;
}

inline Mat8 hessian_theta_chart(const ChartPoint& q, const ChartParams& prm) {
  require_chart(q, prm);
  const double a = prm.groups.a;
  const Vec3 w = chart_w(q, prm);
  const Vec3 eta = prm.eta(q.eta3);
  const double mu = q.mu, nu = q.nu;
  const double s = std::sqrt(1.0 - mu * mu - nu * nu);
  const double s3 = s * s * s;
  // derivatives of s(mu, nu)
  const double s_mu = -mu / s, s_nu = -nu / s;
  const double s_mumu = -(1.0 - nu * nu) / s3, s_nunu = -(1.0 - mu * mu) / s3, s_munu = -mu * nu / s3;

  Mat8 H = Mat8::Zero();
  auto set = [&H](int i, int j, double v) {
    H(i, j) = v;
    H(j, i) = v;
  };
  set(kMu, kMu, s_mumu * w.z());
  set(kMu, kNu, s_munu * w.z());
  set(kNu, kNu, s_nunu * w.z());
  set(kMu, kAlpha, a * (eta.x() + s_mu * eta.z()));
  set(kMu, kBeta, a * (q.xi.x() + s_mu * q.xi.z()));
  set(kMu, kEta3, a * s_mu * q.alpha);
  set(kMu, kXi1, a * q.beta);
  set(kMu, kXi3, a * s_mu * q.beta);
  set(kNu, kAlpha, a * (eta.y() + s_nu * eta.z()));
  set(kNu, kBeta, a * (q.xi.y() + s_nu * q.xi.z()));
  set(kNu, kEta3, a * s_nu * q.alpha);
  set(kNu, kXi2, a * q.beta);
  set(kNu, kXi3, a * s_nu * q.beta);
  set(kAlpha, kEta3, a * s);
  set(kBeta, kXi1, a * mu);
  set(kBeta, kXi2, a * nu);
  set(kBeta, kXi3, a * s);
  return H;
}

/// Zero-eigenvalue threshold relative to the spectral norm.
inline constexpr double kSignatureRelTol = 1e-10;

/// (#positive - #negative) eigenvalues of a symmetric matrix. Throws on a
/// near-degenerate matrix.
template <int N>
int hessian_signature(const Eigen::Matrix<double, N, N>& H) {
  if (std::abs(H.determinant()) <= 1e-12) throw NumericalError("hessian_signature: matrix is (near) degenerate");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("hessian_signature: eigen decomposition failed");
  const auto& ev = es.eigenvalues();
  const double tol = kSignatureRelTol * ev.cwiseAbs().maxCoeff();
  int sig = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= tol) throw NumericalError("hessian_signature: eigenvalue below the zero tolerance");
    sig += ev[i] > 0.0 ? 1 : -1;
  }
  return sig;
}

struct CriticalPoint {
  ChartPoint q0;
  double theta0 = 0.0;
  double abs_det_hessian = 0.0;
  double det_hessian = 0.0;  ///< numerical determinant with sign
  int signature = 0;
};

/// Unique critical point of the aligned phase: u = e3, alpha = b2/a,
/// beta = b1/a, eta3 = -c2/a, xi = (-(x1 + b2 eta1)/b1, -(x2 + b2 eta2)/b1, -c1/a).
inline ChartPoint critical_point_location(const ChartParams& prm) {
  const auto& g = prm.groups;
  const Vec3& x = prm.kin.x;
  ChartPoint q;
  q.alpha = g.b2 / g.a;
  q.beta = g.b1 / g.a;
  q.eta3 = -prm.c2() / g.a;
  q.xi = Vec3(-(x.x() + g.b2 * prm.eta1) / g.b1, -(x.y() + g.b2 * prm.eta2) / g.b1, -prm.c1() / g.a);
  return q;
}

inline CriticalPoint critical_point_closed(const ChartParams& prm) {
  const auto& g = prm.groups;
  g.validate();
  const Vec3& x = prm.kin.x;
  CriticalPoint cp;
  cp.q0 = critical_point_location(prm);
  cp.theta0 = x.z() + g.b1 * prm.c1() / g.a + g.b2 * prm.c2() / g.a;
  cp.abs_det_hessian = std::pow(g.a * g.b1, 4);
  const Mat8 H = hessian_theta_chart(cp.q0, prm);
  cp.det_hessian = H.determinant();
  cp.signature = hessian_signature(H);
  return cp;
}

struct NewtonOptions {
  int max_iterations = 60;
  double tolerance = 1e-13;  ///< max-norm of the gradient at convergence
};

struct NewtonResult {
  CriticalPoint point;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped Newton iteration on grad_theta_chart with the analytic Hessian as
/// Jacobian. Steps are halved until they stay in the chart and reduce |grad|.
inline NewtonResult solve_critical_newton(const ChartPoint& start, const ChartParams& prm,
                                          const NewtonOptions& opt = {}) {
  require_chart(start, prm);
  Vec8 z = start.to_vector();
  Vec8 grad = grad_theta_chart(start, prm);
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const double res = grad.cwiseAbs().maxCoeff();
    if (res <= opt.tolerance) {
      const ChartPoint q = ChartPoint::from_vector(z);
      NewtonResult out;
      out.iterations = it;
      out.residual = res;
      out.point.q0 = q;
      out.point.theta0 = theta_aligned(q, prm);
      const Mat8 H = hessian_theta_chart(q, prm);
      out.point.det_hessian = H.determinant();
      out.point.abs_det_hessian = std::abs(out.point.det_hessian);
      out.point.signature = hessian_signature(H);
      return out;
    }
    if (it == opt.max_iterations) break;
    const Mat8 H = hessian_theta_chart(ChartPoint::from_vector(z), prm);
    const Vec8 step = -H.fullPivLu().solve(grad);
    if (!step.allFinite()) throw NumericalError("solve_critical_newton: singular Newton system");
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Vec8 trial = z + t * step;
      const ChartPoint qt = ChartPoint::from_vector(trial);
      if (!in_chart(qt, prm.theta_bar)) continue;
      const Vec8 gt = grad_theta_chart(qt, prm);
      if (gt.norm() < grad.norm() || gt.cwiseAbs().maxCoeff() <= opt.tolerance) {
        z = trial;
        grad = gt;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NumericalError("solve_critical_newton: no admissible step (iterate left the chart)");
  }
  throw NumericalError("solve_critical_newton: no convergence within the iteration limit");
}

// ---------------------------------------------------------------------------
// Gradient lower bounds

struct BoundFamily {
  enum class Kind { Delta21, Delta12, DeltaCone };
  Kind kind = Kind::Delta21;
  double theta_bar = 0.0;  ///< DeltaCone only, in (0, pi/2)

  static BoundFamily delta21() { return {Kind::Delta21, 0.0}; }
  static BoundFamily delta12() { return {Kind::Delta12, 0.0}; }
  static BoundFamily cone(double theta_bar) { return {Kind::DeltaCone, theta_bar}; }
};

namespace detail {
inline void check_cone(const BoundFamily& f) {
  if (f.kind == BoundFamily::Kind::DeltaCone && !(f.theta_bar > 0.0 && f.theta_bar < 0.5 * pi))
    throw DomainError("DeltaCone requires theta_bar in (0, pi/2)");
}
} // namespace detail

/// Closed-form Delta for each family in terms of the groups and the angle
/// chi between the atoms. Throws when the geometry makes it nonpositive.
/// Delta12 is a true lower bound for chi <= pi/2 only: for obtuse angles the
/// minimum over u of 2 - (u.a1)^2 - (u.a2)^2 is 1 - |cos chi|, and the simplex
/// point beta = 0 already reaches b1^2 < b1^2 (1 - cos chi).
inline double delta_lower_bound(const BoundFamily& f, const DimensionlessGroups& g, double chi) {
  detail::check_cone(f);
  double d = 0.0;
  switch (f.kind) {
    case BoundFamily::Kind::Delta21: d = (g.b2 - g.b1) / std::sqrt(2.0); break;
    case BoundFamily::Kind::Delta12: d = std::min(g.b1, g.b2) * std::sqrt(1.0 - std::cos(chi)); break;
    case BoundFamily::Kind::DeltaCone: d = std::sqrt(2.0) * std::min(g.b1, g.b2) * std::sin(f.theta_bar); break;
  }
  if (!(d > 0.0)) throw DomainError("delta_lower_bound: nonpositive bound, geometry preconditions violated");
  return d;
}

/// Same bounds written in the physical inputs.
inline double delta_lower_bound(const BoundFamily& f, const PhysicalConfig& cfg) {
  detail::check_cone(f);
  const double e = cfg.epsilon;
  double d = 0.0;
  switch (f.kind) {
    case BoundFamily::Kind::Delta21:
      d = e / std::sqrt(2.0) * cfg.a2_over_gamma() * (1.0 - 1.0 / cfg.a2_over_a1);
      break;
    case BoundFamily::Kind::Delta12: d = e * cfg.a1_over_gamma * std::sqrt(1.0 - std::cos(cfg.chi)); break;
    case BoundFamily::Kind::DeltaCone:
      d = std::sqrt(2.0) * e * cfg.a1_over_gamma * std::sin(f.theta_bar);
      break;
  }
  if (!(d > 0.0)) throw DomainError("delta_lower_bound: nonpositive bound, geometry preconditions violated");
  return d;
}

struct DescentBudget {
  int starts = 64;
  int max_iterations = 20000;
  double tolerance = 1e-13;  ///< stop when the projected gradient norm falls below
  std::uint64_t seed = 12345;
};

struct BoundWitness {
  Vec3 u_hat;
  double alpha = 0.0;
  double beta = 0.0;
};

struct BoundSearchResult {
  double min_value = 0.0;  ///< minimum of |grad_{eta,xi} Theta|^2 found
  BoundWitness witness;
  int converged_starts = 0;
  int starts = 0;
};

namespace detail {
// Euclidean projection onto the triangle {0 <= beta <= alpha <= 1}.
inline std::pair<double, double> project_simplex(double al, double be) {
  if (0.0 <= be && be <= al && al <= 1.0) return {al, be};
  auto clamp01 = [](double t) { return std::clamp(t, 0.0, 1.0); };
  const std::array<std::pair<double, double>, 3> cand = {
      std::pair{clamp01(al), 0.0},                          // beta = 0
      std::pair{1.0, clamp01(be)},                          // alpha = 1
      std::pair{clamp01(0.5 * (al + be)), clamp01(0.5 * (al + be))}  // alpha = beta
  };
  double best = std::numeric_limits<double>::infinity();
  std::pair<double, double> out{0.0, 0.0};
  for (const auto& c : cand) {
    const double d = (c.first - al) * (c.first - al) + (c.second - be) * (c.second - be);
    if (d < best) {
      best = d;
      out = c;
    }
  }
  return out;
}

// Projection of a unit vector onto {polar angle >= theta_bar}.
inline Vec3 project_cone_complement(const Vec3& u, double theta_bar) {
  const double ct = std::clamp(u.z(), -1.0, 1.0);
  if (std::acos(ct) >= theta_bar) return u;
  Vec3 h(u.x(), u.y(), 0.0);
  const double hn = h.norm();
  h = hn > 0.0 ? Vec3(h / hn) : Vec3(1.0, 0.0, 0.0);
  return std::sin(theta_bar) * h + std::cos(theta_bar) * Vec3(0.0, 0.0, 1.0);
}

struct GradObjective {
  double a;
  Vec3 B_eta, B_xi;  // b_j a_j and b_l a_l
  // |a alpha u - B_eta|^2 + |a beta u - B_xi|^2
  double value(const Vec3& u, double al, double be) const {
    return (a * al * u - B_eta).squaredNorm() + (a * be * u - B_xi).squaredNorm();
  }
  // exact minimizer over the triangle: the Hessian in (alpha, beta) is 2a^2 I
  std::pair<double, double> best_ab(const Vec3& u) const {
    return project_simplex(u.dot(B_eta) / a, u.dot(B_xi) / a);
  }
  Vec3 grad_u(const Vec3& u, double al, double be) const {
    const Vec3 g = -2.0 * a * (al * B_eta + be * B_xi);
    return g - g.dot(u) * u;  // tangent component
  }
};
} // namespace detail

namespace detail {
// Standard normal variate from two raw 64-bit draws (Box-Muller), so the
// sequence is the same for every standard library.
inline double normal_from(std::mt19937_64& rng) {
  constexpr double scale = 1.0 / 9007199254740992.0;
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * scale;
  const double u2 = (static_cast<double>(rng() >> 11) + 0.5) * scale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Multistart projected descent on GradObjective. theta_bar > 0 restricts u
// to polar angles >= theta_bar.
inline BoundSearchResult minimize_gradient_objective(const GradObjective& obj, double theta_bar,
                                                     const DescentBudget& budget) {
  const bool cone = theta_bar > 0.0;
  auto project_u = [&](Vec3 u) {
    u.normalize();
    return cone ? project_cone_complement(u, theta_bar) : u;
  };
  const double curvature = obj.a * obj.a + obj.B_eta.norm() * obj.B_xi.norm() + 1.0;

  std::mt19937_64 rng(budget.seed);
  BoundSearchResult best;
  best.min_value = std::numeric_limits<double>::infinity();
  best.starts = budget.starts;
  for (int s = 0; s < budget.starts; ++s) {
    const double n1 = normal_from(rng), n2 = normal_from(rng), n3 = normal_from(rng);
    Vec3 u = project_u(Vec3(n1, n2, n3));
    auto [al, be] = obj.best_ab(u);
    double val = obj.value(u, al, be);
    double step = 0.5 / curvature;
    bool converged = false;
    for (int it = 0; it < budget.max_iterations; ++it) {
      const Vec3 gu = obj.grad_u(u, al, be);
      // projected-gradient stationarity measure
      const Vec3 probe = project_u(u - 1e-3 * gu);
      if ((probe - u).norm() / 1e-3 <= budget.tolerance) {
        converged = true;
        break;
      }
      bool moved = false;
      for (int h = 0; h < 60; ++h) {
        const Vec3 un = project_u(u - step * gu);
        const auto [an, bn] = obj.best_ab(un);
        const double vn = obj.value(un, an, bn);
        if (vn <= val - 1e-4 * (un - u).squaredNorm() / step) {
          const bool stalled = (un - u).norm() < 1e-16;
          u = un;
          al = an;
          be = bn;
          val = vn;
          step *= 2.0;
          moved = !stalled;
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        converged = true;
        break;
      }
    }
    if (converged) ++best.converged_starts;
    const BoundWitness w{u, al, be};
    auto key = [](const BoundWitness& b) {
      return std::tuple{b.u_hat.x(), b.u_hat.y(), b.u_hat.z(), b.alpha, b.beta};
    };
    if (val < best.min_value || (val == best.min_value && key(w) < key(best.witness))) {
      best.min_value = val;
      best.witness = w;
    }
  }
  if (best.converged_starts == 0)
    throw NumericalError("gradient minimization: no start converged; best value " + std::to_string(best.min_value));
  return best;
}
} // namespace detail

/// Multistart projected descent for min |grad_{eta,xi} Theta|^2 over the
/// family's domain (u on S^2, or on the complement of the cap for DeltaCone;
/// 0 <= beta <= alpha <= 1). Ties are broken by the lowest value, then the
/// lexicographically smallest witness.
inline BoundSearchResult verify_delta_bound_numeric(const BoundFamily& f, const DimensionlessGroups& g, double chi,
                                                    const DescentBudget& budget = {}) {
  detail::check_cone(f);
  const AtomGeometry geo = f.kind == BoundFamily::Kind::DeltaCone ? AtomGeometry{} : AtomGeometry::from_angle(chi);
  detail::GradObjective obj{g.a, {}, {}};
  if (f.kind == BoundFamily::Kind::Delta21) {
    obj.B_eta = g.b1 * geo.a1_hat;
    obj.B_xi = g.b2 * geo.a2_hat;
  } else {
    obj.B_eta = g.b2 * geo.a2_hat;
    obj.B_xi = g.b1 * geo.a1_hat;
  }
  return detail::minimize_gradient_objective(obj, f.kind == BoundFamily::Kind::DeltaCone ? f.theta_bar : 0.0,
                                             budget);
}

/// Global minimum of |grad_{eta,xi} Theta_lj|^2 over S^2 x simplex for the
/// exact geometry: the point where the momentum integrals are least
/// suppressed.
inline BoundSearchResult gradient_minimum(GraphOrder order, const DimensionlessGroups& g, const AtomGeometry& geo,
                                          const DescentBudget& budget = {}) {
  const Kinematics none;
  const auto L = detail::legs(order, g, geo, none);
  return detail::minimize_gradient_objective(detail::GradObjective{g.a, L.b_eta * L.dir_eta, L.b_xi * L.dir_xi},
                                             0.0, budget);
}

} // namespace mott
