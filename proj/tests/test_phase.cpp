#include "mott/phase.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mott;

namespace {

DimensionlessGroups groups(double a, double b1, double b2, double c) {
  DimensionlessGroups g;
  g.a = a;
  g.b1 = b1;
  g.b2 = b2;
  g.c_coeff = c;
  return g;
}

ChartParams worked_params() {
  ChartParams p;
  p.groups = groups(2.0, 0.5, 1.0, 0.6);
  p.kin.x = Vec3(0.1, -0.2, 0.4);
  p.kin.y1 = Vec3::Zero();
  p.kin.y2 = Vec3(2.0, 2.0, 2.0) / 3.0;
  p.eta1 = 0.3;
  p.eta2 = -0.1;
  return p;
}

ChartParams generic_params() {
  ChartParams p;
  p.groups = groups(6.0, 2.0, 4.0, 1.0);
  p.kin.x = Vec3(0.1, -0.2, 0.4);
  p.kin.y1 = Vec3(0.3, 0.2, -0.1);
  p.kin.y2 = Vec3(-0.2, 0.1, 0.3);
  p.eta1 = 0.3;
  p.eta2 = -0.1;
  return p;
}

} // namespace

TEST(ThetaGeneral, DirectSubstitution) {
  const auto g = groups(3.0, 1.0, 2.0, 0.5);
  const AtomGeometry geo = AtomGeometry::from_angle(0.7);
  Kinematics k{Vec3(0.2, 0.1, -0.3), Vec3(0.5, 0, 0), Vec3(0, 1, 0)};
  PhasePoint p{Vec3(0.6, 0.0, 0.8), 0.7, 0.2, Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.5, 0.1)};
  const Vec3 w = k.x + g.a * (p.alpha * p.eta + p.beta * p.xi);
  const double expect12 = p.u_hat.dot(w) - g.b2 * geo.a2_hat.dot(p.eta) - g.b1 * geo.a1_hat.dot(p.xi) +
                          g.c(omega(k.y2)) * p.alpha + g.c(omega(k.y1)) * p.beta;
  EXPECT_NEAR(theta_general(GraphOrder::Order12, p, k, g, geo), expect12, 1e-14);
  const double expect21 = p.u_hat.dot(w) - g.b1 * geo.a1_hat.dot(p.eta) - g.b2 * geo.a2_hat.dot(p.xi) +
                          g.c(omega(k.y1)) * p.alpha + g.c(omega(k.y2)) * p.beta;
  EXPECT_NEAR(theta_general(GraphOrder::Order21, p, k, g, geo), expect21, 1e-14);
}

TEST(ThetaGeneral, GradientMatchesFiniteDifferences) {
  const auto g = groups(3.0, 1.0, 2.0, 0.5);
  const AtomGeometry geo = AtomGeometry::from_angle(0.4);
  Kinematics k{Vec3(0.2, 0.1, -0.3), Vec3(0.5, 0, 0), Vec3(0, 1, 0)};
  PhasePoint p{Vec3(0.0, 0.6, 0.8), 0.7, 0.2, Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.5, 0.1)};
  for (GraphOrder o : {GraphOrder::Order12, GraphOrder::Order21}) {
    const auto grad = grad_theta_momentum(o, p, k, g, geo);
    for (int i = 0; i < 6; ++i) {
      PhasePoint hi = p, lo = p;
      Vec3& vh = i < 3 ? hi.eta : hi.xi;
      Vec3& vl = i < 3 ? lo.eta : lo.xi;
      vh[i % 3] += 1e-6;
      vl[i % 3] -= 1e-6;
      const double fd = (theta_general(o, hi, k, g, geo) - theta_general(o, lo, k, g, geo)) / 2e-6;
      EXPECT_NEAR(grad[i], fd, 1e-8);
    }
  }
}

TEST(ThetaAligned, AgreesWithGeneralAtZeroAngle) {
  const ChartParams prm = generic_params();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int i = 0; i < 30; ++i) {
    ChartPoint q{u(rng), u(rng), 0.8, 0.3, u(rng), Vec3(u(rng), u(rng), u(rng))};
    const double general =
        theta_general(GraphOrder::Order12, to_phase_point(q, prm), prm.kin, prm.groups, AtomGeometry::from_angle(0.0));
    EXPECT_NEAR(theta_aligned(q, prm), general, 1e-13);
  }
}

TEST(ThetaAligned, OutsideChartThrows) {
  const ChartParams prm = generic_params();
  ChartPoint q;
  q.mu = 0.8;
  EXPECT_THROW(theta_aligned(q, prm), ChartViolation);
  EXPECT_THROW(grad_theta_chart(q, prm), ChartViolation);
}

TEST(SlowPhase, ClosedForm) {
  const auto g = groups(2.0, 1.0, 1.5, 0.0);
  PhasePoint p{Vec3(0, 0, 1), 0.5, 0.25, Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const Vec3 x(1, 2, 3);
  // x.(eta+xi) = 3; (a/2)(0.5 + 0.25 + 0) = 0.75
  EXPECT_NEAR(slow_phase(p, x, g), 3.75, 1e-15);
}

TEST(MisalignmentPhase, Values) {
  EXPECT_EQ(misalignment_phase(0.0, 0.1, 3.0, Vec3(1, 2, 3)), 0.0);
  const double chi = 0.02, eps = 0.1, b2 = 3.0;
  const Vec3 eta(0.5, 0.0, -0.7);
  EXPECT_NEAR(misalignment_phase(chi, eps, b2, eta),
              (-std::sin(chi) * eta.x() + (1.0 - std::cos(chi)) * eta.z()) * b2 / eps, 1e-14);
}

TEST(AmplitudeG, ModulusAndZero) {
  const auto g = groups(3.0, 1.0, 2.0, 0.5);
  Kinematics k{Vec3(0.2, 0.1, -0.3), Vec3(0.5, 0, 0), Vec3(0, 1, 0)};
  PhasePoint p{Vec3(0, 0, 1), 0.7, 0.2, Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.5, 0.1)};
  PotentialSpec pot;
  const Complex plain = amplitude_G(GraphOrder::Order12, p, k, g, pot);
  const Complex tilted = amplitude_G(GraphOrder::Order12, p, k, g, pot, AlignedExtra{0.05, 0.1});
  EXPECT_NEAR(std::abs(plain), std::abs(tilted), 1e-15);
  EXPECT_LE(std::abs(plain), std::pow(form_factor_sup_bound(), 2) * pot.amplitude * pot.amplitude);
  pot.amplitude = 0.0;
  EXPECT_EQ(std::abs(amplitude_G(GraphOrder::Order12, p, k, g, pot)), 0.0);
}

TEST(ChartDerivatives, SelectedEntries) {
  const ChartParams prm = generic_params();
  ChartPoint q{0.1, -0.2, 0.6, 0.3, 0.2, Vec3(0.1, 0.4, -0.3)};
  const Vec8 d = grad_theta_chart(q, prm);
  EXPECT_NEAR(d[kXi1], prm.groups.a * q.mu * q.beta, 1e-15);
  const Mat8 H = hessian_theta_chart(q, prm);
  EXPECT_NEAR(H(kAlpha, kEta3), prm.groups.a * std::sqrt(1 - q.mu * q.mu - q.nu * q.nu), 1e-14);
  EXPECT_NEAR((H - H.transpose()).cwiseAbs().maxCoeff(), 0.0, 0.0);
}

TEST(ChartDerivatives, HessianMatchesFiniteDifferenceOfGradient) {
  const ChartParams prm = generic_params();
  const ChartPoint q{0.15, 0.1, 0.6, 0.3, 0.2, Vec3(0.1, 0.4, -0.3)};
  const Mat8 H = hessian_theta_chart(q, prm);
  const double h = 1e-6;
  for (int j = 0; j < 8; ++j) {
    Vec8 zp = q.to_vector(), zm = q.to_vector();
    zp[j] += h;
    zm[j] -= h;
    const Vec8 col =
        (grad_theta_chart(ChartPoint::from_vector(zp), prm) - grad_theta_chart(ChartPoint::from_vector(zm), prm)) /
        (2 * h);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(H(i, j), col[i], 1e-6) << i << "," << j;
  }
}

TEST(Signature, IdentityAndDegenerate) {
  EXPECT_EQ(hessian_signature<8>(Mat8::Identity()), 8);
  EXPECT_EQ(hessian_signature<8>(-Mat8::Identity()), -8);
  Mat8 D = Mat8::Identity();
  D(7, 7) = 0.0;
  EXPECT_THROW(hessian_signature<8>(D), NumericalError);
}

TEST(CriticalPoint, WorkedExample) {
  const ChartParams prm = worked_params();
  const CriticalPoint cp = critical_point_closed(prm);
  EXPECT_NEAR(cp.q0.alpha, 0.5, 1e-15);
  EXPECT_NEAR(cp.q0.beta, 0.25, 1e-15);
  EXPECT_NEAR(cp.q0.eta3, -0.35, 1e-15);
  EXPECT_NEAR(cp.q0.xi.x(), -0.8, 1e-15);
  EXPECT_NEAR(cp.q0.xi.y(), 0.6, 1e-15);
  EXPECT_NEAR(cp.q0.xi.z(), -0.15, 1e-15);
  EXPECT_NEAR(cp.theta0, 0.825, 1e-14);
  EXPECT_NEAR(cp.abs_det_hessian, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(cp.det_hessian), 1.0, 1e-10);
  EXPECT_EQ(cp.signature % 2, 0);
  EXPECT_LE(grad_theta_chart(cp.q0, prm).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CriticalPoint, RandomParametersGradientVanishes) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    ChartParams prm;
    const double b1 = 0.5 + 2 * u(rng);
    const double b2 = b1 * (1 + u(rng));
    prm.groups = groups(b2 * (1 + u(rng)), b1, b2, 2 * u(rng));
    prm.kin.x = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
    prm.kin.y1 = Vec3(u(rng), -u(rng), u(rng));
    prm.kin.y2 = Vec3(-u(rng), u(rng), u(rng));
    prm.eta1 = u(rng) - 0.5;
    prm.eta2 = u(rng) - 0.5;
    const CriticalPoint cp = critical_point_closed(prm);
    EXPECT_LE(grad_theta_chart(cp.q0, prm).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_NEAR(cp.theta0, theta_aligned(cp.q0, prm), 1e-11 * std::max(1.0, std::abs(cp.theta0)));
    EXPECT_NEAR(std::abs(cp.det_hessian) / cp.abs_det_hessian, 1.0, 1e-8);
    EXPECT_EQ(cp.signature, 0);
  }
}

TEST(Newton, ConvergesFromNearbyStart) {
  const ChartParams prm = generic_params();
  const CriticalPoint cp = critical_point_closed(prm);
  for (int j = 0; j < 8; ++j) {
    Vec8 z = cp.q0.to_vector();
    z[j] += 0.05;
    const NewtonResult r = solve_critical_newton(ChartPoint::from_vector(z), prm);
    EXPECT_LE(r.iterations, 8) << j;
    EXPECT_LE((r.point.q0.to_vector() - cp.q0.to_vector()).cwiseAbs().maxCoeff(), 1e-10) << j;
    EXPECT_NEAR(r.point.theta0, cp.theta0, 1e-12);
  }
}

TEST(Newton, RejectsStartOutsideChart) {
  const ChartParams prm = generic_params();
  ChartPoint q = critical_point_closed(prm).q0;
  q.mu = 0.9;
  EXPECT_THROW(solve_critical_newton(q, prm), ChartViolation);
}

TEST(DeltaBounds, ClosedFormExamples) {
  const auto g = groups(15.0, 5.0, 10.0, 0.0);
  EXPECT_NEAR(delta_lower_bound(BoundFamily::delta21(), g, 0.0), 3.5355339059327378, 1e-12);
  EXPECT_NEAR(delta_lower_bound(BoundFamily::delta12(), g, pi / 3), 3.5355339059327378, 1e-12);
  EXPECT_NEAR(delta_lower_bound(BoundFamily::cone(pi / 6), g, 0.0), 3.5355339059327378, 1e-12);
  EXPECT_THROW(delta_lower_bound(BoundFamily::delta12(), g, 0.0), DomainError);
  EXPECT_THROW(delta_lower_bound(BoundFamily::cone(pi / 2), g, 0.0), DomainError);
}

TEST(DeltaBounds, PhysicalFormAgrees) {
  PhysicalConfig c;
  c.chi = 1.1;
  const auto g = build_groups(c);
  for (const auto& f : {BoundFamily::delta21(), BoundFamily::delta12(), BoundFamily::cone(0.4)})
    EXPECT_NEAR(delta_lower_bound(f, c), delta_lower_bound(f, g, c.chi), 1e-12);
}

TEST(DeltaBounds, NumericMinimumRespectsBound) {
  const auto g = groups(15.0, 5.0, 10.0, 0.0);
  for (double chi : {0.3, 0.9, pi / 2}) {
    const double d12 = delta_lower_bound(BoundFamily::delta12(), g, chi);
    EXPECT_GE(verify_delta_bound_numeric(BoundFamily::delta12(), g, chi).min_value, d12 * d12 * (1 - 1e-9));
    const double d21 = delta_lower_bound(BoundFamily::delta21(), g, chi);
    EXPECT_GE(verify_delta_bound_numeric(BoundFamily::delta21(), g, chi).min_value, d21 * d21 * (1 - 1e-9));
  }
  const double dc = delta_lower_bound(BoundFamily::cone(0.5), g, 0.0);
  EXPECT_GE(verify_delta_bound_numeric(BoundFamily::cone(0.5), g, 0.0).min_value, dc * dc * (1 - 1e-9));
}

TEST(DeltaBounds, ObtuseAngleBreaksTheTwelveBound) {
  // beta = 0 with u along a2 leaves only |b1 a1|^2 = b1^2, below b1^2 (1 - cos chi)
  const auto g = groups(15.0, 5.0, 10.0, 0.0);
  const double chi = 2 * pi / 3;
  const double d12 = delta_lower_bound(BoundFamily::delta12(), g, chi);
  const auto r = verify_delta_bound_numeric(BoundFamily::delta12(), g, chi);
  EXPECT_LE(r.min_value, g.b1 * g.b1 * (1 + 1e-9));
  EXPECT_LT(r.min_value, d12 * d12);
}

TEST(GradientMinimum, MisalignedGeometryHasPositiveFloor) {
  const auto g = groups(15.0, 5.0, 10.0, 0.0);
  const auto aligned = gradient_minimum(GraphOrder::Order12, g, AtomGeometry::from_angle(0.0));
  EXPECT_LE(aligned.min_value, 1e-12);
  const auto tilted = gradient_minimum(GraphOrder::Order12, g, AtomGeometry::from_angle(0.5));
  EXPECT_GT(tilted.min_value, 1.0);
}
