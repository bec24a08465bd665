#include "mott/reduced.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mott;

namespace {

PhysicalConfig small_config() {
  PhysicalConfig c;
  c.epsilon = 0.3;
  c.a1_over_gamma = 2.0;
  c.a2_over_a1 = 2.0;
  c.t_over_tau2 = 1.5;
  c.mass_ratio = 0.3;
  c.lambda0 = 0.1;
  return c;
}

} // namespace

TEST(Mixture, ReproducesFormFactor) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 8; ++i) {
    const Vec3 xi(u(rng), u(rng), u(rng)), y(u(rng), u(rng), u(rng));
    const Complex exact = form_factor_h(xi, y);
    const Complex mix = mixture::form_factor_from_mixture(xi, y);
    EXPECT_LE(std::abs(mix - exact), 1e-6 * std::abs(exact) + 1e-9) << i;
  }
}

TEST(Mixture, HalfLineMap) {
  EXPECT_EQ(mixture::half_line(0.0).value, 0.0);
  EXPECT_EQ(mixture::half_line(0.5).value, 1.0);
  EXPECT_EQ(mixture::half_line(0.5).jacobian, 4.0);
}

TEST(GaussianPairIntegral, MatchesTensorQuadrature) {
  // complex-symmetric M with positive definite real part; the integral
  // factorizes into three two-dimensional ones
  const Complex m11(1.3, -0.4), m12(0.2, 0.3), m22(0.9, 0.6);
  mixture::Vec3c b1, b2;
  b1 << Complex(0.2, 0.5), Complex(-0.3, 0.1), Complex(0.0, -0.4);
  b2 << Complex(0.1, -0.2), Complex(0.4, 0.3), Complex(-0.2, 0.0);
  const Complex c0(0.1, 0.2);
  const quad::Rule r = quad::composite_gauss_legendre(16, 12, -12.0, 12.0);
  Complex prod = std::exp(c0);
  for (int k = 0; k < 3; ++k) {
    Complex s{};
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < r.size(); ++j) {
        const double z1 = r.nodes[i], z2 = r.nodes[j];
        s += r.weights[i] * r.weights[j] *
             std::exp(-0.5 * (m11 * z1 * z1 + 2.0 * m12 * z1 * z2 + m22 * z2 * z2) + b1[k] * z1 + b2[k] * z2);
      }
    prod *= s;
  }
  const Complex closed = mixture::gaussian_pair_integral(m11, m12, m22, b1, b2, c0);
  EXPECT_LE(std::abs(closed - prod), 1e-10 * std::abs(prod));
}

TEST(Proposals, DensitiesAreNormalized) {
  const detail::IntervalProposal ip(0.3, 0.02, 0.15);
  const quad::Rule r = quad::composite_gauss_legendre(200, 10, 0.0, 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * ip.density(r.nodes[i]);
  EXPECT_NEAR(s, 1.0, 1e-8);

  const detail::SphereProposal sp(Vec3(0.2, -0.3, 0.9), 0.05, 0.15);
  // integrate in geodesic polar coordinates around the center
  const quad::Rule th = quad::composite_gauss_legendre(400, 10, 0.0, pi);
  const Vec3 c = Vec3(0.2, -0.3, 0.9).normalized();
  const Vec3 e1 = (Vec3(1, 0, 0) - c.x() * c).normalized();
  double total = 0.0;
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double t = th.nodes[i];
    const Vec3 p = std::cos(t) * c + std::sin(t) * e1;
    total += th.weights[i] * two_pi * std::sin(t) * sp.density(p);
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Proposals, SamplesFollowDensity) {
  const detail::IntervalProposal ip(0.6, 0.05, 0.2);
  // mean of 1/density under the proposal is the interval length
  const qmc::PointSet ps(SequenceKind::low_discrepancy, 1, 2, 0);
  const std::uint64_t n = 1u << 14;
  double s = 0.0;
  double u[1];
  for (std::uint64_t i = 0; i < n; ++i) {
    ps.point(i, u);
    const double x = ip.sample(u[0]);
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    s += 1.0 / ip.density(x);
  }
  EXPECT_NEAR(s / n, 1.0, 1e-3);
}

TEST(ReducedEstimator, AgreesWithDirectIntegral) {
  const PhysicalConfig c = small_config();
  const auto g = build_groups(c);
  const Kinematics k{Vec3(0.1, -0.2, 0.4), Vec3(0.3, 0.2, -0.1), Vec3(-0.2, 0.1, 0.3)};
  QuadraturePlan direct_plan;
  direct_plan.point_count = 1u << 17;
  QuadraturePlan reduced_plan;
  reduced_plan.point_count = 1u << 14;
  for (GraphOrder o : {GraphOrder::Order12, GraphOrder::Order21}) {
    const OscEstimate d = integrate_G_eps(o, k, c, g, direct_plan);
    const OscEstimate r = integrate_G_eps_reduced(o, k, c, g, reduced_plan);
    const double se = std::hypot(d.std_error, r.std_error);
    EXPECT_LE(std::abs(d.value - r.value), 4.0 * se) << to_string(o) << " direct=" << d.value << " reduced=" << r.value;
    EXPECT_LT(r.std_error, d.std_error);
  }
}
