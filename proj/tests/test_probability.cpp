#include "mott/probability.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mott;

namespace {

// groups (a, b1, b2, c_coeff) = (6, 2, 4, 1) at eps = 0.1
PhysicalConfig selectivity_config() {
  PhysicalConfig c;
  c.epsilon = 0.1;
  c.a1_over_gamma = 20.0;
  c.a2_over_a1 = 2.0;
  c.t_over_tau2 = 1.5;
  c.mass_ratio = 0.6;
  c.lambda0 = 0.01;
  return c;
}

ScanSpec pointwise_spec(Observable obs, std::uint64_t points) {
  ScanSpec s;
  s.observable = obs;
  s.grid = {0.3, 0.2, 0.1};
  s.inner_plan.point_count = points;
  s.point = {Vec3(0.1, -0.2, 0.4), Vec3(0.3, 0.2, -0.1), Vec3(-0.2, 0.1, 0.3)};
  return s;
}

LeadingPlan leading_nodes(int n) {
  LeadingPlan p;
  p.nodes = n;
  return p;
}

} // namespace

TEST(Prefactor, IdentityOverRandomConfigs) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    PhysicalConfig c;
    c.epsilon = 0.02 + 0.4 * u(rng);
    c.a1_over_gamma = 1 + 60 * u(rng);
    c.a2_over_a1 = 1.01 + 2 * u(rng);
    c.t_over_tau2 = 1.01 + 2 * u(rng);
    c.mass_ratio = 0.01 + u(rng);
    c.lambda0 = 0.001 + 0.1 * u(rng);
    const double lhs = leading_prefactor(build_groups(c), c.epsilon);
    EXPECT_NEAR(lhs / leading_prefactor_physical(c), 1.0, 1e-12);
  }
}

TEST(Probability, VanishingCouplings) {
  PhysicalConfig c = selectivity_config();
  c.lambda0 = 0.0;
  QuadraturePlan plan;
  plan.point_count = 64;
  auto g = build_groups(c);
  EXPECT_EQ(p_direct_sampled(c, g, 2, plan).estimate, 0.0);
  EXPECT_EQ(p_leading(c, g, 2).estimate, 0.0);
  c = selectivity_config();
  c.potential.amplitude = 0.0;
  g = build_groups(c);
  const RunRecord r = p_direct_sampled(c, g, 2, plan);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_EQ(p_leading(c, g, 2).estimate, 0.0);
}

TEST(Probability, RejectsBadBudgets) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  EXPECT_THROW(p_direct_sampled(c, g, 0, QuadraturePlan{}), ConfigError);
  EXPECT_THROW(p_leading(c, g, 4, leading_nodes(1)), ConfigError);
  OuterDomain bad;
  bad.y_max = 0.0;
  EXPECT_THROW(p_leading(c, g, 4, {}, bad), ConfigError);
}

TEST(Probability, LeadingOrderIsFiniteAndPositive) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  const RunRecord r = p_leading(c, g, 16, leading_nodes(24));
  EXPECT_TRUE(std::isfinite(r.estimate));
  EXPECT_GT(r.estimate, 0.0);
  EXPECT_LT(r.std_error, r.estimate);
  EXPECT_EQ(r.n_inner, 24u * 24u);
}

TEST(Probability, SampledRecordFields) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  QuadraturePlan plan;
  plan.point_count = 256;
  plan.seed = 9;
  const RunRecord r = p_direct_sampled(c, g, 3, plan);
  EXPECT_EQ(r.variable, "epsilon");
  EXPECT_EQ(r.value, 0.1);
  EXPECT_EQ(r.n_outer, 3u);
  EXPECT_EQ(r.n_inner, 256u * 8u);
  EXPECT_EQ(r.seed, 9u);
  EXPECT_GE(r.estimate, 0.0);
  const RunRecord again = p_direct_sampled(c, g, 3, plan);
  EXPECT_EQ(again.estimate, r.estimate);
  EXPECT_EQ(again.std_error, r.std_error);
}

TEST(HoldingGroups, KeepsDimensionlessGroups) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  for (double e : {0.3, 0.05}) {
    const PhysicalConfig ce = with_epsilon_holding_groups(c, e);
    const auto ge = build_groups(ce);
    EXPECT_DOUBLE_EQ(ce.epsilon, e);
    EXPECT_NEAR(ge.a, g.a, 1e-12);
    EXPECT_NEAR(ge.b1, g.b1, 1e-12);
    EXPECT_NEAR(ge.b2, g.b2, 1e-12);
    EXPECT_NEAR(ge.c_coeff, g.c_coeff, 1e-12);
    EXPECT_NEAR(ge.kappa, g.kappa, 1e-12);
  }
}

TEST(Scan, SinglePointAndValidation) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  ScanSpec s = pointwise_spec(Observable::pointwise, 256);
  s.grid = {0.1};
  const auto recs = scan(s, c, g);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_TRUE(recs[0].ok);
  EXPECT_EQ(recs[0].variable, "epsilon");
  EXPECT_EQ(recs[0].n_outer, 1u);
  s.grid = {0.1, 0.2, 0.15};
  EXPECT_THROW(scan(s, c, g), ConfigError);
  s.grid.clear();
  EXPECT_THROW(scan(s, c, g), ConfigError);
}

TEST(Scan, FailingPointIsRecordedNotThrown) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  ScanSpec s = pointwise_spec(Observable::pointwise, 256);
  s.variable = ScanVariable::chi;
  s.grid = {0.0, 4.0};
  const auto recs = scan(s, c, g);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_TRUE(recs[0].ok);
  EXPECT_FALSE(recs[1].ok);
  EXPECT_FALSE(recs[1].failure.empty());
}

TEST(Scan, DeterministicRecords) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  const ScanSpec s = pointwise_spec(Observable::pointwise, 512);
  const auto a = scan(s, c, g), b = scan(s, c, g);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].estimate, b[i].estimate);
    EXPECT_EQ(a[i].std_error, b[i].std_error);
  }
}

TEST(Scan, ReverseOrderAmplitudeDecaysFasterThanAligned) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  const auto r21 = scan(pointwise_spec(Observable::pointwise_21, 1u << 13), c, g);
  const auto r12 = scan(pointwise_spec(Observable::pointwise_12, 1u << 13), c, g);
  for (std::size_t i = 1; i < r21.size(); ++i) EXPECT_LT(r21[i].estimate, r21[i - 1].estimate) << i;
  EXPECT_GT(fit_loglog_slope(r21).slope, fit_loglog_slope(r12).slope);
}

TEST(Scan, AngleScanDecreasesAwayFromAlignment) {
  const PhysicalConfig c = selectivity_config();
  const auto g = build_groups(c);
  ScanSpec s = pointwise_spec(Observable::pointwise, 1u << 12);
  s.variable = ScanVariable::chi;
  s.grid = {0.0, pi / 12, pi / 6};
  const auto recs = scan(s, c, g);
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_LT(recs[i].estimate, recs[i - 1].estimate) << i;
  EXPECT_LE(recs[2].estimate, 1e-3 * recs[0].estimate);
}

TEST(Fit, LogLogSlopes) {
  std::vector<RunRecord> recs;
  for (double v : {0.1, 0.2, 0.4, 0.8}) {
    RunRecord r;
    r.value = v;
    r.estimate = 5.0 * v * v * v;
    recs.push_back(r);
  }
  const LogLogFit f = fit_loglog_slope(recs);
  EXPECT_NEAR(f.slope, 3.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(5.0), 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
  EXPECT_EQ(f.points, 4u);
  for (auto& r : recs) r.estimate = 2.0;
  EXPECT_NEAR(fit_loglog_slope(recs).slope, 0.0, 1e-12);
  recs.resize(2);
  EXPECT_THROW(fit_loglog_slope(recs), DomainError);
}

TEST(Fit, SkipsUnusableRecords) {
  std::vector<RunRecord> recs;
  for (double v : {0.1, 0.2, 0.3, 0.4}) {
    RunRecord r;
    r.value = v;
    r.estimate = v * v;
    recs.push_back(r);
  }
  recs[1].estimate = 0.0;
  recs[2].ok = false;
  EXPECT_THROW(fit_loglog_slope(recs), DomainError);
}
