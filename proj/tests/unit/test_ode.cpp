#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "schedlab/errors.hpp"
#include "schedlab/sampler.hpp"
#include "schedlab/vec.hpp"

using namespace schedlab;

namespace {

AnalyticModel testbed(double w_plus) {
  Vec plus(8, 0.0), minus(8, 0.0);
  plus[0] = 2.0;
  minus[0] = -2.0;
  return AnalyticModel::mixture({{w_plus, plus, 0.5}, {1.0 - w_plus, minus, 0.5}});
}

double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(OdeReference, PointMassMatchesClosedFormEndpoint) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Vec mu(5), eps(5);
  for (double& v : mu) v = n(rng);
  for (double& v : eps) v = n(rng);
  const ModelPair pair = ModelPair::unguided(AnalyticModel::point_mass(mu));
  for (Family f : {Family::ScaledLinear, Family::Cosine, Family::Sigmoid, Family::Logistic}) {
    const ScheduleSpec spec = ScheduleSpec::defaults(f, 1000);
    const ScheduleTable table = build_table(spec, integer_grid(1000));
    const Schedule schedule(spec);
    for (auto [ts, te] : {std::pair{1.0, 999.0}, std::pair{500.0, 20.0}, std::pair{3.0, 4.0}}) {
      const Vec start = forward_closed_form(mu, eps, table.alpha_bar[static_cast<std::size_t>(ts)]);
      const Vec want = forward_closed_form(mu, eps, table.alpha_bar[static_cast<std::size_t>(te)]);
      const OdeResult got = ode_reference_solve(pair, 1.0, start, table, ts, te);
      EXPECT_LT(max_abs_diff(got.x, want), 1e-8) << to_string(f) << " " << ts << " -> " << te;
      EXPECT_FALSE(got.start_clamped);
    }
  }
}

TEST(OdeReference, DoublingResolutionChangesLittle) {
  const ModelPair pair{testbed(0.5), testbed(0.95)};
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Logistic, 1000);
  const ScheduleTable table = build_table(spec, integer_grid(1000));
  const Vec x0 = sample_x0(testbed(0.95), 8, 1).front();
  OdeOptions coarse;
  coarse.allow_singular_start = true;
  OdeOptions fine = coarse;
  fine.n_fine = 2 * coarse.n_fine;
  const Vec a = ode_reference_solve(pair, 3.5, x0, table, 0.0, 1000.0, coarse).x;
  const Vec b = ode_reference_solve(pair, 3.5, x0, table, 0.0, 1000.0, fine).x;
  EXPECT_LT(max_abs_diff(a, b), 1e-9);
}

TEST(OdeReference, ZeroSpanReturnsStart) {
  const ModelPair pair = ModelPair::unguided(testbed(0.5));
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Cosine, 100);
  const ScheduleTable table = build_table(spec, integer_grid(100));
  const Vec x(8, 0.7);
  EXPECT_EQ(ode_reference_solve(pair, 1.0, x, table, 40.0, 40.0).x, x);
}

TEST(OdeReference, SingularStartIsClampedAndReported) {
  const ModelPair pair = ModelPair::unguided(testbed(0.5));
  SamplerConfig cfg;
  const ScheduleSpec linear = ScheduleSpec::defaults(Family::ScaledLinear, 1000);
  const ScheduleTable table = build_table(linear, timestep_grid(1000, cfg));
  const OdeResult r = ode_reference_solve(pair, 1.0, Vec(8, 0.1), table, 0.0, 981.0);
  EXPECT_TRUE(r.start_clamped);
  EXPECT_EQ(r.t_start, 1.0);
  EXPECT_FALSE(r.end_clamped);

  const OdeResult back = ode_reference_solve(pair, 1.0, Vec(8, 0.1), table, 981.0, 0.0);
  EXPECT_TRUE(back.end_clamped);
  EXPECT_EQ(back.t_end, 1.0);

  const ScheduleSpec logistic = ScheduleSpec::defaults(Family::Logistic, 1000);
  const OdeResult smooth =
      ode_reference_solve(pair, 1.0, Vec(8, 0.1), build_table(logistic, timestep_grid(1000, cfg)), 0.0, 981.0);
  EXPECT_FALSE(smooth.start_clamped);
  EXPECT_EQ(smooth.t_start, 0.0);

  const OdeResult allowed =
      ode_reference_solve(pair, 1.0, Vec(8, 0.1), table, 0.0, 981.0, OdeOptions{1000, true});
  EXPECT_FALSE(allowed.start_clamped);
}

TEST(OdeReference, OutOfRangeIsDomainError) {
  const ModelPair pair = ModelPair::unguided(testbed(0.5));
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Cosine, 100);
  const ScheduleTable table = build_table(spec, integer_grid(100));
  EXPECT_THROW(ode_reference_solve(pair, 1.0, Vec(8, 0.0), table, -1.0, 10.0), DomainError);
  EXPECT_THROW(ode_reference_solve(pair, 1.0, Vec(8, 0.0), table, 0.0, 101.0), DomainError);
}

TEST(LocalError, FirstStepLargerForScaledLinearThanLogistic) {
  const ModelPair pair{testbed(0.5), testbed(0.95)};
  const SamplerConfig cfg;
  const auto first_step_error = [&](Family f, const Vec& x0) {
    const ScheduleSpec spec = ScheduleSpec::defaults(f, 1000);
    const ScheduleTable table = build_table(spec, timestep_grid(1000, cfg));
    const Trajectory inv = run_inversion(pair, x0, table, cfg, 0);
    const OdeResult ref =
        ode_reference_solve(pair, cfg.w_invert, x0, table, 0.0, inv.records[1].t, OdeOptions{1000, true});
    return std::sqrt(squared_distance(inv.records[1].x, ref.x));
  };
  double linear = 0.0, logistic = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Vec x0 = sample_x0(testbed(0.95), seed, 1).front();
    linear += first_step_error(Family::ScaledLinear, x0);
    logistic += first_step_error(Family::Logistic, x0);
  }
  EXPECT_GT(linear / 100.0, logistic / 100.0);
}
