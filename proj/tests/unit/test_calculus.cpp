#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "schedlab/calculus.hpp"
#include "schedlab/errors.hpp"

using namespace schedlab;

namespace {

constexpr Family kFamilies[] = {Family::ScaledLinear, Family::Cosine, Family::Sigmoid, Family::Logistic};

ScheduleSpec verbatim_early_logistic() {
  ScheduleSpec spec = ScheduleSpec::defaults(Family::Logistic, 100);
  spec.t0 = 30.0;
  spec.orientation = Orientation::VerbatimIncreasing;
  return spec;
}

}  // namespace

TEST(DAlphaBarDt, VerbatimLogisticMidpointIsQuarterK) {
  const ScheduleSpec spec = verbatim_early_logistic();
  EXPECT_NEAR(d_alpha_bar_dt(spec, 30.0), 0.015 / 4.0, 1e-17);
}

TEST(DAlphaBarDt, MatchesFiniteDifferencesOnEveryFamily) {
  std::mt19937_64 rng(17);
  for (Family f : kFamilies) {
    for (int T : {100, 1000}) {
      const ScheduleSpec spec = ScheduleSpec::defaults(f, T);
      std::uniform_real_distribution<double> tdist(0.01 * T, 0.99 * T);
      for (int i = 0; i < 100; ++i) {
        const double t = tdist(rng);
        EXPECT_LT(oracle::relative_error(d_alpha_bar_dt(spec, t), oracle::d_alpha_bar(spec, t)), 1e-6)
            << to_string(f) << " T=" << T << " t=" << t;
      }
    }
  }
}

TEST(DAlphaBarDt, AffineAndVerbatimLogisticMatchFiniteDifferences) {
  ScheduleSpec affine = ScheduleSpec::defaults(Family::Logistic, 1000);
  affine.affine_terminal_alpha_bar = 0.0;
  const ScheduleSpec verbatim = verbatim_early_logistic();
  for (const ScheduleSpec& spec : {affine, verbatim}) {
    for (double frac : {0.0, 0.1, 0.37, 0.5, 0.93, 1.0}) {
      const double t = frac * spec.T;
      EXPECT_LT(oracle::relative_error(d_alpha_bar_dt(spec, t), oracle::d_alpha_bar(spec, t)), 1e-6) << t;
    }
  }
}

TEST(DAlphaBarDt, OutOfRangeIsDomainError) {
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Cosine, 100);
  EXPECT_THROW(d_alpha_bar_dt(spec, -1.0), DomainError);
  EXPECT_THROW(d_alpha_bar_dt(spec, 101.0), DomainError);
}

TEST(DxDtCoefficients, CosineAtTerminalTime) {
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Cosine, 100);
  const DerivativeCoefficients c = dx_dt_coefficients(spec, 100.0);
  EXPECT_TRUE(c.finite);
  EXPECT_EQ(c.d_alpha_bar_dt, 0.0);
  EXPECT_EQ(c.coeff_eps, 0.0);
  // The x0 term has a nonzero one-sided limit; compare with a backward difference of sqrt(ab).
  const long double h = 1e-4L;
  const long double backward =
      (std::sqrt(oracle::alpha_bar(spec, 100.0L)) - std::sqrt(oracle::alpha_bar(spec, 100.0L - h))) / h;
  EXPECT_LT(oracle::relative_error(c.coeff_x0, backward), 1e-6);
  EXPECT_LT(c.coeff_x0, 0.0);
}

TEST(DxDtCoefficients, SingularFamiliesDivergeAtZero) {
  for (Family f : {Family::ScaledLinear, Family::Cosine, Family::Sigmoid}) {
    const DerivativeCoefficients c = dx_dt_coefficients(ScheduleSpec::defaults(f, 1000), 0.0);
    EXPECT_FALSE(c.finite) << to_string(f);
    EXPECT_TRUE(std::isinf(c.coeff_eps)) << to_string(f);
    EXPECT_GT(c.coeff_eps, 0.0);
  }
}

TEST(DxDtCoefficients, CosineWithoutOffsetHasFiniteLimit) {
  ScheduleSpec spec = ScheduleSpec::defaults(Family::Cosine, 1000);
  spec.s = 0.0;
  const DerivativeCoefficients c = dx_dt_coefficients(spec, 0.0);
  EXPECT_TRUE(c.finite);
  EXPECT_NEAR(c.coeff_eps, std::numbers::pi / 2000.0, 1e-15);
  EXPECT_LT(oracle::relative_error(c.coeff_eps, oracle::coeff_eps(spec, 0.5L)), 1e-6);
}

TEST(DxDtCoefficients, LogisticIsFiniteAtZeroInBothOrientations) {
  ScheduleSpec decreasing = ScheduleSpec::defaults(Family::Logistic, 100);
  const ScheduleSpec verbatim = verbatim_early_logistic();
  for (const ScheduleSpec& spec : {decreasing, verbatim}) {
    const DerivativeCoefficients c = dx_dt_coefficients(spec, 0.0);
    EXPECT_TRUE(c.finite);
    EXPECT_LT(oracle::relative_error(c.coeff_x0, oracle::coeff_x0(spec, 0.0L)), 1e-6);
    EXPECT_LT(oracle::relative_error(c.coeff_eps, oracle::coeff_eps(spec, 0.0L)), 1e-6);
  }
}

TEST(DxDtCoefficients, ChainRuleReconstructsDerivative) {
  std::mt19937_64 rng(23);
  for (Family f : kFamilies) {
    const ScheduleSpec spec = ScheduleSpec::defaults(f, 1000);
    std::uniform_real_distribution<double> tdist(1.0, 999.0);
    for (int i = 0; i < 200; ++i) {
      const double t = tdist(rng);
      const DerivativeCoefficients c = dx_dt_coefficients(spec, t);
      ASSERT_TRUE(c.finite);
      const double ab = differentiable_alpha_bar(spec, t);
      const double from_x0 = c.coeff_x0 * 2.0 * std::sqrt(ab);
      const double from_eps = -c.coeff_eps * 2.0 * std::sqrt(1.0 - ab);
      EXPECT_LT(oracle::relative_error(from_x0, c.d_alpha_bar_dt), 1e-10);
      EXPECT_LT(oracle::relative_error(from_eps, c.d_alpha_bar_dt), 1e-10) << to_string(f) << " t=" << t;
    }
  }
}

TEST(DxDtCoefficients, InteriorCoefficientsMatchFiniteDifferences) {
  std::mt19937_64 rng(29);
  for (Family f : kFamilies) {
    const ScheduleSpec spec = ScheduleSpec::defaults(f, 1000);
    std::uniform_real_distribution<double> tdist(5.0, 995.0);
    for (int i = 0; i < 50; ++i) {
      const double t = tdist(rng);
      const DerivativeCoefficients c = dx_dt_coefficients(spec, t);
      EXPECT_LT(oracle::relative_error(c.coeff_x0, oracle::coeff_x0(spec, t)), 1e-6) << to_string(f) << " " << t;
      EXPECT_LT(oracle::relative_error(c.coeff_eps, oracle::coeff_eps(spec, t)), 1e-6) << to_string(f) << " " << t;
    }
  }
}

TEST(SingularityScan, ScaledLinearDivergesTowardZero) {
  const auto scan = singularity_scan(ScheduleSpec::defaults(Family::ScaledLinear, 1000), 1e-6, 1e-2, 41);
  ASSERT_EQ(scan.size(), 41u);
  EXPECT_GT(std::abs(scan.front().coeff_eps), 10.0 * std::abs(scan.back().coeff_eps));
  for (std::size_t i = 1; i < scan.size(); ++i) {
    EXPECT_GT(scan[i].t, scan[i - 1].t);
    EXPECT_LT(std::abs(scan[i].coeff_eps), std::abs(scan[i - 1].coeff_eps));
  }
}

TEST(SingularityScan, LogisticIsFlatNearZero) {
  const auto scan = singularity_scan(ScheduleSpec::defaults(Family::Logistic, 1000), 1e-6, 1e-2, 41);
  double lo = INFINITY, hi = 0.0;
  for (const auto& c : scan) {
    EXPECT_TRUE(c.finite);
    lo = std::min(lo, std::abs(c.coeff_eps));
    hi = std::max(hi, std::abs(c.coeff_eps));
  }
  EXPECT_LT(hi / lo, 1.01);
}

TEST(SingularityScan, TwoPointScanReturnsEndpoints) {
  const auto scan = singularity_scan(ScheduleSpec::defaults(Family::Cosine, 100), 0.5, 7.0, 2);
  ASSERT_EQ(scan.size(), 2u);
  EXPECT_EQ(scan[0].t, 0.5);
  EXPECT_EQ(scan[1].t, 7.0);
}

TEST(SingularityScan, ZeroStartKeepsTheBoundary) {
  const auto ts = geometric_samples(0.0, 10.0, 8);
  EXPECT_EQ(ts.front(), 0.0);
  EXPECT_EQ(ts.back(), 10.0);
  EXPECT_NEAR(ts[1], 1e-5, 1e-18);
}

TEST(SingularityScan, InvalidRangesAreRejected) {
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Cosine, 100);
  EXPECT_THROW(singularity_scan(spec, 5.0, 5.0, 10), ValidationError);
  EXPECT_THROW(singularity_scan(spec, -1.0, 5.0, 10), ValidationError);
  EXPECT_THROW(singularity_scan(spec, 0.0, 101.0, 10), ValidationError);
  EXPECT_THROW(singularity_scan(spec, 0.0, 5.0, 1), ValidationError);
}

TEST(LinearityFit, PerfectLineHasUnitRSquared) {
  ScheduleTable table;
  for (int i = 0; i <= 50; ++i) {
    table.timesteps.push_back(i);
    table.logsnr.push_back(3.0 - 0.25 * i);
  }
  table.alpha_bar = table.beta = table.snr = table.logsnr;
  const LinearFit fit = logsnr_linearity_fit(table);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-15);
  EXPECT_NEAR(fit.slope, -0.25, 1e-14);
  EXPECT_NEAR(fit.intercept, 3.0, 1e-12);
}

TEST(LinearityFit, LogisticIsMoreLinearThanCosineAtT100) {
  const auto fit_for = [](Family f) {
    const ScheduleSpec spec = ScheduleSpec::defaults(f, 100);
    return logsnr_linearity_fit(build_table(spec, integer_grid(100))).r_squared;
  };
  const double logistic = fit_for(Family::Logistic);
  EXPECT_GT(logistic, fit_for(Family::Cosine));
  EXPECT_GT(logistic, fit_for(Family::ScaledLinear));
  EXPECT_NEAR(logistic, 1.0, 1e-12);
}

TEST(LinearityFit, EmptyWindowIsRejected) {
  const ScheduleTable table = build_table(ScheduleSpec::defaults(Family::Logistic, 100), integer_grid(100));
  EXPECT_THROW(logsnr_linearity_fit(table, {0.5, 0.5}), ValidationError);
  EXPECT_THROW(logsnr_linearity_fit(table, {0.501, 0.509}), ValidationError);
}
