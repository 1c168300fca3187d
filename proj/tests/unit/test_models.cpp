#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "schedlab/errors.hpp"
#include "schedlab/models.hpp"

using namespace schedlab;

namespace {

AnalyticModel symmetric_mixture(std::size_t dim) {
  Vec a(dim, 0.0), b(dim, 0.0);
  a[0] = 2.0;
  b[0] = -2.0;
  return AnalyticModel::mixture({{0.5, a, 0.5}, {0.5, b, 0.5}});
}

Vec random_vec(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

}  // namespace

TEST(AnalyticModel, ValidatesComponents) {
  EXPECT_THROW(AnalyticModel(ModelKind::Gaussian, {}), ValidationError);
  EXPECT_THROW(AnalyticModel::gaussian({0.0, 1.0}, 0.0), ValidationError);
  EXPECT_THROW(AnalyticModel(ModelKind::PointMass, {{1.0, {0.0}, 0.5}}), ValidationError);
  EXPECT_THROW(AnalyticModel::mixture({{0.5, {0.0}, 1.0}, {0.4, {1.0}, 1.0}}), ValidationError);
  EXPECT_THROW(AnalyticModel::mixture({{0.5, {0.0}, 1.0}, {0.5, {1.0, 2.0}, 1.0}}), ValidationError);
  EXPECT_THROW(AnalyticModel::mixture({{1.0, {0.0}, 1.0}, {0.0, {1.0}, 1.0}}), ValidationError);
  EXPECT_THROW(AnalyticModel(ModelKind::Gaussian, {{0.5, {0.0}, 1.0}, {0.5, {1.0}, 1.0}}), ValidationError);
  EXPECT_THROW(AnalyticModel::point_mass({}), ValidationError);
  EXPECT_NO_THROW(AnalyticModel::mixture({{0.3, {0.0}, 1.0}, {0.7, {1.0}, 1.0}}));
}

TEST(AnalyticModel, MomentsAndSmoothness) {
  const AnalyticModel m = symmetric_mixture(4);
  EXPECT_EQ(m.dim(), 4u);
  EXPECT_EQ(m.mean(), Vec(4, 0.0));
  // Coordinate 0 has variance 0.5 + 4, the others 0.5.
  EXPECT_NEAR(m.data_variance(), (4.5 + 3 * 0.5) / 4.0, 1e-15);
  EXPECT_TRUE(m.smooth_at_data());
  EXPECT_FALSE(AnalyticModel::point_mass({1.0}).smooth_at_data());
}

TEST(ExactEps, PointMassRecoversTheNoise) {
  std::mt19937_64 rng(1);
  const Vec mu{0.3, -1.2, 2.5};
  const AnalyticModel m = AnalyticModel::point_mass(mu);
  for (double ab : {0.01, 0.3, 0.5, 0.99}) {
    const Vec eps = random_vec(rng, 3);
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = std::sqrt(ab) * mu[i] + std::sqrt(1.0 - ab) * eps[i];
    const Vec got = exact_eps(m, x, ab);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], eps[i], 1e-13);
  }
}

TEST(ExactEps, GaussianAtScaledMeanIsZero) {
  const Vec mu{1.0, -2.0};
  const AnalyticModel m = AnalyticModel::gaussian(mu, 1.0);
  const Vec x{std::sqrt(0.5) * mu[0], std::sqrt(0.5) * mu[1]};
  for (double v : exact_eps(m, x, 0.5)) EXPECT_EQ(v, 0.0);
}

TEST(ExactEps, SymmetricMixtureAtMidpointIsZero) {
  const AnalyticModel m = symmetric_mixture(3);
  for (double v : exact_eps(m, Vec(3, 0.0), 0.4)) EXPECT_EQ(v, 0.0);
}

TEST(ExactEps, MatchesNumericalScoreForAllKinds) {
  std::mt19937_64 rng(7);
  const AnalyticModel models[] = {
      AnalyticModel::point_mass({0.5, -0.5, 1.0}),
      AnalyticModel::gaussian({0.5, -0.5, 1.0}, 0.7),
      AnalyticModel::mixture({{0.2, {1.0, 0.0, 0.0}, 0.3}, {0.5, {-1.0, 1.0, 0.0}, 0.6}, {0.3, {0.0, 0.0, 2.0}, 1.1}}),
  };
  std::uniform_real_distribution<double> ab_dist(0.05, 0.95);
  for (const AnalyticModel& m : models) {
    for (int trial = 0; trial < 10; ++trial) {
      const double ab = ab_dist(rng);
      const Vec x = random_vec(rng, 3, 1.5);
      const Vec got = exact_eps(m, x, ab);
      const Vec want = oracle::score_eps(m, x, ab);
      for (int i = 0; i < 3; ++i) {
        EXPECT_LT(oracle::relative_error(got[i], want[i]), 1e-5)
            << to_string(m.kind()) << " ab=" << ab << " i=" << i << " got " << got[i] << " want " << want[i];
      }
    }
  }
}

TEST(ExactEps, StableAtExtremeNoiseLevels) {
  const AnalyticModel m = symmetric_mixture(8);
  Vec x(8, 0.0);
  x[0] = 40.0;
  for (double ab : {1e-12, 1.0 - 1e-12}) {
    for (double v : exact_eps(m, x, ab)) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(ExactEps, BoundaryLevelsAreDomainErrors) {
  const AnalyticModel m = AnalyticModel::gaussian({0.0}, 1.0);
  EXPECT_THROW(exact_eps(m, Vec{0.0}, 0.0), DomainError);
  EXPECT_THROW(exact_eps(m, Vec{0.0}, 1.0), DomainError);
  EXPECT_THROW(exact_eps(m, Vec{0.0, 1.0}, 0.5), ValidationError);
}

TEST(ExactEps, SigmaFormAgreesWithAlphaBarForm) {
  std::mt19937_64 rng(9);
  const AnalyticModel m = symmetric_mixture(4);
  for (double sigma : {0.05, 0.5, 3.0}) {
    const double ab = 1.0 / (1.0 + sigma * sigma);
    const Vec y = random_vec(rng, 4);
    const Vec x = [&] {
      Vec v(y);
      for (double& c : v) c *= std::sqrt(ab);
      return v;
    }();
    const Vec a = exact_eps_at_sigma(m, y, sigma);
    const Vec b = exact_eps(m, x, ab);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-13);
  }
  EXPECT_EQ(exact_eps_at_sigma(m, Vec(4, 1.0), 0.0), Vec(4, 0.0));
  EXPECT_THROW(exact_eps_at_sigma(AnalyticModel::point_mass({0.0}), Vec{1.0}, 0.0), DomainError);
}

TEST(GuidedEps, EndpointsAndIdenticalModels) {
  std::mt19937_64 rng(13);
  const AnalyticModel u = symmetric_mixture(3);
  const AnalyticModel c = AnalyticModel::mixture({{0.9, {2.0, 0.0, 0.0}, 0.5}, {0.1, {-2.0, 0.0, 0.0}, 0.5}});
  const Vec x = random_vec(rng, 3);
  EXPECT_EQ(guided_eps(u, c, x, 0.3, 0.0), exact_eps(u, x, 0.3));
  EXPECT_EQ(guided_eps(u, c, x, 0.3, 1.0), exact_eps(c, x, 0.3));
  for (double w : {-1.0, 3.5, 7.5}) {
    const Vec same = guided_eps(u, u, x, 0.3, w);
    const Vec base = exact_eps(u, x, 0.3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(same[i], base[i], 1e-15);
  }
  const Vec mixed = guided_eps(u, c, x, 0.3, 2.0);
  const Vec eu = exact_eps(u, x, 0.3), ec = exact_eps(c, x, 0.3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(mixed[i], eu[i] + 2.0 * (ec[i] - eu[i]), 1e-15);
}

TEST(GuidedEps, DimensionMismatchIsValidationError) {
  EXPECT_THROW(guided_eps(AnalyticModel::gaussian({0.0}, 1.0), AnalyticModel::gaussian({0.0, 0.0}, 1.0), Vec{0.0}, 0.5,
                          1.0),
               ValidationError);
}

TEST(SampleX0, PointMassSamplesEqualMean) {
  const Vec mu{1.0, 2.0};
  for (const Vec& s : sample_x0(AnalyticModel::point_mass(mu), 99, 10)) EXPECT_EQ(s, mu);
}

TEST(SampleX0, GaussianMeanWithinCltBound) {
  const Vec mu{1.0, -3.0, 0.5};
  const double var = 2.0;
  const int n = 100000;
  const auto samples = sample_x0(AnalyticModel::gaussian(mu, var), 1234, n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double s = 0.0;
    for (const auto& x : samples) s += x[i];
    EXPECT_LT(std::abs(s / n - mu[i]), 4.0 * std::sqrt(var) / std::sqrt(n));
  }
}

TEST(SampleX0, MixtureWeightsAreRespected) {
  const AnalyticModel m = AnalyticModel::mixture({{0.95, {2.0}, 0.01}, {0.05, {-2.0}, 0.01}});
  const int n = 20000;
  int positive = 0;
  for (const auto& x : sample_x0(m, 5, n)) positive += x[0] > 0.0;
  EXPECT_NEAR(static_cast<double>(positive) / n, 0.95, 4.0 * std::sqrt(0.95 * 0.05 / n));
}

TEST(SampleX0, DeterministicPerSeed) {
  const AnalyticModel m = symmetric_mixture(5);
  EXPECT_EQ(sample_x0(m, 42, 50), sample_x0(m, 42, 50));
  EXPECT_NE(sample_x0(m, 42, 5), sample_x0(m, 43, 5));
  EXPECT_THROW(sample_x0(m, 1, 0), ValidationError);
}

TEST(PredictorOptimality, GaussianBeatsConstantPredictors) {
  const Vec mu{0.5, -1.0};
  const AnalyticModel m = AnalyticModel::gaussian(mu, 0.8);
  const double ab = 0.6;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  const int draws = 10000;
  std::vector<Vec> xs, eps;
  for (int k = 0; k < draws; ++k) {
    Vec x0{mu[0] + std::sqrt(0.8) * n(rng), mu[1] + std::sqrt(0.8) * n(rng)};
    Vec e{n(rng), n(rng)};
    xs.push_back({std::sqrt(ab) * x0[0] + std::sqrt(1 - ab) * e[0], std::sqrt(ab) * x0[1] + std::sqrt(1 - ab) * e[1]});
    eps.push_back(e);
  }
  double exact = 0.0;
  Vec mean_eps{0.0, 0.0};
  for (int k = 0; k < draws; ++k) {
    const Vec p = exact_eps(m, xs[k], ab);
    exact += (p[0] - eps[k][0]) * (p[0] - eps[k][0]) + (p[1] - eps[k][1]) * (p[1] - eps[k][1]);
    mean_eps[0] += eps[k][0] / draws;
    mean_eps[1] += eps[k][1] / draws;
  }
  // The best constant predictor is the sample mean of eps; any other constant does worse.
  for (const Vec& c : {mean_eps, Vec{0.0, 0.0}, Vec{0.3, -0.2}}) {
    double constant = 0.0;
    for (int k = 0; k < draws; ++k) {
      constant += (c[0] - eps[k][0]) * (c[0] - eps[k][0]) + (c[1] - eps[k][1]) * (c[1] - eps[k][1]);
    }
    EXPECT_LT(exact, constant);
  }
}

TEST(ModelKind, NamesRoundTrip) {
  for (ModelKind k : {ModelKind::PointMass, ModelKind::Gaussian, ModelKind::GaussianMixture}) {
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_model_kind("dirac"), ValidationError);
}
