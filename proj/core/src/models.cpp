#include "schedlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "schedlab/errors.hpp"

namespace schedlab {
namespace {

constexpr double kWeightTolerance = 1e-12;

// Shared predictor over (alpha_bar, 1 - alpha_bar) so callers that know the
// complement exactly (sigma parameterization) avoid cancellation.
Vec eps_impl(const AnalyticModel& model, std::span<const double> x, double ab, double one_minus) {
  const auto& comps = model.components();
  const double sqrt_ab = std::sqrt(ab);
  const double sqrt_om = std::sqrt(one_minus);
  const std::size_t dim = x.size();

  if (comps.size() == 1) {
    const Component& c = comps.front();
    const double s = ab * c.variance + one_minus;
    Vec out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = sqrt_om * (x[i] - sqrt_ab * c.mean[i]) / s;
    return out;
  }

  // Responsibilities in log space with max subtraction.
  std::vector<double> log_r(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const Component& c = comps[j];
    const double s = ab * c.variance + one_minus;
    double d2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = x[i] - sqrt_ab * c.mean[i];
      d2 += d * d;
    }
    log_r[j] = std::log(c.weight) - 0.5 * d2 / s - 0.5 * static_cast<double>(dim) * std::log(s);
  }
  const double max_log = *std::max_element(log_r.begin(), log_r.end());
  double total = 0.0;
  for (double& lr : log_r) {
    lr = std::exp(lr - max_log);
    total += lr;
  }

  Vec out(dim, 0.0);
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const Component& c = comps[j];
    const double r = log_r[j] / total;
    if (r == 0.0) continue;
    const double s = ab * c.variance + one_minus;
    for (std::size_t i = 0; i < dim; ++i) out[i] += r * sqrt_om * (x[i] - sqrt_ab * c.mean[i]) / s;
  }
  return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::PointMass: return "point_mass";
    case ModelKind::Gaussian: return "gaussian";
    case ModelKind::GaussianMixture: return "gaussian_mixture";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "point_mass") return ModelKind::PointMass;
  if (name == "gaussian") return ModelKind::Gaussian;
  if (name == "gaussian_mixture") return ModelKind::GaussianMixture;
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

AnalyticModel::AnalyticModel(ModelKind kind, std::vector<Component> components,
                             std::optional<std::string> condition_label)
    : kind_(kind), components_(std::move(components)), label_(std::move(condition_label)) {
  if (components_.empty()) throw ValidationError("model needs at least one component");
  if (kind_ != ModelKind::GaussianMixture && components_.size() != 1) {
    throw ValidationError(std::string(to_string(kind_)) + " model takes exactly one component");
  }
  dim_ = components_.front().mean.size();
  if (dim_ == 0) throw ValidationError("model dimension must be positive");
  double weight_sum = 0.0;
  for (const Component& c : components_) {
    if (c.mean.size() != dim_) throw ValidationError("component means must share one dimension");
    if (!(c.weight > 0.0)) throw ValidationError("component weights must be > 0");
    if (!std::all_of(c.mean.begin(), c.mean.end(), [](double v) { return std::isfinite(v); })) {
      throw ValidationError("component means must be finite");
    }
    if (kind_ == ModelKind::PointMass) {
      if (c.variance != 0.0) throw ValidationError("point_mass variance must be 0");
    } else if (!(c.variance > 0.0) || !std::isfinite(c.variance)) {
      throw ValidationError("gaussian component variance must be > 0");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > kWeightTolerance) {
    throw ValidationError("component weights must sum to 1");
  }
}

AnalyticModel AnalyticModel::point_mass(Vec mean) {
  return AnalyticModel(ModelKind::PointMass, {Component{1.0, std::move(mean), 0.0}});
}

AnalyticModel AnalyticModel::gaussian(Vec mean, double variance) {
  return AnalyticModel(ModelKind::Gaussian, {Component{1.0, std::move(mean), variance}});
}

AnalyticModel AnalyticModel::mixture(std::vector<Component> components) {
  return AnalyticModel(ModelKind::GaussianMixture, std::move(components));
}

bool AnalyticModel::smooth_at_data() const noexcept {
  return std::all_of(components_.begin(), components_.end(),
                     [](const Component& c) { return c.variance > 0.0; });
}

Vec AnalyticModel::mean() const {
  Vec m(dim_, 0.0);
  for (const Component& c : components_) {
    for (std::size_t i = 0; i < dim_; ++i) m[i] += c.weight * c.mean[i];
  }
  return m;
}

double AnalyticModel::data_variance() const {
  double second = 0.0;
  for (const Component& c : components_) {
    second += c.weight * (c.variance + dot(c.mean, c.mean) / static_cast<double>(dim_));
  }
  const Vec m = mean();
  return second - dot(m, m) / static_cast<double>(dim_);
}

Vec exact_eps(const AnalyticModel& model, std::span<const double> x_t, double alpha_bar) {
  if (x_t.size() != model.dim()) throw ValidationError("exact_eps: state dimension mismatch");
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    throw DomainError("exact_eps: alpha_bar = " + std::to_string(alpha_bar) +
                      " must lie strictly inside (0, 1)");
  }
  return eps_impl(model, x_t, alpha_bar, 1.0 - alpha_bar);
}

Vec exact_eps_at_sigma(const AnalyticModel& model, std::span<const double> y, double sigma) {
  if (y.size() != model.dim()) throw ValidationError("exact_eps: state dimension mismatch");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("exact_eps: sigma must be finite and >= 0");
  if (sigma == 0.0) {
    if (!model.smooth_at_data()) {
      throw DomainError("exact_eps: predictor undefined at the data point of a point mass");
    }
    return Vec(model.dim(), 0.0);
  }
  const double denom = 1.0 + sigma * sigma;
  const double ab = 1.0 / denom;
  const double one_minus = sigma * sigma / denom;
  const Vec x = scaled(y, std::sqrt(ab));
  return eps_impl(model, x, ab, one_minus);
}

Vec guided_eps(const AnalyticModel& uncond, const AnalyticModel& cond, std::span<const double> x_t,
               double alpha_bar, double w) {
  if (uncond.dim() != cond.dim()) throw ValidationError("guided_eps: models differ in dimension");
  const Vec e_u = exact_eps(uncond, x_t, alpha_bar);
  if (w == 0.0) return e_u;
  const Vec e_c = exact_eps(cond, x_t, alpha_bar);
  if (w == 1.0) return e_c;
  Vec out(e_u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = e_u[i] + w * (e_c[i] - e_u[i]);
  return out;
}

std::vector<Vec> sample_x0(const AnalyticModel& model, std::uint64_t rng_seed, int n) {
  if (n < 1) throw ValidationError("sample_x0: n must be >= 1");
  std::mt19937_64 rng(rng_seed);
  std::vector<double> weights;
  for (const Component& c : model.components()) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const Component& c = model.components()[pick(rng)];
    Vec x(c.mean);
    if (c.variance > 0.0) {
      const double sd = std::sqrt(c.variance);
      for (double& v : x) v += sd * normal(rng);
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace schedlab
