#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schedlab/vec.hpp"

namespace schedlab {

enum class ModelKind { PointMass, Gaussian, GaussianMixture };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Isotropic component: N(mean, variance * I), or a point mass when variance is 0.
struct Component {
  double weight = 1.0;
  Vec mean;
  double variance = 0.0;

  bool operator==(const Component&) const = default;
};

// Data distribution with a closed-form optimal noise predictor; stands in for a
// trained eps network. Immutable after construction.
class AnalyticModel {
 public:
  AnalyticModel(ModelKind kind, std::vector<Component> components,
                std::optional<std::string> condition_label = std::nullopt);

  static AnalyticModel point_mass(Vec mean);
  static AnalyticModel gaussian(Vec mean, double variance);
  static AnalyticModel mixture(std::vector<Component> components);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Component>& components() const noexcept { return components_; }
  const std::optional<std::string>& condition_label() const noexcept { return label_; }

  // True when every component has positive variance, so the predictor has a
  // finite limit (zero) at alpha_bar = 1.
  bool smooth_at_data() const noexcept;

  Vec mean() const;
  // Per-coordinate data variance averaged over coordinates.
  double data_variance() const;

  bool operator==(const AnalyticModel&) const = default;

 private:
  ModelKind kind_;
  std::vector<Component> components_;
  std::optional<std::string> label_;
  std::size_t dim_ = 0;
};

// eps_hat = -sqrt(1 - alpha_bar) * grad log p_t(x_t). Throws DomainError unless
// alpha_bar lies strictly inside (0, 1); ValidationError on dimension mismatch.
Vec exact_eps(const AnalyticModel& model, std::span<const double> x_t, double alpha_bar);

// Same predictor parameterized by sigma = sqrt(1/alpha_bar - 1) on the scaled
// state y = x / sqrt(alpha_bar). Defined at sigma = 0 for smooth_at_data models.
Vec exact_eps_at_sigma(const AnalyticModel& model, std::span<const double> y, double sigma);

// eps_uncond + w (eps_cond - eps_uncond).
Vec guided_eps(const AnalyticModel& uncond, const AnalyticModel& cond, std::span<const double> x_t,
               double alpha_bar, double w);

// Component by weight, then a Gaussian draw. std::mt19937_64 seeded from the
// 64-bit seed; bit-reproducible within one build.
std::vector<Vec> sample_x0(const AnalyticModel& model, std::uint64_t rng_seed, int n);

}  // namespace schedlab
