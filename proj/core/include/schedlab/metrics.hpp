#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace schedlab {

double mse(std::span<const double> a, std::span<const double> b);

// 10 log10(max_val^2 / mse); +infinity when mse is 0.
double psnr_from_mse(double mse_value, double max_val);
double psnr(std::span<const double> a, std::span<const double> b, double max_val);

struct ConvergenceFit {
  double order = 0.0;
  double r_squared = 0.0;
};

// Least-squares slope of log(err) against log(1/N). Needs at least 3 points
// with err > 0 and at least two distinct N.
ConvergenceFit convergence_order_fit(const std::vector<std::pair<int, double>>& errors);

// Norm of (edited - x0) after removing its component along edit_direction.
double edit_drift(std::span<const double> x0, std::span<const double> edited,
                  std::span<const double> edit_direction);

// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p_value(int wins, int trials);

struct PairedComparison {
  int wins = 0;    // pairs with a < b
  int losses = 0;  // pairs with a > b
  int ties = 0;
  double p_value = 1.0;
};

// Paired sign test of "a is smaller than b". Ties are dropped.
PairedComparison paired_sign_test(std::span<const double> a, std::span<const double> b);

struct RunReport {
  std::string scenario_id;
  std::string schedule_family;
  int n_steps = 0;
  // Mean local error per step; NaN where the oracle is undefined.
  std::vector<double> local_errors;
  double roundtrip_mse = 0.0;
  double roundtrip_psnr = 0.0;
  double psnr_max_val = 1.0;
  std::optional<double> edit_drift;
  std::optional<double> pinned_edit_drift;
  std::optional<double> pinned_roundtrip_mse;
  double terminal_logsnr = 0.0;
  std::optional<double> linearity_r2;
  std::size_t seed_count = 0;
  // Sweep coordinates and other scalar settings, keyed by name.
  std::map<std::string, double> parameters;
  double wall_time_seconds = 0.0;

  bool operator==(const RunReport&) const = default;
};

}  // namespace schedlab
