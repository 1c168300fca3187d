#include "schedlab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "schedlab/errors.hpp"

namespace schedlab {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double cosine_f(const ScheduleSpec& spec, double t) {
  const double a = (t / spec.T + spec.s) / (1.0 + spec.s) * std::numbers::pi / 2.0;
  const double c = std::cos(a);
  return c * c;
}

void check_time(const ScheduleSpec& spec, double t) {
  if (!(t >= 0.0 && t <= static_cast<double>(spec.T))) {
    throw DomainError("t = " + std::to_string(t) + " outside [0, " + std::to_string(spec.T) + "]");
  }
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::ScaledLinear: return "scaled_linear";
    case Family::Cosine: return "cosine";
    case Family::Sigmoid: return "sigmoid";
    case Family::Logistic: return "logistic";
  }
  return "unknown";
}

std::string_view to_string(Orientation orientation) {
  return orientation == Orientation::Decreasing ? "decreasing" : "verbatim_increasing";
}

Family parse_family(std::string_view name) {
  if (name == "scaled_linear") return Family::ScaledLinear;
  if (name == "cosine") return Family::Cosine;
  if (name == "sigmoid") return Family::Sigmoid;
  if (name == "logistic") return Family::Logistic;
  throw ValidationError("unknown schedule family '" + std::string(name) + "'");
}

Orientation parse_orientation(std::string_view name) {
  if (name == "decreasing") return Orientation::Decreasing;
  if (name == "verbatim_increasing") return Orientation::VerbatimIncreasing;
  throw ValidationError("unknown orientation '" + std::string(name) + "'");
}

double logistic_t0_preset(int T, double fraction) {
  return std::floor(fraction * T);
}

ScheduleSpec ScheduleSpec::defaults(Family family, int T) {
  ScheduleSpec spec;
  spec.family = family;
  spec.T = T;
  spec.t0 = logistic_t0_preset(T, kT0MainFraction);
  return spec;
}

void ScheduleSpec::validate() const {
  if (T < 2) throw ValidationError("T must be >= 2");
  switch (family) {
    case Family::ScaledLinear:
      if (!(scaled_linear_beta(T, T) < 1.0)) {
        throw ValidationError("scaled_linear needs T >= 21 so that every beta stays below 1");
      }
      break;
    case Family::Cosine:
      if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("cosine offset s must be >= 0");
      break;
    case Family::Sigmoid:
      if (!(sigmoid.tau > 0.0)) throw ValidationError("sigmoid tau must be > 0");
      if (!(sigmoid.start < sigmoid.end)) throw ValidationError("sigmoid start must be < end");
      break;
    case Family::Logistic:
      if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("logistic k must be > 0");
      if (!(t0 > 0.0 && t0 < T)) throw ValidationError("logistic t0 must lie in (0, T)");
      break;
  }
  if (orientation == Orientation::VerbatimIncreasing && family != Family::Logistic) {
    throw ValidationError("verbatim_increasing orientation applies to the logistic family only");
  }
  if (affine_terminal_alpha_bar) {
    if (family != Family::Logistic || orientation != Orientation::Decreasing) {
      throw ValidationError("affine normalization requires a decreasing logistic schedule");
    }
    const double target = *affine_terminal_alpha_bar;
    if (!(target >= 0.0 && target < 1.0)) {
      throw ValidationError("affine terminal alpha_bar must lie in [0, 1)");
    }
    if (!(target < schedlab::sigmoid(k * t0))) {
      throw ValidationError("affine terminal alpha_bar must be below alpha_bar(0)");
    }
  }
}

double scaled_linear_beta(int T, int i) {
  return 0.1 / T + 19.9 * i / (static_cast<double>(T) * (T - 1));
}

double scaled_linear_alpha_bar_product(int T, int n) {
  double prod = 1.0;
  for (int i = 1; i <= n; ++i) prod *= 1.0 - scaled_linear_beta(T, i);
  return prod;
}

double scaled_linear_alpha_bar_exponential(int T, double t) {
  const double Td = T;
  return std::exp(-0.1 * t / Td - 19.9 * t * (t + 1.0) / (2.0 * Td * (Td - 1.0)));
}

Schedule::Schedule(ScheduleSpec spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.family) {
    case Family::ScaledLinear: {
      log_product_.resize(static_cast<std::size_t>(spec_.T) + 1);
      double prod = 1.0;
      log_product_[0] = 0.0;
      products_.resize(log_product_.size());
      products_[0] = 1.0;
      for (int i = 1; i <= spec_.T; ++i) {
        prod *= 1.0 - scaled_linear_beta(spec_.T, i);
        products_[i] = prod;
        log_product_[i] = std::log(prod);
      }
      break;
    }
    case Family::Cosine:
      cosine_f0_ = cosine_f(spec_, 0.0);
      break;
    case Family::Sigmoid:
      sigmoid_v_start_ = sigmoid(spec_.sigmoid.start / spec_.sigmoid.tau);
      sigmoid_v_end_ = sigmoid(spec_.sigmoid.end / spec_.sigmoid.tau);
      break;
    case Family::Logistic:
      logistic_raw0_ = logistic_raw(0.0);
      logistic_rawT_ = logistic_raw(spec_.T);
      break;
  }
}

double Schedule::logistic_raw(double t) const {
  const double z = spec_.k * (t - spec_.t0);
  return spec_.orientation == Orientation::Decreasing ? sigmoid(-z) : sigmoid(z);
}

double Schedule::logistic_raw_complement(double t) const {
  const double z = spec_.k * (t - spec_.t0);
  return spec_.orientation == Orientation::Decreasing ? sigmoid(z) : sigmoid(-z);
}

double Schedule::alpha_bar(double t) const {
  check_time(spec_, t);
  switch (spec_.family) {
    case Family::ScaledLinear: {
      const double floor_t = std::floor(t);
      const auto n = static_cast<std::size_t>(floor_t);
      const double frac = t - floor_t;
      if (frac == 0.0) return products_[n];
      return std::exp((1.0 - frac) * log_product_[n] + frac * log_product_[n + 1]);
    }
    case Family::Cosine:
      return cosine_f(spec_, t) / cosine_f0_;
    case Family::Sigmoid: {
      const auto& p = spec_.sigmoid;
      const double u = ((t / spec_.T) * (p.end - p.start) + p.start) / p.tau;
      return std::clamp((sigmoid_v_end_ - sigmoid(u)) / (sigmoid_v_end_ - sigmoid_v_start_), 0.0, 1.0);
    }
    case Family::Logistic: {
      const double raw = logistic_raw(t);
      if (!spec_.affine_terminal_alpha_bar) return raw;
      const double target = *spec_.affine_terminal_alpha_bar;
      return target + (raw - logistic_rawT_) * (logistic_raw0_ - target) /
                          (logistic_raw0_ - logistic_rawT_);
    }
  }
  return 0.0;
}

double Schedule::one_minus_alpha_bar(double t) const {
  check_time(spec_, t);
  switch (spec_.family) {
    case Family::ScaledLinear:
      return 1.0 - alpha_bar(t);
    case Family::Cosine: {
      // cos^2(b) - cos^2(a) = sin(a - b) sin(a + b)
      const double scale = std::numbers::pi / (2.0 * (1.0 + spec_.s));
      const double a = (t / spec_.T + spec_.s) * scale;
      const double b = spec_.s * scale;
      return std::sin(a - b) * std::sin(a + b) / cosine_f0_;
    }
    case Family::Sigmoid: {
      const auto& p = spec_.sigmoid;
      const double u = ((t / spec_.T) * (p.end - p.start) + p.start) / p.tau;
      return std::clamp((sigmoid(u) - sigmoid_v_start_) / (sigmoid_v_end_ - sigmoid_v_start_), 0.0, 1.0);
    }
    case Family::Logistic:
      if (!spec_.affine_terminal_alpha_bar) return logistic_raw_complement(t);
      return 1.0 - alpha_bar(t);
  }
  return 0.0;
}

double Schedule::snr(double t) const {
  return alpha_bar(t) / one_minus_alpha_bar(t);
}

double Schedule::logsnr(double t) const {
  return std::log(alpha_bar(t)) - std::log(one_minus_alpha_bar(t));
}

double eval_alpha_bar(const ScheduleSpec& spec, double t) {
  return Schedule(spec).alpha_bar(t);
}

ScheduleTable build_table(const ScheduleSpec& spec, std::span<const double> grid) {
  const Schedule schedule(spec);
  if (grid.empty()) throw ValidationError("schedule grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= spec.T)) {
      throw ValidationError("grid point " + std::to_string(grid[i]) + " outside [0, T]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError("grid must be strictly increasing");
    }
  }

  ScheduleTable table;
  table.spec = spec;
  table.timesteps.assign(grid.begin(), grid.end());
  const std::size_t n = grid.size();
  table.alpha_bar.resize(n);
  table.beta.resize(n);
  table.snr.resize(n);
  table.logsnr.resize(n);

  double previous = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ab = schedule.alpha_bar(grid[i]);
    double one_minus = schedule.one_minus_alpha_bar(grid[i]);
    double beta = 1.0 - ab / previous;
    if (beta > kMaxBeta) {
      beta = kMaxBeta;
      ab = previous * (1.0 - kMaxBeta);
      one_minus = 1.0 - ab;
    }
    table.alpha_bar[i] = ab;
    table.beta[i] = beta;
    table.snr[i] = ab / one_minus;
    table.logsnr[i] = std::log(ab) - std::log(one_minus);
    previous = ab;
  }
  return table;
}

std::vector<double> integer_grid(int T) {
  std::vector<double> grid(static_cast<std::size_t>(T) + 1);
  for (int i = 0; i <= T; ++i) grid[i] = i;
  return grid;
}

std::vector<double> uniform_grid(int T, int n) {
  if (n < 1) throw ValidationError("grid size must be >= 1");
  if (n == 1) return {0.0};
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) grid[i] = static_cast<double>(T) * i / (n - 1);
  grid.back() = T;
  return grid;
}

double terminal_snr(const ScheduleSpec& spec) {
  const Schedule schedule(spec);
  return schedule.alpha_bar(spec.T) / schedule.one_minus_alpha_bar(spec.T);
}

}  // namespace schedlab
