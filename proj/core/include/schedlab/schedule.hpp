#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace schedlab {

enum class Family { ScaledLinear, Cosine, Sigmoid, Logistic };

// Logistic only. Decreasing is sigma(-k (t - t0)); VerbatimIncreasing is the
// increasing sigma(k (t - t0)) form. It exists for checking closed-form derivative
// arithmetic and is not usable as a diffusion schedule.
enum class Orientation { Decreasing, VerbatimIncreasing };

std::string_view to_string(Family family);
std::string_view to_string(Orientation orientation);
Family parse_family(std::string_view name);
Orientation parse_orientation(std::string_view name);

// Shifted-sigmoid baseline: alpha_bar(t) = (v_end - sigmoid(u(t))) / (v_end - v_start)
// with u(t) = ((t / T) (end - start) + start) / tau, v_x = sigmoid(x / tau).
struct SigmoidParams {
  double start = -3.0;
  double end = 3.0;
  double tau = 1.0;

  bool operator==(const SigmoidParams&) const = default;
};

struct ScheduleSpec {
  Family family = Family::Logistic;
  int T = 1000;
  double k = 0.015;
  double t0 = 600.0;
  double s = 0.008;
  SigmoidParams sigmoid{};
  Orientation orientation = Orientation::Decreasing;
  // Logistic only. When set, alpha_bar is affinely remapped so that alpha_bar(T)
  // equals this target while alpha_bar(0) keeps its raw value.
  std::optional<double> affine_terminal_alpha_bar;

  // Family defaults for span T; the logistic midpoint is int(0.6 T).
  static ScheduleSpec defaults(Family family, int T = 1000);

  // Throws ValidationError.
  void validate() const;

  bool operator==(const ScheduleSpec&) const = default;
};

// Logistic midpoint presets, int(fraction * T).
double logistic_t0_preset(int T, double fraction);
inline constexpr double kT0MainFraction = 0.6;
inline constexpr double kT0EarlyFraction = 0.3;

// Upper bound applied to the per-step beta derived in a ScheduleTable.
inline constexpr double kMaxBeta = 0.999;

// beta_i = 0.1/T + 19.9 i / (T (T - 1)); i in [0, T].
double scaled_linear_beta(int T, int i);
// prod_{i=1}^{n} (1 - beta_i); 1 at n = 0.
double scaled_linear_alpha_bar_product(int T, int n);
// exp(-0.1 t/T - 19.9 t (t + 1) / (2 T (T - 1))), first-order log expansion of
// the product, smooth in t.
double scaled_linear_alpha_bar_exponential(int T, double t);

// A validated spec with precomputed state. Immutable; safe to share across threads.
class Schedule {
 public:
  explicit Schedule(ScheduleSpec spec);

  const ScheduleSpec& spec() const noexcept { return spec_; }
  int span() const noexcept { return spec_.T; }

  // alpha_bar(t), t in [0, T]. ScaledLinear returns the exact product at integer t
  // and interpolates log alpha_bar linearly between neighbouring integers.
  // Throws DomainError for t outside [0, T].
  double alpha_bar(double t) const;

  // 1 - alpha_bar(t) evaluated without cancellation where the family allows it.
  double one_minus_alpha_bar(double t) const;

  double snr(double t) const;
  double logsnr(double t) const;

 private:
  double logistic_raw(double t) const;
  double logistic_raw_complement(double t) const;

  ScheduleSpec spec_;
  std::vector<double> products_;     // ScaledLinear: prod_{i<=n} (1 - beta_i)
  std::vector<double> log_product_;
  double cosine_f0_ = 1.0;
  double sigmoid_v_start_ = 0.0;
  double sigmoid_v_end_ = 1.0;
  double logistic_raw0_ = 0.0;
  double logistic_rawT_ = 0.0;
};

double eval_alpha_bar(const ScheduleSpec& spec, double t);

struct ScheduleTable {
  ScheduleSpec spec;
  std::vector<double> timesteps;
  std::vector<double> alpha_bar;
  std::vector<double> beta;
  std::vector<double> snr;
  std::vector<double> logsnr;

  std::size_t size() const noexcept { return timesteps.size(); }
};

// beta_i = 1 - alpha_bar_i / alpha_bar_{i-1} with alpha_bar_{-1} = 1. Rows whose
// beta exceeds kMaxBeta are clamped and their alpha_bar rederived from the clamped
// beta, so the table never reaches alpha_bar = 0. All other rows equal
// Schedule::alpha_bar exactly.
ScheduleTable build_table(const ScheduleSpec& spec, std::span<const double> grid);

// Integer grid 0, 1, ..., T.
std::vector<double> integer_grid(int T);
// n points evenly spaced over [0, T] (endpoints exact).
std::vector<double> uniform_grid(int T, int n);

double terminal_snr(const ScheduleSpec& spec);

}  // namespace schedlab
