#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "schedlab/models.hpp"
#include "schedlab/schedule.hpp"
#include "schedlab/vec.hpp"

namespace schedlab {

struct SamplerConfig {
  int n_steps = 50;
  double eta = 0.0;  // multiplier on the DDPM posterior standard deviation
  int step_offset = 1;
  double w_invert = 3.5;
  double w_reverse = 7.5;
  double input_scale_b = 1.0;
  bool variance_normalize = false;

  // Throws ValidationError when the grid would leave [0, T].
  void validate(int T) const;

  bool operator==(const SamplerConfig&) const = default;
};

// t_i = i * (T / N) + step_offset for i = 0 .. N - 1. T = 1000, N = 50 ends at 981.
std::vector<double> timestep_grid(int T, const SamplerConfig& config);

// Unconditional and conditional predictors mixed by a guidance scale.
struct ModelPair {
  AnalyticModel uncond;
  AnalyticModel cond;

  static ModelPair unguided(const AnalyticModel& model) { return {model, model}; }
  std::size_t dim() const { return cond.dim(); }
};

enum class Direction { Inversion, Reverse };
std::string_view to_string(Direction direction);

struct TrajectoryRecord {
  double t = 0.0;
  double alpha_bar = 1.0;
  Vec x;
  Vec eps_hat;  // predictor output used by the step that produced x; zeros for the first record
};

// n_steps + 1 records. Inversion runs from t = 0 up the grid; reverse runs down
// the grid and ends at t = 0.
struct Trajectory {
  Direction direction = Direction::Inversion;
  SamplerConfig config;
  std::vector<TrajectoryRecord> records;

  std::size_t dim() const { return records.empty() ? 0 : records.front().x.size(); }
  const Vec& final_state() const { return records.back().x; }
};

// x_t = sqrt(ab) b x0 + sqrt(1 - ab) eps, divided by sqrt(ab b^2 sigma0^2 + 1 - ab)
// when normalize is set.
Vec forward_closed_form(std::span<const double> x0, std::span<const double> eps, double alpha_bar,
                        double b = 1.0, bool normalize = false, double sigma0_sq = 1.0);

// DDIM update from alpha_bar_t to alpha_bar_prev with sigma = eta * sigma_DDPM.
// Throws DomainError when 1 - alpha_bar_prev - sigma^2 < 0.
Vec ddim_reverse_step(std::span<const double> x_t, std::span<const double> eps_hat, double alpha_bar_t,
                      double alpha_bar_prev, double eta, std::span<const double> noise);

// sigma_DDPM(t) = sqrt((1 - ab_prev) / (1 - ab_t)) * sqrt(1 - ab_t / ab_prev).
double ddpm_posterior_std(double alpha_bar_t, double alpha_bar_prev);

// Deterministic inversion step, the algebraic inverse of ddim_reverse_step at
// eta = 0 for a fixed eps_hat.
Vec ddim_invert_step(std::span<const double> x_prev, std::span<const double> eps_hat,
                     double alpha_bar_prev, double alpha_bar_t);

// Inversion from b * x0 at t = 0 through the grid with guidance w_invert. The
// predictor is evaluated at the earlier state and earlier noise level; when that
// level is alpha_bar = 1 (singular schedules) the step's target level is used.
Trajectory run_inversion(const ModelPair& models, std::span<const double> x0, const ScheduleTable& table,
                         const SamplerConfig& config, std::uint64_t seed);

// Reverse pass from x_T at the last grid point down to t = 0 with guidance
// w_reverse. eta > 0 draws step noise from std::mt19937_64(seed).
Trajectory run_reverse(const ModelPair& models, std::span<const double> x_T, const ScheduleTable& table,
                       const SamplerConfig& config, std::uint64_t seed);

struct PinnedReconstruction {
  Trajectory source;
  Trajectory target;
};

// Reverse pass pinned to a stored inversion: each step adds the residual
// x*_{t-1} - x'_{t-1} of the source branch, and the target branch receives the
// same residual unchanged. Deterministic (eta is ignored).
PinnedReconstruction pinned_reconstruction(const Trajectory& inversion, const ModelPair& source,
                                           const ModelPair& target, const SamplerConfig& config);

struct OdeOptions {
  int n_fine = 2000;
  // Start (or end) exactly on a singular t = 0. Needs a model with positive
  // variance everywhere; otherwise the span is clamped to the first positive grid
  // timestep.
  bool allow_singular_start = false;
};

struct OdeResult {
  Vec x;
  double t_start = 0.0;
  double t_end = 0.0;
  bool start_clamped = false;
  bool end_clamped = false;
};

// Reference solution of the continuous DDIM ODE d(x / sqrt(ab)) = eps_hat d sigma,
// sigma = sqrt(1/ab - 1), with the guided exact predictor. Classical RK4 with
// n_fine steps uniform in asinh(sigma / 0.01). Noise levels at grid timesteps
// come from the table, elsewhere from the schedule.
OdeResult ode_reference_solve(const ModelPair& models, double w, std::span<const double> x_start,
                              const ScheduleTable& table, double t_start, double t_end,
                              const OdeOptions& options = {});

// Same integrator between two noise levels given as sigma values.
Vec ode_solve_sigma(const ModelPair& models, double w, std::span<const double> x_start, double sigma_start,
                    double sigma_end, int n_fine);

}  // namespace schedlab
