#pragma once

#include <utility>
#include <vector>

#include "schedlab/schedule.hpp"

namespace schedlab {

// dx_t/dt = coeff_x0 * x0 + coeff_eps * eps for x_t = sqrt(ab) x0 + sqrt(1 - ab) eps.
struct DerivativeCoefficients {
  double t = 0.0;
  double coeff_x0 = 0.0;
  double coeff_eps = 0.0;
  double d_alpha_bar_dt = 0.0;
  bool finite = true;
};

// The alpha_bar(t) that d_alpha_bar_dt differentiates: the exponential form for
// ScaledLinear (the exact product has no continuous derivative), the schedule
// itself for every other family.
double differentiable_alpha_bar(const ScheduleSpec& spec, double t);

// Analytic derivative of differentiable_alpha_bar. Throws DomainError outside [0, T].
double d_alpha_bar_dt(const ScheduleSpec& spec, double t);

// Boundary points where alpha_bar is exactly 0 or 1 are resolved by case analysis
// of the limit; an infinite limit sets finite = false and never throws.
DerivativeCoefficients dx_dt_coefficients(const ScheduleSpec& spec, double t);

// n samples on [t_min, t_max], geometrically spaced toward t_min (a leading 0 is
// kept as its own sample when t_min = 0). Endpoints are exact.
std::vector<double> geometric_samples(double t_min, double t_max, int n);

std::vector<DerivativeCoefficients> singularity_scan(const ScheduleSpec& spec, double t_min,
                                                     double t_max, int n);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares of logsnr on t over rows whose position in the table's
// time span lies inside [lo, hi]. Non-finite logsnr rows are skipped.
LinearFit logsnr_linearity_fit(const ScheduleTable& table, std::pair<double, double> window = {0.2, 0.8});

// Plain OLS helper shared with the convergence fit.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace schedlab
