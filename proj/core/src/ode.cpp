#include <algorithm>
#include <cmath>
#include <string>

#include "schedlab/calculus.hpp"
#include "schedlab/errors.hpp"
#include "schedlab/sampler.hpp"

namespace schedlab {
namespace {

constexpr double kSigmaScale = 0.01;

Vec guided_eps_sigma(const ModelPair& models, double w, std::span<const double> y, double sigma) {
  const Vec e_u = exact_eps_at_sigma(models.uncond, y, sigma);
  if (w == 0.0) return e_u;
  const Vec e_c = exact_eps_at_sigma(models.cond, y, sigma);
  if (w == 1.0) return e_c;
  Vec out(e_u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = e_u[i] + w * (e_c[i] - e_u[i]);
  return out;
}

double sigma_at(const ScheduleTable& table, const Schedule& schedule, double t) {
  const auto it = std::lower_bound(table.timesteps.begin(), table.timesteps.end(), t);
  double logsnr;
  if (it != table.timesteps.end() && *it == t) {
    logsnr = table.logsnr[static_cast<std::size_t>(it - table.timesteps.begin())];
  } else {
    logsnr = schedule.logsnr(t);
  }
  return std::exp(-0.5 * logsnr);
}

}  // namespace

Vec ode_solve_sigma(const ModelPair& models, double w, std::span<const double> x_start, double sigma_start,
                    double sigma_end, int n_fine) {
  if (n_fine < 1) throw ValidationError("ode: n_fine must be >= 1");
  if (x_start.size() != models.dim()) throw ValidationError("ode: state dimension mismatch");
  if (!(sigma_start >= 0.0 && sigma_end >= 0.0) || !std::isfinite(sigma_start) || !std::isfinite(sigma_end)) {
    throw DomainError("ode: noise levels must be finite and >= 0");
  }
  if (sigma_start == sigma_end) return Vec(x_start.begin(), x_start.end());

  const std::size_t dim = x_start.size();
  const double u0 = std::asinh(sigma_start / kSigmaScale);
  const double u1 = std::asinh(sigma_end / kSigmaScale);
  const double h = (u1 - u0) / n_fine;

  // dy/du = eps(y, sigma(u)) * dsigma/du with sigma = c sinh(u).
  const auto rhs = [&](double u, const Vec& y) {
    const double sigma = u == 0.0 ? 0.0 : kSigmaScale * std::sinh(u);
    Vec dy = guided_eps_sigma(models, w, y, sigma);
    const double jac = kSigmaScale * std::cosh(u);
    for (double& v : dy) v *= jac;
    return dy;
  };

  Vec y = scaled(x_start, std::sqrt(1.0 + sigma_start * sigma_start));
  Vec tmp(dim);
  for (int step = 0; step < n_fine; ++step) {
    const double u = u0 + step * h;
    const double u_next = step + 1 == n_fine ? u1 : u0 + (step + 1) * h;
    const double u_mid = 0.5 * (u + u_next);
    const Vec k1 = rhs(u, y);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    const Vec k2 = rhs(u_mid, tmp);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    const Vec k3 = rhs(u_mid, tmp);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
    const Vec k4 = rhs(u_next, tmp);
    for (std::size_t i = 0; i < dim; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return scaled(y, 1.0 / std::sqrt(1.0 + sigma_end * sigma_end));
}

OdeResult ode_reference_solve(const ModelPair& models, double w, std::span<const double> x_start,
                              const ScheduleTable& table, double t_start, double t_end,
                              const OdeOptions& options) {
  const ScheduleSpec& spec = table.spec;
  for (double t : {t_start, t_end}) {
    if (!(t >= 0.0 && t <= spec.T)) {
      throw DomainError("ode: t = " + std::to_string(t) + " outside [0, " + std::to_string(spec.T) + "]");
    }
  }
  if (table.size() == 0) throw ValidationError("ode: empty schedule table");

  OdeResult result;
  result.t_start = t_start;
  result.t_end = t_end;

  if (!options.allow_singular_start) {
    const auto first_positive = std::find_if(table.timesteps.begin(), table.timesteps.end(),
                                             [](double t) { return t > 0.0; });
    const auto clamp = [&](double& t, bool& flag) {
      if (dx_dt_coefficients(spec, t).finite) return;
      if (first_positive == table.timesteps.end()) {
        throw DomainError("ode: singular endpoint and no positive grid timestep to clamp to");
      }
      t = *first_positive;
      flag = true;
    };
    if (t_start == 0.0) clamp(result.t_start, result.start_clamped);
    if (t_end == 0.0) clamp(result.t_end, result.end_clamped);
  }

  const Schedule schedule(spec);
  const double sigma_start = sigma_at(table, schedule, result.t_start);
  const double sigma_end = sigma_at(table, schedule, result.t_end);
  result.x = ode_solve_sigma(models, w, x_start, sigma_start, sigma_end, options.n_fine);
  return result;
}

}  // namespace schedlab
