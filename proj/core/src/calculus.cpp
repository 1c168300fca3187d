#include "schedlab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "schedlab/errors.hpp"

namespace schedlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_time(const ScheduleSpec& spec, double t) {
  if (!(t >= 0.0 && t <= static_cast<double>(spec.T))) {
    throw DomainError("t = " + std::to_string(t) + " outside [0, " + std::to_string(spec.T) + "]");
  }
}

double scaled_linear_exponent(int T, double t) {
  const double Td = T;
  return -0.1 * t / Td - 19.9 * t * (t + 1.0) / (2.0 * Td * (Td - 1.0));
}

double scaled_linear_exponent_slope(int T, double t) {
  const double Td = T;
  return -0.1 / Td - 19.9 * (2.0 * t + 1.0) / (2.0 * Td * (Td - 1.0));
}

double cosine_angle_scale(const ScheduleSpec& spec) {
  return std::numbers::pi / (2.0 * spec.T * (1.0 + spec.s));
}

double cosine_f0(const ScheduleSpec& spec) {
  const double c = std::cos(spec.s / (1.0 + spec.s) * std::numbers::pi / 2.0);
  return c * c;
}

struct AlphaBarPair {
  double value;
  double complement;
};

AlphaBarPair differentiable_pair(const ScheduleSpec& spec, double t) {
  if (spec.family == Family::ScaledLinear) {
    const double f = scaled_linear_exponent(spec.T, t);
    return {std::exp(f), -std::expm1(f)};
  }
  const Schedule schedule(spec);
  return {schedule.alpha_bar(t), schedule.one_minus_alpha_bar(t)};
}

}  // namespace

double differentiable_alpha_bar(const ScheduleSpec& spec, double t) {
  spec.validate();
  check_time(spec, t);
  return differentiable_pair(spec, t).value;
}

double d_alpha_bar_dt(const ScheduleSpec& spec, double t) {
  spec.validate();
  check_time(spec, t);
  switch (spec.family) {
    case Family::ScaledLinear: {
      const double f = scaled_linear_exponent(spec.T, t);
      return std::exp(f) * scaled_linear_exponent_slope(spec.T, t);
    }
    case Family::Cosine: {
      // d/dt cos^2(a(t)) = -sin(2 a) a'; exactly zero at a = pi/2.
      if (t == spec.T) return 0.0;
      const double a = (t / spec.T + spec.s) / (1.0 + spec.s) * std::numbers::pi / 2.0;
      return -std::sin(2.0 * a) * cosine_angle_scale(spec) / cosine_f0(spec);
    }
    case Family::Sigmoid: {
      const auto& p = spec.sigmoid;
      const double u = ((t / spec.T) * (p.end - p.start) + p.start) / p.tau;
      const double v_start = sigmoid(p.start / p.tau);
      const double v_end = sigmoid(p.end / p.tau);
      return -sigmoid(u) * sigmoid(-u) * (p.end - p.start) / (spec.T * p.tau) / (v_end - v_start);
    }
    case Family::Logistic: {
      const double z = spec.k * (t - spec.t0);
      const double slope = spec.k * sigmoid(z) * sigmoid(-z);
      if (spec.orientation == Orientation::VerbatimIncreasing) return slope;
      if (!spec.affine_terminal_alpha_bar) return -slope;
      const double raw0 = sigmoid(spec.k * spec.t0);
      const double rawT = sigmoid(-spec.k * (spec.T - spec.t0));
      const double target = *spec.affine_terminal_alpha_bar;
      return -slope * (raw0 - target) / (raw0 - rawT);
    }
  }
  return 0.0;
}

DerivativeCoefficients dx_dt_coefficients(const ScheduleSpec& spec, double t) {
  DerivativeCoefficients out;
  out.t = t;
  out.d_alpha_bar_dt = d_alpha_bar_dt(spec, t);
  const double d = out.d_alpha_bar_dt;

  // Cosine at t = T: alpha_bar ~ C (T - t)^2, so the x0 term tends to -sqrt(C)
  // while the eps term vanishes with d alpha_bar / dt.
  if (spec.family == Family::Cosine && t == spec.T) {
    out.coeff_x0 = -cosine_angle_scale(spec) / std::sqrt(cosine_f0(spec));
    out.coeff_eps = 0.0;
    out.finite = true;
    return out;
  }

  const AlphaBarPair ab = differentiable_pair(spec, t);
  if (ab.complement == 0.0) {
    out.coeff_x0 = d / (2.0 * std::sqrt(ab.value));
    if (d != 0.0) {
      out.coeff_eps = d < 0.0 ? kInf : -kInf;
      out.finite = false;
    } else if (spec.family == Family::Cosine && spec.s == 0.0) {
      // 1 - alpha_bar = sin^2(pi t / 2T): the eps term tends to pi / 2T.
      out.coeff_eps = std::numbers::pi / (2.0 * spec.T);
      out.finite = true;
    } else {
      out.coeff_eps = std::numeric_limits<double>::quiet_NaN();
      out.finite = false;
    }
    return out;
  }
  if (ab.value == 0.0) {
    out.coeff_eps = -d / (2.0 * std::sqrt(ab.complement));
    if (d != 0.0) {
      out.coeff_x0 = d < 0.0 ? -kInf : kInf;
    } else {
      out.coeff_x0 = std::numeric_limits<double>::quiet_NaN();
    }
    out.finite = false;
    return out;
  }
  out.coeff_x0 = d / (2.0 * std::sqrt(ab.value));
  out.coeff_eps = -d / (2.0 * std::sqrt(ab.complement));
  out.finite = std::isfinite(out.coeff_x0) && std::isfinite(out.coeff_eps);
  return out;
}

std::vector<double> geometric_samples(double t_min, double t_max, int n) {
  if (n < 2) throw ValidationError("scan needs n >= 2");
  if (!(t_min >= 0.0 && t_min < t_max)) throw ValidationError("scan range must satisfy 0 <= t_min < t_max");
  std::vector<double> ts(static_cast<std::size_t>(n));
  if (t_min > 0.0) {
    const double ratio = t_max / t_min;
    for (int i = 0; i < n; ++i) ts[i] = t_min * std::pow(ratio, static_cast<double>(i) / (n - 1));
  } else {
    ts[0] = 0.0;
    if (n == 2) {
      ts[1] = t_max;
    } else {
      // Remaining n - 1 samples span six decades below t_max.
      const double lo = t_max * 1e-6;
      for (int i = 1; i < n; ++i) {
        ts[i] = lo * std::pow(t_max / lo, static_cast<double>(i - 1) / (n - 2));
      }
    }
  }
  ts.front() = t_min;
  ts.back() = t_max;
  return ts;
}

std::vector<DerivativeCoefficients> singularity_scan(const ScheduleSpec& spec, double t_min,
                                                     double t_max, int n) {
  spec.validate();
  if (t_max > spec.T) throw ValidationError("scan range exceeds [0, T]");
  const std::vector<double> ts = geometric_samples(t_min, t_max, n);
  std::vector<DerivativeCoefficients> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(dx_dt_coefficients(spec, t));
  return out;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("least squares: length mismatch");
  if (x.size() < 2) throw ValidationError("least squares needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ValidationError("least squares: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = x.size();
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

LinearFit logsnr_linearity_fit(const ScheduleTable& table, std::pair<double, double> window) {
  const auto [lo, hi] = window;
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) {
    throw ValidationError("linearity window must satisfy 0 <= lo < hi <= 1");
  }
  if (table.size() < 3) throw ValidationError("linearity fit needs at least 3 grid points");
  const double first = table.timesteps.front();
  const double span = table.timesteps.back() - first;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double pos = (table.timesteps[i] - first) / span;
    if (pos < lo || pos > hi || !std::isfinite(table.logsnr[i])) continue;
    xs.push_back(table.timesteps[i]);
    ys.push_back(table.logsnr[i]);
  }
  if (xs.size() < 3) {
    throw ValidationError("linearity window holds " + std::to_string(xs.size()) +
                          " points, need at least 3");
  }
  return least_squares(xs, ys);
}

}  // namespace schedlab
