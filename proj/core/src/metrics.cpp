#include "schedlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "schedlab/errors.hpp"
#include "schedlab/vec.hpp"

namespace schedlab {

double mse(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "mse");
  if (a.empty()) throw ValidationError("mse: empty vectors");
  return squared_distance(a, b) / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value, double max_val) {
  if (!(max_val > 0.0)) throw ValidationError("psnr: max_val must be > 0");
  if (!(mse_value >= 0.0)) throw ValidationError("psnr: mse must be >= 0");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse_value);
}

double psnr(std::span<const double> a, std::span<const double> b, double max_val) {
  return psnr_from_mse(mse(a, b), max_val);
}

ConvergenceFit convergence_order_fit(const std::vector<std::pair<int, double>>& errors) {
  if (errors.size() < 3) throw ValidationError("convergence fit needs at least 3 points");
  double mx = 0.0, my = 0.0;
  std::vector<double> xs, ys;
  for (const auto& [n, err] : errors) {
    if (n <= 0) throw ValidationError("convergence fit: N must be positive");
    if (!(err > 0.0) || !std::isfinite(err)) throw ValidationError("convergence fit: errors must be finite and > 0");
    xs.push_back(-std::log(static_cast<double>(n)));
    ys.push_back(std::log(err));
    mx += xs.back();
    my += ys.back();
  }
  const double count = static_cast<double>(xs.size());
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("convergence fit needs at least two distinct N");
  ConvergenceFit fit;
  fit.order = sxy / sxx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

double edit_drift(std::span<const double> x0, std::span<const double> edited,
                  std::span<const double> edit_direction) {
  require_same_dim(x0, edited, "edit_drift");
  require_same_dim(x0, edit_direction, "edit_drift direction");
  const double dd = dot(edit_direction, edit_direction);
  if (!(dd > 0.0)) throw ValidationError("edit_drift: edit direction must be nonzero");
  Vec delta(x0.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = edited[i] - x0[i];
  const double coef = dot(delta, edit_direction) / dd;
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= coef * edit_direction[i];
  return norm(delta);
}

double sign_test_p_value(int wins, int trials) {
  if (trials < 0 || wins < 0 || wins > trials) throw ValidationError("sign test: need 0 <= wins <= trials");
  if (wins == 0) return 1.0;
  const double log_half = std::log(0.5) * trials;
  const double log_fact_n = std::lgamma(trials + 1.0);
  double p = 0.0;
  for (int k = wins; k <= trials; ++k) {
    p += std::exp(log_fact_n - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) + log_half);
  }
  return std::min(p, 1.0);
}

PairedComparison paired_sign_test(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "paired_sign_test");
  PairedComparison out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) {
      ++out.wins;
    } else if (a[i] > b[i]) {
      ++out.losses;
    } else {
      ++out.ties;
    }
  }
  out.p_value = sign_test_p_value(out.wins, out.wins + out.losses);
  return out;
}

}  // namespace schedlab
