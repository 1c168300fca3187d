#include "schedlab/sampler.hpp"

#include <cmath>
#include <random>
#include <string>

#include "schedlab/errors.hpp"

namespace schedlab {
namespace {

Vec predict(const ModelPair& models, double w, std::span<const double> x, double alpha_bar,
            const SamplerConfig& config) {
  if (!config.variance_normalize) return guided_eps(models.uncond, models.cond, x, alpha_bar, w);
  const double b = config.input_scale_b;
  const double sigma0_sq = models.cond.data_variance();
  const double scale = 1.0 / std::sqrt(alpha_bar * b * b * sigma0_sq + 1.0 - alpha_bar);
  return guided_eps(models.uncond, models.cond, scaled(x, scale), alpha_bar, w);
}

void check_table_matches(const ScheduleTable& table, const SamplerConfig& config) {
  config.validate(table.spec.T);
  if (table.timesteps != timestep_grid(table.spec.T, config)) {
    throw ValidationError("schedule table grid does not match the sampler grid");
  }
}

}  // namespace

std::string_view to_string(Direction direction) {
  return direction == Direction::Inversion ? "inversion" : "reverse";
}

void SamplerConfig::validate(int T) const {
  if (n_steps < 1) throw ValidationError("n_steps must be >= 1");
  if (n_steps > T) throw ValidationError("n_steps must not exceed T");
  if (step_offset < 0) throw ValidationError("step_offset must be >= 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be >= 0");
  if (!(input_scale_b > 0.0) || !std::isfinite(input_scale_b)) {
    throw ValidationError("input_scale_b must be > 0");
  }
  if (!std::isfinite(w_invert) || !std::isfinite(w_reverse)) {
    throw ValidationError("guidance scales must be finite");
  }
  const double last = (n_steps - 1) * (static_cast<double>(T) / n_steps) + step_offset;
  if (last > T) {
    throw ValidationError("grid ends at t = " + std::to_string(last) + " beyond T = " + std::to_string(T));
  }
}

std::vector<double> timestep_grid(int T, const SamplerConfig& config) {
  config.validate(T);
  const double stride = static_cast<double>(T) / config.n_steps;
  std::vector<double> grid(static_cast<std::size_t>(config.n_steps));
  for (int i = 0; i < config.n_steps; ++i) grid[i] = i * stride + config.step_offset;
  return grid;
}

Vec forward_closed_form(std::span<const double> x0, std::span<const double> eps, double alpha_bar,
                        double b, bool normalize, double sigma0_sq) {
  require_same_dim(x0, eps, "forward_closed_form");
  if (!(b > 0.0)) throw ValidationError("forward_closed_form: input scale b must be > 0");
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
    throw DomainError("forward_closed_form: alpha_bar outside [0, 1]");
  }
  const double signal = std::sqrt(alpha_bar) * b;
  const double noise = std::sqrt(1.0 - alpha_bar);
  Vec x = axpby(signal, x0, noise, eps);
  if (normalize) {
    const double sd = std::sqrt(alpha_bar * b * b * sigma0_sq + 1.0 - alpha_bar);
    for (double& v : x) v /= sd;
  }
  return x;
}

double ddpm_posterior_std(double alpha_bar_t, double alpha_bar_prev) {
  return std::sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar_t)) *
         std::sqrt(1.0 - alpha_bar_t / alpha_bar_prev);
}

Vec ddim_reverse_step(std::span<const double> x_t, std::span<const double> eps_hat, double alpha_bar_t,
                      double alpha_bar_prev, double eta, std::span<const double> noise) {
  require_same_dim(x_t, eps_hat, "ddim_reverse_step");
  if (!(alpha_bar_t > 0.0 && alpha_bar_t <= 1.0 && alpha_bar_prev > 0.0 && alpha_bar_prev <= 1.0)) {
    throw DomainError("ddim_reverse_step: alpha_bar values must lie in (0, 1]");
  }
  if (alpha_bar_prev == alpha_bar_t) return Vec(x_t.begin(), x_t.end());

  double sigma = 0.0;
  if (eta > 0.0) {
    if (alpha_bar_t >= 1.0 || alpha_bar_t > alpha_bar_prev) {
      throw DomainError("ddim_reverse_step: stochastic step needs alpha_bar_t < alpha_bar_prev");
    }
    sigma = eta * ddpm_posterior_std(alpha_bar_t, alpha_bar_prev);
    require_same_dim(x_t, noise, "ddim_reverse_step noise");
  }
  const double dir_var = 1.0 - alpha_bar_prev - sigma * sigma;
  if (dir_var < 0.0) {
    throw DomainError("ddim_reverse_step: eta too large for this step (1 - ab_prev - sigma^2 < 0)");
  }
  const double sqrt_ab_t = std::sqrt(alpha_bar_t);
  const double sqrt_om_t = std::sqrt(1.0 - alpha_bar_t);
  const double sqrt_ab_prev = std::sqrt(alpha_bar_prev);
  const double dir = std::sqrt(dir_var);

  Vec out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double pred_x0 = (x_t[i] - sqrt_om_t * eps_hat[i]) / sqrt_ab_t;
    out[i] = sqrt_ab_prev * pred_x0 + dir * eps_hat[i];
    if (sigma > 0.0) out[i] += sigma * noise[i];
  }
  return out;
}

Vec ddim_invert_step(std::span<const double> x_prev, std::span<const double> eps_hat,
                     double alpha_bar_prev, double alpha_bar_t) {
  require_same_dim(x_prev, eps_hat, "ddim_invert_step");
  if (!(alpha_bar_t > 0.0 && alpha_bar_t <= 1.0 && alpha_bar_prev > 0.0 && alpha_bar_prev <= 1.0)) {
    throw DomainError("ddim_invert_step: alpha_bar values must lie in (0, 1]");
  }
  const double state_coeff = std::sqrt(alpha_bar_t / alpha_bar_prev);
  const double eps_coeff = std::sqrt(alpha_bar_t) * (std::sqrt(1.0 / alpha_bar_t - 1.0) -
                                                     std::sqrt(1.0 / alpha_bar_prev - 1.0));
  return axpby(state_coeff, x_prev, eps_coeff, eps_hat);
}

Trajectory run_inversion(const ModelPair& models, std::span<const double> x0, const ScheduleTable& table,
                         const SamplerConfig& config, std::uint64_t /*seed*/) {
  check_table_matches(table, config);
  if (x0.size() != models.dim()) throw ValidationError("run_inversion: x0 dimension mismatch");
  const Schedule schedule(table.spec);

  Trajectory traj;
  traj.direction = Direction::Inversion;
  traj.config = config;
  traj.records.reserve(table.size() + 1);
  traj.records.push_back({0.0, schedule.alpha_bar(0.0), scaled(x0, config.input_scale_b), Vec(x0.size(), 0.0)});

  for (std::size_t i = 0; i < table.size(); ++i) {
    const TrajectoryRecord& prev = traj.records.back();
    const double ab_prev = prev.alpha_bar;
    const double ab_t = table.alpha_bar[i];
    if (ab_prev == ab_t) {
      traj.records.push_back({table.timesteps[i], ab_t, prev.x, Vec(prev.x.size(), 0.0)});
      continue;
    }
    const double ab_pred = ab_prev < 1.0 ? ab_prev : ab_t;
    Vec eps = predict(models, config.w_invert, prev.x, ab_pred, config);
    Vec x = ddim_invert_step(prev.x, eps, ab_prev, ab_t);
    traj.records.push_back({table.timesteps[i], ab_t, std::move(x), std::move(eps)});
  }
  return traj;
}

Trajectory run_reverse(const ModelPair& models, std::span<const double> x_T, const ScheduleTable& table,
                       const SamplerConfig& config, std::uint64_t seed) {
  check_table_matches(table, config);
  if (x_T.size() != models.dim()) throw ValidationError("run_reverse: x_T dimension mismatch");
  const Schedule schedule(table.spec);
  const double ab_start = schedule.alpha_bar(0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Trajectory traj;
  traj.direction = Direction::Reverse;
  traj.config = config;
  traj.records.reserve(table.size() + 1);
  const std::size_t n = table.size();
  traj.records.push_back({table.timesteps[n - 1], table.alpha_bar[n - 1], Vec(x_T.begin(), x_T.end()),
                          Vec(x_T.size(), 0.0)});

  Vec noise(x_T.size(), 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const TrajectoryRecord& cur = traj.records.back();
    const double ab_t = table.alpha_bar[i];
    const double ab_prev = i > 0 ? table.alpha_bar[i - 1] : ab_start;
    const double t_prev = i > 0 ? table.timesteps[i - 1] : 0.0;
    if (ab_prev == ab_t) {
      traj.records.push_back({t_prev, ab_prev, cur.x, Vec(cur.x.size(), 0.0)});
      continue;
    }
    Vec eps = predict(models, config.w_reverse, cur.x, ab_t, config);
    if (config.eta > 0.0) {
      for (double& v : noise) v = normal(rng);
    }
    Vec x = ddim_reverse_step(cur.x, eps, ab_t, ab_prev, config.eta, noise);
    traj.records.push_back({t_prev, ab_prev, std::move(x), std::move(eps)});
  }
  return traj;
}

PinnedReconstruction pinned_reconstruction(const Trajectory& inversion, const ModelPair& source,
                                           const ModelPair& target, const SamplerConfig& config) {
  if (inversion.direction != Direction::Inversion) {
    throw ValidationError("pinned_reconstruction needs an inversion trajectory");
  }
  const std::size_t n_records = inversion.records.size();
  if (n_records < 2 || n_records != static_cast<std::size_t>(inversion.config.n_steps) + 1) {
    throw ValidationError("pinned_reconstruction: inversion trajectory is incomplete");
  }
  const std::size_t dim = inversion.dim();
  for (const auto& r : inversion.records) {
    if (r.x.size() != dim) throw ValidationError("pinned_reconstruction: stored states differ in dimension");
  }
  if (source.dim() != dim || target.dim() != dim) {
    throw ValidationError("pinned_reconstruction: model dimension mismatch");
  }

  PinnedReconstruction out;
  for (Trajectory* branch : {&out.source, &out.target}) {
    branch->direction = Direction::Reverse;
    branch->config = config;
    branch->records.reserve(n_records);
    const auto& top = inversion.records.back();
    branch->records.push_back({top.t, top.alpha_bar, top.x, Vec(dim, 0.0)});
  }

  const std::vector<double> no_noise;
  for (std::size_t i = n_records - 1; i > 0; --i) {
    const TrajectoryRecord& stored_prev = inversion.records[i - 1];
    const double ab_t = inversion.records[i].alpha_bar;
    const double ab_prev = stored_prev.alpha_bar;

    const Vec& src_x = out.source.records.back().x;
    const Vec& tgt_x = out.target.records.back().x;
    if (ab_prev == ab_t) {
      out.source.records.push_back({stored_prev.t, ab_prev, src_x, Vec(dim, 0.0)});
      out.target.records.push_back({stored_prev.t, ab_prev, tgt_x, Vec(dim, 0.0)});
      continue;
    }

    Vec src_eps = predict(source, config.w_reverse, src_x, ab_t, config);
    Vec src_step = ddim_reverse_step(src_x, src_eps, ab_t, ab_prev, 0.0, no_noise);
    Vec correction(dim);
    for (std::size_t k = 0; k < dim; ++k) correction[k] = stored_prev.x[k] - src_step[k];

    Vec tgt_eps = predict(target, config.w_reverse, tgt_x, ab_t, config);
    Vec tgt_step = ddim_reverse_step(tgt_x, tgt_eps, ab_t, ab_prev, 0.0, no_noise);

    for (std::size_t k = 0; k < dim; ++k) {
      src_step[k] += correction[k];
      tgt_step[k] += correction[k];
    }
    out.source.records.push_back({stored_prev.t, ab_prev, std::move(src_step), std::move(src_eps)});
    out.target.records.push_back({stored_prev.t, ab_prev, std::move(tgt_step), std::move(tgt_eps)});
  }
  return out;
}

}  // namespace schedlab
