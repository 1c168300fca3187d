#include "schedlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "json_util.hpp"
#include "schedlab/calculus.hpp"
#include "schedlab/errors.hpp"
#include "schedlab/io.hpp"

namespace schedlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> mean_of_optional(const std::vector<SeedOutcome>& outcomes,
                                       std::optional<double> SeedOutcome::*field) {
  double s = 0.0;
  for (const auto& o : outcomes) {
    if (!(o.*field)) return std::nullopt;
    s += *(o.*field);
  }
  return s / static_cast<double>(outcomes.size());
}

Vec unscale(const Vec& x, double b) { return scaled(x, 1.0 / b); }

double drift_or_residual(const Vec& x0, const Vec& edited, const Vec& direction) {
  if (dot(direction, direction) == 0.0) return std::sqrt(squared_distance(x0, edited));
  return edit_drift(x0, edited, direction);
}

std::vector<double> local_inversion_errors(const Trajectory& inversion, const ModelPair& pair,
                                           const ScheduleTable& table, const SamplerConfig& cfg,
                                           const MetricSettings& metrics) {
  const std::size_t n = inversion.records.size() - 1;
  std::vector<double> out(n, kNaN);
  if (cfg.variance_normalize) return out;
  OdeOptions options;
  options.n_fine = metrics.n_fine_per_step;
  options.allow_singular_start = pair.uncond.smooth_at_data() && pair.cond.smooth_at_data();
  for (std::size_t i = 1; i <= n; ++i) {
    const auto& prev = inversion.records[i - 1];
    const auto& cur = inversion.records[i];
    try {
      const OdeResult ode = ode_reference_solve(pair, cfg.w_invert, prev.x, table, prev.t, cur.t, options);
      if (ode.start_clamped || ode.end_clamped) continue;
      out[i - 1] = std::sqrt(squared_distance(ode.x, cur.x));
    } catch (const DomainError&) {
    }
  }
  return out;
}

std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt_value(double v) { return fmt::format("{}", v); }

struct Scenario {
  std::string id;
  ScheduleSpec schedule;
  SamplerConfig sampler;
};

std::vector<Scenario> expand_axis(const ScenarioConfig& c, SweepAxis axis) {
  std::vector<Scenario> out;
  const auto add = [&](std::string suffix, ScheduleSpec spec, SamplerConfig sampler) {
    spec.validate();
    out.push_back({c.name + "/" + suffix, spec, sampler});
  };
  const auto require = [&](bool non_empty, std::string_view what) {
    if (!non_empty) throw ValidationError("sweep axis '" + std::string(what) + "' has no values");
  };
  const auto require_logistic = [&] {
    if (c.schedule.family != Family::Logistic) throw ValidationError("k and t0 sweeps need a logistic schedule");
  };
  switch (axis) {
    case SweepAxis::NSteps:
      require(!c.sweep.n_steps.empty(), "n_steps");
      for (int n : c.sweep.n_steps) {
        SamplerConfig s = c.sampler;
        s.n_steps = n;
        add("n_steps=" + std::to_string(n), c.schedule, s);
      }
      break;
    case SweepAxis::K:
      require(!c.sweep.k.empty(), "k");
      require_logistic();
      for (double k : c.sweep.k) {
        ScheduleSpec spec = c.schedule;
        spec.k = k;
        add("k=" + fmt_value(k), spec, c.sampler);
      }
      break;
    case SweepAxis::T0:
      require(!c.sweep.t0.empty(), "t0");
      require_logistic();
      for (double t0 : c.sweep.t0) {
        ScheduleSpec spec = c.schedule;
        spec.t0 = t0;
        add("t0=" + fmt_value(t0), spec, c.sampler);
      }
      break;
    case SweepAxis::InputScale:
      require(!c.sweep.input_scale_b.empty(), "input_scale_b");
      for (double b : c.sweep.input_scale_b) {
        SamplerConfig s = c.sampler;
        s.input_scale_b = b;
        add("b=" + fmt_value(b), c.schedule, s);
      }
      break;
    case SweepAxis::Guidance:
      require(!c.sweep.w_invert.empty() && !c.sweep.w_reverse.empty(), "guidance");
      for (double wi : c.sweep.w_invert) {
        for (double wr : c.sweep.w_reverse) {
          SamplerConfig s = c.sampler;
          s.w_invert = wi;
          s.w_reverse = wr;
          add("w_invert=" + fmt_value(wi) + ",w_reverse=" + fmt_value(wr), c.schedule, s);
        }
      }
      break;
    case SweepAxis::Family:
      require(!c.sweep.families.empty(), "family");
      for (Family f : c.sweep.families) {
        add("family=" + std::string(to_string(f)), ScheduleSpec::defaults(f, c.schedule.T), c.sampler);
      }
      break;
  }
  std::set<std::string> ids;
  for (const auto& s : out) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate scenario '" + s.id + "' in batch");
  }
  return out;
}

std::vector<std::string> summary_header() {
  return {"scenario", "family",        "T",          "n_steps",          "k",           "t0",
          "input_scale_b", "w_invert", "w_reverse", "roundtrip_mse", "roundtrip_psnr", "edit_drift",
          "pinned_edit_drift", "pinned_roundtrip_mse", "terminal_logsnr"};
}

std::vector<double> summary_row(std::size_t index, const Scenario& s, const RunReport& r) {
  return {static_cast<double>(index),
          static_cast<double>(static_cast<int>(s.schedule.family)),
          static_cast<double>(s.schedule.T),
          static_cast<double>(s.sampler.n_steps),
          s.schedule.k,
          s.schedule.t0,
          s.sampler.input_scale_b,
          s.sampler.w_invert,
          s.sampler.w_reverse,
          r.roundtrip_mse,
          r.roundtrip_psnr,
          r.edit_drift.value_or(kNaN),
          r.pinned_edit_drift.value_or(kNaN),
          r.pinned_roundtrip_mse.value_or(kNaN),
          r.terminal_logsnr};
}

struct OutputSet {
  std::filesystem::path dir;
  std::string name;
  std::filesystem::path file(std::string_view kind, std::string_view ext) const {
    return dir / fmt::format("{}_{}.{}", name, kind, ext);
  }
};

void write_metadata(const std::filesystem::path& path, std::string_view command, const ScenarioConfig& config,
                    const CommandOptions& options, std::chrono::system_clock::time_point started,
                    double wall_seconds, const std::vector<RunReport>& reports,
                    const std::vector<std::filesystem::path>& files) {
  detail::OrderedJson j;
  j["command"] = std::string(command);
  j["config_name"] = config.name;
  j["config_path"] = options.config_path.generic_string();
  j["started_at_utc"] = utc_timestamp(started);
  j["finished_at_utc"] = utc_timestamp(std::chrono::system_clock::now());
  j["wall_time_seconds"] = wall_seconds;
  j["threads"] = options.threads;
  j["schedlab_version"] = SCHEDLAB_VERSION;
  j["build_type"] = SCHEDLAB_BUILD_TYPE;
  j["compiler"] = fmt::format("{} {}.{}.{}",
#if defined(__clang__)
                              "clang", __clang_major__, __clang_minor__, __clang_patchlevel__
#elif defined(__GNUC__)
                              "gcc", __GNUC__, __GNUC_MINOR__, __GNUC_PATCHLEVEL__
#else
                              "unknown", 0, 0, 0
#endif
  );
  detail::OrderedJson scen = detail::OrderedJson::array();
  for (const auto& r : reports) {
    scen.push_back({{"scenario_id", r.scenario_id}, {"wall_time_seconds", r.wall_time_seconds}});
  }
  j["scenarios"] = std::move(scen);
  detail::OrderedJson names = detail::OrderedJson::array();
  for (const auto& f : files) names.push_back(f.filename().generic_string());
  j["files"] = std::move(names);
  j["config"] = detail::OrderedJson::parse(config_to_json(config));
  atomic_write(path, j.dump(2) + "\n");
}

CommandResult run_sampler_batch(std::string_view command, const ScenarioConfig& config,
                                const std::vector<Scenario>& scenarios, const ModelSet& models,
                                const OutputSet& out, const CommandOptions& options) {
  CommandResult result;
  std::vector<Evaluation> evaluations;
  evaluations.reserve(scenarios.size());
  for (const auto& s : scenarios) {
    EvaluationRequest req{s.id, config.name, s.schedule, s.sampler, config.metrics};
    evaluations.push_back(evaluate(req, models, config.seeds, options.threads));
  }

  CsvTable summary{summary_header(), {}};
  CsvTable per_seed{{"scenario", "seed_index", "roundtrip_mse", "edit_drift", "pinned_edit_drift",
                     "pinned_roundtrip_mse"},
                    {}};
  CsvTable local{{"scenario", "step", "t", "local_error"}, {}};
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Evaluation& ev = evaluations[i];
    summary.rows.push_back(summary_row(i, scenarios[i], ev.report));
    for (std::size_t k = 0; k < ev.outcomes.size(); ++k) {
      const auto& o = ev.outcomes[k];
      per_seed.rows.push_back({static_cast<double>(i), static_cast<double>(k), o.roundtrip_mse,
                               o.edit_drift.value_or(kNaN), o.pinned_edit_drift.value_or(kNaN),
                               o.pinned_roundtrip_mse.value_or(kNaN)});
    }
    for (std::size_t step = 0; step < ev.report.local_errors.size(); ++step) {
      local.rows.push_back({static_cast<double>(i), static_cast<double>(step + 1),
                            ev.first_inversion.records[step + 1].t, ev.report.local_errors[step]});
    }
    result.reports.push_back(ev.report);
  }

  const auto emit = [&](const std::filesystem::path& p, const std::string& content) {
    atomic_write(p, content);
    result.data_files.push_back(p);
  };
  emit(out.file("summary", "csv"), write_csv(summary));
  emit(out.file("seeds", "csv"), write_csv(per_seed));
  emit(out.file("local_errors", "csv"), write_csv(local));
  emit(out.file("inversion", "csv"), trajectory_csv(evaluations.front().first_inversion));
  emit(out.file("reconstruction", "csv"), trajectory_csv(evaluations.front().first_reconstruction));
  if (config.metrics.dump_states) {
    emit(out.file("inversion", "bin"), trajectory_binary(evaluations.front().first_inversion));
    emit(out.file("reconstruction", "bin"), trajectory_binary(evaluations.front().first_reconstruction));
  }
  if (command == "roundtrip" && scenarios.size() >= 3) {
    std::set<int> distinct;
    std::vector<std::pair<int, double>> points;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      distinct.insert(scenarios[i].sampler.n_steps);
      points.emplace_back(scenarios[i].sampler.n_steps, evaluations[i].report.roundtrip_mse);
    }
    const bool fittable = distinct.size() >= 2 && std::all_of(points.begin(), points.end(), [](const auto& p) {
                            return p.second > 0.0 && std::isfinite(p.second);
                          });
    if (fittable) {
      const ConvergenceFit fit = convergence_order_fit(points);
      emit(out.file("convergence", "csv"), write_csv(CsvTable{{"order", "r_squared"}, {{fit.order, fit.r_squared}}}));
    }
  }
  result.report_file = out.file("report", "json");
  atomic_write(result.report_file, reports_to_json(result.reports));
  return result;
}

}  // namespace

Vec ModelSet::edit_direction() const {
  if (!target) return Vec(source.dim(), 0.0);
  const Vec ms = source.mean();
  const Vec mt = target->mean();
  return axpby(1.0, mt, -1.0, ms);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view scope) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : scope) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return splitmix64(seed ^ splitmix64(h));
}

double default_psnr_max_val(const AnalyticModel& model) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : model.components()) {
    const double spread = 3.0 * std::sqrt(c.variance);
    for (double m : c.mean) {
      lo = std::min(lo, m - spread);
      hi = std::max(hi, m + spread);
    }
  }
  const double range = hi - lo;
  return range > 0.0 && std::isfinite(range) ? range : 1.0;
}

Evaluation evaluate(const EvaluationRequest& request, const ModelSet& models, std::span<const std::uint64_t> seeds,
                    int threads) {
  if (seeds.empty()) throw ValidationError("evaluation needs at least one seed");
  const auto started = std::chrono::steady_clock::now();
  request.schedule.validate();
  const SamplerConfig& cfg = request.sampler;
  const ScheduleTable table = build_table(request.schedule, timestep_grid(request.schedule.T, cfg));
  const ModelPair src_pair = models.source_pair();
  const ModelPair tgt_pair = models.target_pair();
  const Vec direction = models.edit_direction();
  const double b = cfg.input_scale_b;

  std::vector<SeedOutcome> outcomes(seeds.size());
  Trajectory first_inversion, first_reconstruction;

  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    const std::uint64_t stream = derive_seed(seeds[i], request.rng_scope);
    const Vec x0 = sample_x0(models.source, stream, 1).front();
    Trajectory inv = run_inversion(src_pair, x0, table, cfg, stream);
    Trajectory rec = run_reverse(src_pair, inv.final_state(), table, cfg, splitmix64(stream));

    SeedOutcome o;
    o.seed = seeds[i];
    o.roundtrip_mse = mse(x0, unscale(rec.final_state(), b));
    if (models.target) {
      const Trajectory edited = run_reverse(tgt_pair, inv.final_state(), table, cfg, splitmix64(stream));
      o.edit_drift = drift_or_residual(x0, unscale(edited.final_state(), b), direction);
    }
    if (request.metrics.pinned) {
      const PinnedReconstruction pinned = pinned_reconstruction(inv, src_pair, tgt_pair, cfg);
      o.pinned_roundtrip_mse = mse(x0, unscale(pinned.source.final_state(), b));
      if (models.target) {
        o.pinned_edit_drift = drift_or_residual(x0, unscale(pinned.target.final_state(), b), direction);
      }
    }
    if (request.metrics.local_errors) {
      o.local_errors = local_inversion_errors(inv, src_pair, table, cfg, request.metrics);
    } else {
      o.local_errors.assign(static_cast<std::size_t>(cfg.n_steps), kNaN);
    }
    outcomes[i] = std::move(o);
    if (i == 0) {
      first_inversion = std::move(inv);
      first_reconstruction = std::move(rec);
    }
  });

  Evaluation ev;
  RunReport& r = ev.report;
  r.scenario_id = request.scenario_id;
  r.schedule_family = std::string(to_string(request.schedule.family));
  r.n_steps = cfg.n_steps;
  r.seed_count = seeds.size();
  r.local_errors.assign(static_cast<std::size_t>(cfg.n_steps), 0.0);
  std::vector<double> mses;
  for (const auto& o : outcomes) {
    mses.push_back(o.roundtrip_mse);
    for (std::size_t s = 0; s < r.local_errors.size(); ++s) r.local_errors[s] += o.local_errors[s];
  }
  for (double& e : r.local_errors) e /= static_cast<double>(outcomes.size());
  r.roundtrip_mse = mean_of(mses);
  r.psnr_max_val = request.metrics.psnr_max_val.value_or(default_psnr_max_val(models.source));
  r.roundtrip_psnr = psnr_from_mse(r.roundtrip_mse, r.psnr_max_val);
  r.edit_drift = mean_of_optional(outcomes, &SeedOutcome::edit_drift);
  r.pinned_edit_drift = mean_of_optional(outcomes, &SeedOutcome::pinned_edit_drift);
  r.pinned_roundtrip_mse = mean_of_optional(outcomes, &SeedOutcome::pinned_roundtrip_mse);
  r.terminal_logsnr = std::log(terminal_snr(request.schedule));
  try {
    r.linearity_r2 = logsnr_linearity_fit(build_table(request.schedule, integer_grid(request.schedule.T))).r_squared;
  } catch (const ValidationError&) {
    r.linearity_r2.reset();
  }
  r.parameters = {{"T", request.schedule.T},
                  {"eta", cfg.eta},
                  {"input_scale_b", cfg.input_scale_b},
                  {"step_offset", cfg.step_offset},
                  {"variance_normalize", cfg.variance_normalize ? 1.0 : 0.0},
                  {"w_invert", cfg.w_invert},
                  {"w_reverse", cfg.w_reverse}};
  if (request.schedule.family == Family::Logistic) {
    r.parameters["k"] = request.schedule.k;
    r.parameters["t0"] = request.schedule.t0;
  }
  if (request.schedule.family == Family::Cosine) r.parameters["s"] = request.schedule.s;
  ev.outcomes = std::move(outcomes);
  ev.first_inversion = std::move(first_inversion);
  ev.first_reconstruction = std::move(first_reconstruction);
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return ev;
}

int threads_from_env() {
  const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const char* env = std::getenv("SCHEDLAB_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ValidationError("SCHEDLAB_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(v, hw));
}

CommandResult run_command(std::string_view command, const CommandOptions& options) {
  return run_command(command, load_config(options.config_path), options);
}

CommandResult run_command(std::string_view command, ScenarioConfig config, const CommandOptions& options) {
  const auto started_wall = std::chrono::system_clock::now();
  const auto started = std::chrono::steady_clock::now();
  if (options.out_dir) config.output_dir = *options.out_dir;
  if (options.seed) config.seeds = {*options.seed};
  if (options.grid && *options.grid < 1) throw ValidationError("--grid must be >= 1");
  const OutputSet out{config.output_dir, config.name};

  CommandResult result;
  if (command == "schedule-dump") {
    const std::optional<int> grid = options.grid ? options.grid : config.grid;
    const std::vector<double> ts = grid ? uniform_grid(config.schedule.T, *grid) : integer_grid(config.schedule.T);
    const std::filesystem::path p = out.file("schedule", "csv");
    atomic_write(p, schedule_csv(build_table(config.schedule, ts)));
    result.data_files.push_back(p);
  } else if (command == "singularity-scan") {
    const int n = options.grid.value_or(config.scan.n);
    const double t_max = config.scan.t_max.value_or(static_cast<double>(config.schedule.T));
    const std::filesystem::path p = out.file("scan", "csv");
    atomic_write(p, scan_csv(singularity_scan(config.schedule, config.scan.t_min, t_max, n)));
    result.data_files.push_back(p);
  } else if (command == "roundtrip" || command == "edit-sim" || command == "sweep") {
    if (!config.models) throw ValidationError(std::string(command) + " needs a 'models' section");
    if (options.grid) config.sampler.n_steps = *options.grid;
    ModelSet models = *config.models;
    std::vector<Scenario> scenarios;
    if (command == "roundtrip") {
      models.target.reset();
      if (!config.sweep.n_steps.empty() && !options.grid) {
        scenarios = expand_axis(config, SweepAxis::NSteps);
      }
    } else if (command == "edit-sim") {
      if (!models.target) throw ValidationError("edit-sim needs models.target");
      if (!config.sweep.w_invert.empty() || !config.sweep.w_reverse.empty()) {
        scenarios = expand_axis(config, SweepAxis::Guidance);
      }
    } else {
      if (!config.sweep.axis) throw ValidationError("sweep needs sweep.axis or a preset");
      scenarios = expand_axis(config, *config.sweep.axis);
    }
    if (scenarios.empty()) {
      config.schedule.validate();
      scenarios.push_back({config.name, config.schedule, config.sampler});
    }
    result = run_sampler_batch(command, config, scenarios, models, out, options);
  } else {
    throw ValidationError("unknown command '" + std::string(command) + "'");
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.metadata_file = out.file("metadata", "json");
  write_metadata(result.metadata_file, command, config, options, started_wall, wall, result.reports,
                 result.data_files);
  return result;
}

}  // namespace schedlab
