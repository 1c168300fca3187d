#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schedlab/metrics.hpp"
#include "schedlab/models.hpp"
#include "schedlab/sampler.hpp"
#include "schedlab/schedule.hpp"

namespace schedlab {

inline constexpr int kConfigVersion = 1;

// Source model, optional edit target and the unconditional model that guidance
// extrapolates away from (defaults to the source).
struct ModelSet {
  AnalyticModel source;
  std::optional<AnalyticModel> target;
  std::optional<AnalyticModel> uncond;

  const AnalyticModel& unconditional() const { return uncond ? *uncond : source; }
  ModelPair source_pair() const { return {unconditional(), source}; }
  ModelPair target_pair() const { return {unconditional(), target ? *target : source}; }
  // mean(target) - mean(source); all zeros without a target.
  Vec edit_direction() const;
};

enum class SweepAxis { NSteps, K, T0, InputScale, Guidance, Family };
std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepSpec {
  std::optional<SweepAxis> axis;
  std::vector<int> n_steps;
  std::vector<double> k;
  std::vector<double> t0;
  std::vector<double> input_scale_b;
  std::vector<double> w_invert;
  std::vector<double> w_reverse;
  std::vector<Family> families;
};

struct ScanSettings {
  double t_min = 0.0;
  std::optional<double> t_max;  // defaults to T
  int n = 200;
};

struct MetricSettings {
  std::optional<double> psnr_max_val;
  bool local_errors = true;
  int n_fine_per_step = 20;
  bool pinned = true;
  bool dump_states = false;
};

struct ScenarioConfig {
  int version = kConfigVersion;
  std::string name;
  ScheduleSpec schedule;
  SamplerConfig sampler;
  std::optional<ModelSet> models;  // required by the sampler commands
  std::vector<std::uint64_t> seeds;
  SweepSpec sweep;
  ScanSettings scan;
  MetricSettings metrics;
  std::optional<int> grid;  // schedule-dump row count; the integer grid 0..T by default
  std::filesystem::path output_dir = "out";
};

// Strict JSON parsing: unknown fields, a missing or unsupported version and
// invalid values raise ValidationError.
ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ScenarioConfig& config);

// Fixed axis values: "k_table", "t0_presets", "input_scale", "guidance_grid",
// "n_convergence".
void apply_sweep_preset(SweepSpec& sweep, std::string_view preset, int T);

// Per-seed RNG streams derived from the seed and the scenario scope.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view scope);

// Largest coordinate range of the model mass within three standard deviations;
// 1 when that range is empty.
double default_psnr_max_val(const AnalyticModel& model);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double roundtrip_mse = 0.0;
  std::optional<double> edit_drift;
  std::optional<double> pinned_edit_drift;
  std::optional<double> pinned_roundtrip_mse;
  std::vector<double> local_errors;
};

struct Evaluation {
  RunReport report;
  std::vector<SeedOutcome> outcomes;  // in seed order
  Trajectory first_inversion;
  Trajectory first_reconstruction;
};

struct EvaluationRequest {
  std::string scenario_id;
  std::string rng_scope;  // shared across sweep points so they see the same x0 draws
  ScheduleSpec schedule;
  SamplerConfig sampler;
  MetricSettings metrics;
};

// Inversion then reconstruction for every seed, plus target and pinned branches
// when a target model exists. Seeds run on up to `threads` workers; results do
// not depend on the thread count.
Evaluation evaluate(const EvaluationRequest& request, const ModelSet& models,
                    std::span<const std::uint64_t> seeds, int threads);

// SCHEDLAB_THREADS when set and positive, else the hardware concurrency.
int threads_from_env();

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  int threads = 1;
};

struct CommandResult {
  std::vector<std::filesystem::path> data_files;
  std::filesystem::path report_file;
  std::filesystem::path metadata_file;
  std::vector<RunReport> reports;
};

inline constexpr std::string_view kCommands[] = {"schedule-dump", "singularity-scan", "roundtrip", "edit-sim",
                                                 "sweep"};

// Runs one command against an already parsed configuration.
CommandResult run_command(std::string_view command, ScenarioConfig config, const CommandOptions& options);
CommandResult run_command(std::string_view command, const CommandOptions& options);

}  // namespace schedlab
