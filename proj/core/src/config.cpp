#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "json_util.hpp"
#include "schedlab/harness.hpp"
#include "schedlab/io.hpp"

namespace schedlab {

using namespace detail;

namespace {

constexpr double kKTable[] = {0.008, 0.011, 0.015, 0.017, 0.029};
constexpr double kT0Fractions[] = {0.3, 0.4, 0.6, 0.8};
constexpr double kWReverseGrid[] = {3.0, 5.0, 7.5, 10.0, 15.0, 20.0, 25.0};
constexpr int kNConvergence[] = {25, 50, 100, 200, 400};

std::vector<double> number_list(const Json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_array()) throw ValidationError("field '" + std::string(key) + "' in " + std::string(where) + " must be an array");
  if (it->empty()) throw ValidationError("sweep axis '" + std::string(key) + "' must not be empty");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) throw ValidationError("entries of '" + std::string(key) + "' must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::uint64_t as_u64(const Json& v, std::string_view where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError(std::string(where) + " must be a non-negative integer");
}

ScheduleSpec parse_schedule(const Json& j) {
  constexpr std::string_view where = "schedule";
  reject_unknown(j, {"family", "T", "k", "t0", "s", "sigmoid", "orientation", "affine_terminal_alpha_bar"}, where);
  const Family family = parse_family(get_string(j, "family", where));
  const int T = j.contains("T") ? get_int(j, "T", where) : 1000;
  if (T < 2) throw ValidationError("schedule.T must be >= 2");
  ScheduleSpec spec = ScheduleSpec::defaults(family, T);
  if (j.contains("k")) spec.k = get_number(j, "k", where);
  if (j.contains("t0")) spec.t0 = get_number(j, "t0", where);
  if (j.contains("s")) spec.s = get_number(j, "s", where);
  if (const auto it = j.find("sigmoid"); it != j.end()) {
    reject_unknown(*it, {"start", "end", "tau"}, "schedule.sigmoid");
    if (it->contains("start")) spec.sigmoid.start = get_number(*it, "start", "schedule.sigmoid");
    if (it->contains("end")) spec.sigmoid.end = get_number(*it, "end", "schedule.sigmoid");
    if (it->contains("tau")) spec.sigmoid.tau = get_number(*it, "tau", "schedule.sigmoid");
  }
  if (j.contains("orientation")) spec.orientation = parse_orientation(get_string(j, "orientation", where));
  if (const auto it = j.find("affine_terminal_alpha_bar"); it != j.end() && !it->is_null()) {
    spec.affine_terminal_alpha_bar = get_number(j, "affine_terminal_alpha_bar", where);
  }
  spec.validate();
  return spec;
}

SamplerConfig parse_sampler(const Json& j) {
  constexpr std::string_view where = "sampler";
  reject_unknown(j, {"n_steps", "eta", "step_offset", "w_invert", "w_reverse", "input_scale_b", "variance_normalize"},
                 where);
  SamplerConfig c;
  if (j.contains("n_steps")) c.n_steps = get_int(j, "n_steps", where);
  if (j.contains("eta")) c.eta = get_number(j, "eta", where);
  if (j.contains("step_offset")) c.step_offset = get_int(j, "step_offset", where);
  if (j.contains("w_invert")) c.w_invert = get_number(j, "w_invert", where);
  if (j.contains("w_reverse")) c.w_reverse = get_number(j, "w_reverse", where);
  if (j.contains("input_scale_b")) c.input_scale_b = get_number(j, "input_scale_b", where);
  if (j.contains("variance_normalize")) c.variance_normalize = get_bool(j, "variance_normalize", where);
  return c;
}

ModelSet parse_models(const Json& j) {
  reject_unknown(j, {"source", "target", "uncond"}, "models");
  if (!j.contains("source")) throw ValidationError("models.source is required");
  ModelSet set{model_from(j.at("source"), "models.source"), std::nullopt, std::nullopt};
  if (const auto it = j.find("target"); it != j.end() && !it->is_null()) set.target = model_from(*it, "models.target");
  if (const auto it = j.find("uncond"); it != j.end() && !it->is_null()) set.uncond = model_from(*it, "models.uncond");
  const std::size_t dim = set.source.dim();
  if ((set.target && set.target->dim() != dim) || (set.uncond && set.uncond->dim() != dim)) {
    throw ValidationError("models must share one dimension");
  }
  return set;
}

std::vector<std::uint64_t> parse_seeds(const Json& j) {
  std::vector<std::uint64_t> seeds;
  if (j.is_array()) {
    for (const auto& v : j) seeds.push_back(as_u64(v, "seeds[]"));
  } else if (j.is_object()) {
    reject_unknown(j, {"start", "count"}, "seeds");
    if (!j.contains("start") || !j.contains("count")) throw ValidationError("seeds range needs 'start' and 'count'");
    const std::uint64_t start = as_u64(j.at("start"), "seeds.start");
    const int count = get_int(j, "count", "seeds");
    if (count < 1) throw ValidationError("seeds.count must be >= 1");
    for (int i = 0; i < count; ++i) seeds.push_back(start + static_cast<std::uint64_t>(i));
  } else {
    throw ValidationError("seeds must be an array or a {start, count} range");
  }
  if (seeds.empty()) throw ValidationError("seeds must not be empty");
  return seeds;
}

SweepSpec parse_sweep(const Json& j, int T) {
  constexpr std::string_view where = "sweep";
  reject_unknown(j, {"axis", "preset", "n_steps", "k", "t0", "input_scale_b", "w_invert", "w_reverse", "families"},
                 where);
  SweepSpec sweep;
  if (j.contains("axis")) sweep.axis = parse_sweep_axis(get_string(j, "axis", where));
  for (double v : number_list(j, "n_steps", where)) {
    if (v != std::floor(v) || v < 1) throw ValidationError("sweep.n_steps entries must be positive integers");
    sweep.n_steps.push_back(static_cast<int>(v));
  }
  sweep.k = number_list(j, "k", where);
  sweep.t0 = number_list(j, "t0", where);
  sweep.input_scale_b = number_list(j, "input_scale_b", where);
  sweep.w_invert = number_list(j, "w_invert", where);
  sweep.w_reverse = number_list(j, "w_reverse", where);
  if (const auto it = j.find("families"); it != j.end()) {
    if (!it->is_array() || it->empty()) throw ValidationError("sweep.families must be a non-empty array");
    for (const auto& v : *it) {
      if (!v.is_string()) throw ValidationError("sweep.families entries must be strings");
      sweep.families.push_back(parse_family(v.get<std::string>()));
    }
  }
  if (j.contains("preset")) apply_sweep_preset(sweep, get_string(j, "preset", where), T);
  return sweep;
}

ScanSettings parse_scan(const Json& j) {
  constexpr std::string_view where = "scan";
  reject_unknown(j, {"t_min", "t_max", "n"}, where);
  ScanSettings s;
  if (j.contains("t_min")) s.t_min = get_number(j, "t_min", where);
  if (j.contains("t_max")) s.t_max = get_number(j, "t_max", where);
  if (j.contains("n")) s.n = get_int(j, "n", where);
  return s;
}

MetricSettings parse_metrics(const Json& j) {
  constexpr std::string_view where = "metrics";
  reject_unknown(j, {"psnr_max_val", "local_errors", "n_fine_per_step", "pinned", "dump_states"}, where);
  MetricSettings m;
  if (const auto it = j.find("psnr_max_val"); it != j.end() && !it->is_null()) {
    m.psnr_max_val = get_number(j, "psnr_max_val", where);
    if (!(*m.psnr_max_val > 0.0)) throw ValidationError("metrics.psnr_max_val must be > 0");
  }
  if (j.contains("local_errors")) m.local_errors = get_bool(j, "local_errors", where);
  if (j.contains("n_fine_per_step")) m.n_fine_per_step = get_int(j, "n_fine_per_step", where);
  if (m.n_fine_per_step < 1) throw ValidationError("metrics.n_fine_per_step must be >= 1");
  if (j.contains("pinned")) m.pinned = get_bool(j, "pinned", where);
  if (j.contains("dump_states")) m.dump_states = get_bool(j, "dump_states", where);
  return m;
}

OrderedJson doubles(const std::vector<double>& v) {
  OrderedJson arr = OrderedJson::array();
  for (double x : v) arr.push_back(encode_double(x));
  return arr;
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::NSteps: return "n_steps";
    case SweepAxis::K: return "k";
    case SweepAxis::T0: return "t0";
    case SweepAxis::InputScale: return "input_scale_b";
    case SweepAxis::Guidance: return "guidance";
    case SweepAxis::Family: return "family";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::NSteps, SweepAxis::K, SweepAxis::T0, SweepAxis::InputScale, SweepAxis::Guidance,
                      SweepAxis::Family}) {
    if (to_string(a) == name) return a;
  }
  throw ValidationError("unknown sweep axis '" + std::string(name) + "'");
}

void apply_sweep_preset(SweepSpec& sweep, std::string_view preset, int T) {
  if (preset == "k_table") {
    sweep.k.assign(std::begin(kKTable), std::end(kKTable));
    if (!sweep.axis) sweep.axis = SweepAxis::K;
  } else if (preset == "t0_presets") {
    sweep.t0.clear();
    for (double f : kT0Fractions) sweep.t0.push_back(logistic_t0_preset(T, f));
    if (!sweep.axis) sweep.axis = SweepAxis::T0;
  } else if (preset == "input_scale") {
    sweep.input_scale_b.clear();
    for (int i = 0; i <= 18; ++i) sweep.input_scale_b.push_back((50 + 5 * i) / 100.0);
    if (!sweep.axis) sweep.axis = SweepAxis::InputScale;
  } else if (preset == "guidance_grid") {
    sweep.w_invert.clear();
    for (int w = 1; w <= 10; ++w) sweep.w_invert.push_back(w);
    sweep.w_reverse.assign(std::begin(kWReverseGrid), std::end(kWReverseGrid));
    if (!sweep.axis) sweep.axis = SweepAxis::Guidance;
  } else if (preset == "n_convergence") {
    sweep.n_steps.assign(std::begin(kNConvergence), std::end(kNConvergence));
    if (!sweep.axis) sweep.axis = SweepAxis::NSteps;
  } else {
    throw ValidationError("unknown sweep preset '" + std::string(preset) + "'");
  }
}

ScenarioConfig parse_config(std::string_view json_text) {
  const Json j = parse_json(json_text, "config");
  constexpr std::string_view where = "config";
  reject_unknown(j, {"version", "name", "schedule", "sampler", "models", "seeds", "sweep", "scan", "metrics", "grid",
                     "output_dir"},
                 where);
  ScenarioConfig c;
  try {
    if (!j.contains("version")) throw ValidationError("config needs a 'version' field");
    c.version = get_int(j, "version", where);
    if (c.version != kConfigVersion) {
      throw ValidationError("unsupported config version " + std::to_string(c.version) + " (expected " +
                            std::to_string(kConfigVersion) + ")");
    }
    c.name = get_string(j, "name", where);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
      throw ValidationError("config name must be non-empty and free of path separators");
    }
    if (!j.contains("schedule")) throw ValidationError("config needs a 'schedule' object");
    c.schedule = parse_schedule(j.at("schedule"));
    if (j.contains("sampler")) c.sampler = parse_sampler(j.at("sampler"));
    if (j.contains("models")) c.models = parse_models(j.at("models"));
    c.seeds = j.contains("seeds") ? parse_seeds(j.at("seeds")) : std::vector<std::uint64_t>{0};
    if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"), c.schedule.T);
    if (j.contains("scan")) c.scan = parse_scan(j.at("scan"));
    if (j.contains("metrics")) c.metrics = parse_metrics(j.at("metrics"));
    if (j.contains("grid")) {
      c.grid = get_int(j, "grid", where);
      if (*c.grid < 1) throw ValidationError("grid must be >= 1");
    }
    if (j.contains("output_dir")) c.output_dir = get_string(j, "output_dir", where);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string config_to_json(const ScenarioConfig& c) {
  OrderedJson j;
  j["version"] = c.version;
  j["name"] = c.name;
  OrderedJson s;
  s["family"] = std::string(to_string(c.schedule.family));
  s["T"] = c.schedule.T;
  s["k"] = c.schedule.k;
  s["t0"] = c.schedule.t0;
  s["s"] = c.schedule.s;
  s["sigmoid"] = {{"start", c.schedule.sigmoid.start}, {"end", c.schedule.sigmoid.end}, {"tau", c.schedule.sigmoid.tau}};
  s["orientation"] = std::string(to_string(c.schedule.orientation));
  s["affine_terminal_alpha_bar"] =
      c.schedule.affine_terminal_alpha_bar ? OrderedJson(*c.schedule.affine_terminal_alpha_bar) : OrderedJson(nullptr);
  j["schedule"] = std::move(s);
  j["sampler"] = {{"n_steps", c.sampler.n_steps},
                  {"eta", c.sampler.eta},
                  {"step_offset", c.sampler.step_offset},
                  {"w_invert", c.sampler.w_invert},
                  {"w_reverse", c.sampler.w_reverse},
                  {"input_scale_b", c.sampler.input_scale_b},
                  {"variance_normalize", c.sampler.variance_normalize}};
  if (c.models) {
    OrderedJson m;
    m["source"] = model_json(c.models->source);
    if (c.models->target) m["target"] = model_json(*c.models->target);
    if (c.models->uncond) m["uncond"] = model_json(*c.models->uncond);
    j["models"] = std::move(m);
  }
  j["seeds"] = c.seeds;
  OrderedJson sw = OrderedJson::object();
  if (c.sweep.axis) sw["axis"] = std::string(to_string(*c.sweep.axis));
  if (!c.sweep.n_steps.empty()) sw["n_steps"] = c.sweep.n_steps;
  if (!c.sweep.k.empty()) sw["k"] = doubles(c.sweep.k);
  if (!c.sweep.t0.empty()) sw["t0"] = doubles(c.sweep.t0);
  if (!c.sweep.input_scale_b.empty()) sw["input_scale_b"] = doubles(c.sweep.input_scale_b);
  if (!c.sweep.w_invert.empty()) sw["w_invert"] = doubles(c.sweep.w_invert);
  if (!c.sweep.w_reverse.empty()) sw["w_reverse"] = doubles(c.sweep.w_reverse);
  if (!c.sweep.families.empty()) {
    OrderedJson fams = OrderedJson::array();
    for (Family f : c.sweep.families) fams.push_back(std::string(to_string(f)));
    sw["families"] = std::move(fams);
  }
  j["sweep"] = std::move(sw);
  OrderedJson scan;
  scan["t_min"] = c.scan.t_min;
  if (c.scan.t_max) scan["t_max"] = *c.scan.t_max;
  scan["n"] = c.scan.n;
  j["scan"] = std::move(scan);
  OrderedJson met;
  if (c.metrics.psnr_max_val) met["psnr_max_val"] = *c.metrics.psnr_max_val;
  met["local_errors"] = c.metrics.local_errors;
  met["n_fine_per_step"] = c.metrics.n_fine_per_step;
  met["pinned"] = c.metrics.pinned;
  met["dump_states"] = c.metrics.dump_states;
  j["metrics"] = std::move(met);
  if (c.grid) j["grid"] = *c.grid;
  j["output_dir"] = c.output_dir.generic_string();
  return j.dump(2) + "\n";
}

}  // namespace schedlab
