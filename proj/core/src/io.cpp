#include "schedlab/io.hpp"

#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <unistd.h>

#include "json_util.hpp"
#include "schedlab/errors.hpp"

namespace schedlab {

using detail::Json;
using detail::OrderedJson;

namespace {

std::atomic<std::uint64_t> temp_counter{0};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t read_u64_le(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

OrderedJson optional_json(const std::optional<double>& v) {
  return v ? detail::encode_double(*v) : OrderedJson(nullptr);
}

std::optional<double> optional_from(const Json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return detail::decode_double(*it, key);
}

}  // namespace

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp-{}-{}", static_cast<long>(::getpid()), temp_counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return buffer.str();
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

double parse_double(std::string_view text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError("CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::column_values(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (!have_header) {
      for (auto f : fields) table.header.emplace_back(f);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ValidationError("CSV row " + std::to_string(table.rows.size() + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ValidationError("CSV is empty");
  return table;
}

std::string write_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw ValidationError("CSV row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string schedule_csv(const ScheduleTable& table) {
  CsvTable csv{{"t", "alpha_bar", "beta", "snr", "logsnr"}, {}};
  csv.rows.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    csv.rows.push_back({table.timesteps[i], table.alpha_bar[i], table.beta[i], table.snr[i], table.logsnr[i]});
  }
  return write_csv(csv);
}

std::string scan_csv(const std::vector<DerivativeCoefficients>& scan) {
  CsvTable csv{{"t", "coeff_x0", "coeff_eps", "d_alpha_bar_dt", "finite"}, {}};
  for (const auto& c : scan) {
    csv.rows.push_back({c.t, c.coeff_x0, c.coeff_eps, c.d_alpha_bar_dt, c.finite ? 1.0 : 0.0});
  }
  return write_csv(csv);
}

std::string trajectory_csv(const Trajectory& trajectory) {
  CsvTable csv{{"step", "t", "alpha_bar", "x_norm", "eps_norm"}, {}};
  for (std::size_t i = 0; i < trajectory.records.size(); ++i) {
    const auto& r = trajectory.records[i];
    csv.rows.push_back({static_cast<double>(i), r.t, r.alpha_bar, norm(r.x), norm(r.eps_hat)});
  }
  return write_csv(csv);
}

std::string trajectory_binary(const Trajectory& trajectory) {
  const std::uint64_t dim = trajectory.dim();
  const std::uint64_t length = trajectory.records.size();
  std::string out(kTrajectoryMagic);
  append_u64_le(out, dim);
  append_u64_le(out, length);
  out.reserve(out.size() + dim * length * 8);
  for (const auto& r : trajectory.records) {
    if (r.x.size() != dim) throw ValidationError("trajectory states differ in dimension");
    for (double v : r.x) append_u64_le(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

TrajectoryDump parse_trajectory_binary(std::string_view bytes) {
  constexpr std::size_t header = 8 + 16;
  if (bytes.size() < header || bytes.substr(0, 8) != kTrajectoryMagic) {
    throw ValidationError("trajectory dump: bad magic");
  }
  TrajectoryDump dump;
  dump.dim = read_u64_le(bytes, 8);
  dump.length = read_u64_le(bytes, 16);
  if (dump.dim != 0 && dump.length > (bytes.size() - header) / 8 / dump.dim) {
    throw ValidationError("trajectory dump: truncated payload");
  }
  const std::uint64_t count = dump.dim * dump.length;
  if (bytes.size() != header + count * 8) throw ValidationError("trajectory dump: payload size mismatch");
  dump.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    dump.values[i] = std::bit_cast<double>(read_u64_le(bytes, header + 8 * i));
  }
  return dump;
}

namespace detail {

OrderedJson model_json(const AnalyticModel& model) {
  OrderedJson j;
  j["kind"] = std::string(to_string(model.kind()));
  j["dim"] = model.dim();
  OrderedJson comps = OrderedJson::array();
  for (const auto& c : model.components()) {
    OrderedJson cj;
    cj["weight"] = c.weight;
    cj["mean"] = c.mean;
    cj["variance"] = c.variance;
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  j["condition_label"] = model.condition_label() ? OrderedJson(*model.condition_label()) : OrderedJson(nullptr);
  return j;
}

AnalyticModel model_from(const Json& j, std::string_view where) {
  reject_unknown(j, {"kind", "dim", "components", "condition_label"}, where);
  const ModelKind kind = parse_model_kind(get_string(j, "kind", where));
  const auto comps_it = j.find("components");
  if (comps_it == j.end() || !comps_it->is_array()) {
    throw ValidationError(std::string(where) + ": 'components' must be an array");
  }
  std::vector<Component> comps;
  const std::string comp_where = std::string(where) + ".components[]";
  for (const auto& cj : *comps_it) {
    reject_unknown(cj, {"weight", "mean", "variance"}, comp_where);
    Component c;
    c.weight = cj.contains("weight") ? get_number(cj, "weight", comp_where) : 1.0;
    const auto mean_it = cj.find("mean");
    if (mean_it == cj.end() || !mean_it->is_array()) throw ValidationError(comp_where + ": 'mean' must be an array");
    for (const auto& v : *mean_it) {
      if (!v.is_number()) throw ValidationError(comp_where + ": 'mean' entries must be numbers");
      c.mean.push_back(v.get<double>());
    }
    c.variance = get_number(cj, "variance", comp_where);
    comps.push_back(std::move(c));
  }
  std::optional<std::string> label;
  if (const auto it = j.find("condition_label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError(std::string(where) + ": 'condition_label' must be a string");
    label = it->get<std::string>();
  }
  AnalyticModel model(kind, std::move(comps), std::move(label));
  if (j.contains("dim") && static_cast<std::size_t>(get_int(j, "dim", where)) != model.dim()) {
    throw ValidationError(std::string(where) + ": 'dim' disagrees with component means");
  }
  return model;
}

}  // namespace detail

std::string model_to_json(const AnalyticModel& model) { return detail::model_json(model).dump(2) + "\n"; }

AnalyticModel model_from_json(std::string_view text) {
  return detail::model_from(detail::parse_json(text, "model"), "model");
}

std::string reports_to_json(const std::vector<RunReport>& reports) {
  OrderedJson arr = OrderedJson::array();
  for (const auto& r : reports) {
    OrderedJson j;
    j["scenario_id"] = r.scenario_id;
    j["schedule_family"] = r.schedule_family;
    j["n_steps"] = r.n_steps;
    OrderedJson errs = OrderedJson::array();
    for (double e : r.local_errors) errs.push_back(detail::encode_double(e));
    j["local_errors"] = std::move(errs);
    j["roundtrip_mse"] = detail::encode_double(r.roundtrip_mse);
    j["roundtrip_psnr"] = detail::encode_double(r.roundtrip_psnr);
    j["psnr_max_val"] = detail::encode_double(r.psnr_max_val);
    j["edit_drift"] = optional_json(r.edit_drift);
    j["pinned_edit_drift"] = optional_json(r.pinned_edit_drift);
    j["pinned_roundtrip_mse"] = optional_json(r.pinned_roundtrip_mse);
    j["terminal_logsnr"] = detail::encode_double(r.terminal_logsnr);
    j["linearity_r2"] = optional_json(r.linearity_r2);
    j["seed_count"] = r.seed_count;
    OrderedJson params = OrderedJson::object();
    for (const auto& [k, v] : r.parameters) params[k] = detail::encode_double(v);
    j["parameters"] = std::move(params);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<RunReport> reports_from_json(std::string_view text) {
  const Json arr = detail::parse_json(text, "report");
  if (!arr.is_array()) throw ValidationError("report JSON must be an array");
  std::vector<RunReport> out;
  try {
    for (const auto& j : arr) {
      constexpr std::string_view where = "report";
      detail::reject_unknown(j, {"scenario_id", "schedule_family", "n_steps", "local_errors", "roundtrip_mse",
                                 "roundtrip_psnr", "psnr_max_val", "edit_drift", "pinned_edit_drift",
                                 "pinned_roundtrip_mse", "terminal_logsnr", "linearity_r2", "seed_count",
                                 "parameters"},
                             where);
      RunReport r;
      r.scenario_id = detail::get_string(j, "scenario_id", where);
      r.schedule_family = detail::get_string(j, "schedule_family", where);
      r.n_steps = detail::get_int(j, "n_steps", where);
      for (const auto& e : j.at("local_errors")) r.local_errors.push_back(detail::decode_double(e, "local_errors"));
      r.roundtrip_mse = detail::decode_double(j.at("roundtrip_mse"), "roundtrip_mse");
      r.roundtrip_psnr = detail::decode_double(j.at("roundtrip_psnr"), "roundtrip_psnr");
      r.psnr_max_val = detail::decode_double(j.at("psnr_max_val"), "psnr_max_val");
      r.edit_drift = optional_from(j, "edit_drift");
      r.pinned_edit_drift = optional_from(j, "pinned_edit_drift");
      r.pinned_roundtrip_mse = optional_from(j, "pinned_roundtrip_mse");
      r.terminal_logsnr = detail::decode_double(j.at("terminal_logsnr"), "terminal_logsnr");
      r.linearity_r2 = optional_from(j, "linearity_r2");
      r.seed_count = static_cast<std::size_t>(detail::get_int(j, "seed_count", where));
      for (const auto& item : j.at("parameters").items()) {
        r.parameters[item.key()] = detail::decode_double(item.value(), item.key());
      }
      out.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("report JSON: ") + e.what());
  }
  return out;
}

}  // namespace schedlab
