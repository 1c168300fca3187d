#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "schedlab/calculus.hpp"
#include "schedlab/metrics.hpp"
#include "schedlab/models.hpp"
#include "schedlab/sampler.hpp"
#include "schedlab/schedule.hpp"

namespace schedlab {

// Writes to a sibling temporary file and renames it over `path`. Creates parent
// directories. Throws IoError.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double value);
double parse_double(std::string_view text);

inline constexpr std::string_view kScheduleCsvHeader = "t,alpha_bar,beta,snr,logsnr";
inline constexpr std::string_view kScanCsvHeader = "t,coeff_x0,coeff_eps,d_alpha_bar_dt,finite";
inline constexpr std::string_view kTrajectoryCsvHeader = "step,t,alpha_bar,x_norm,eps_norm";

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
  std::vector<double> column_values(std::string_view name) const;
};

// Numeric CSV with one header line. Throws ValidationError on malformed input.
CsvTable parse_csv(std::string_view text);
std::string write_csv(const CsvTable& table);

std::string schedule_csv(const ScheduleTable& table);
std::string scan_csv(const std::vector<DerivativeCoefficients>& scan);
std::string trajectory_csv(const Trajectory& trajectory);

inline constexpr std::string_view kTrajectoryMagic = "SCHDTRAJ";

struct TrajectoryDump {
  std::uint64_t dim = 0;
  std::uint64_t length = 0;
  std::vector<double> values;  // row-major, length rows of dim values

  bool operator==(const TrajectoryDump&) const = default;
};

// Magic, u64 dim, u64 length, then little-endian f64 states row-major.
std::string trajectory_binary(const Trajectory& trajectory);
TrajectoryDump parse_trajectory_binary(std::string_view bytes);

std::string model_to_json(const AnalyticModel& model);
AnalyticModel model_from_json(std::string_view text);

// Array of report objects with stable field order.
std::string reports_to_json(const std::vector<RunReport>& reports);
std::vector<RunReport> reports_from_json(std::string_view text);

}  // namespace schedlab
