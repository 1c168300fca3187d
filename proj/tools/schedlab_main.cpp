#include <cstdint>
#include <exception>
#include <iostream>
#include <iterator>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "schedlab/errors.hpp"
#include "schedlab/harness.hpp"

namespace {

enum ExitCode : int { kOk = 0, kValidation = 2, kDomain = 3, kIo = 4 };

int run(int argc, char** argv) {
  CLI::App app{"schedlab: noise-schedule and DDIM inversion laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int grid = 0;

  const std::pair<std::string_view, std::string_view> commands[] = {
      {"schedule-dump", "write alpha_bar, beta, snr and logsnr over a timestep grid"},
      {"singularity-scan", "write the dx/dt coefficients near t = 0"},
      {"roundtrip", "invert and reconstruct under the source model"},
      {"edit-sim", "invert under the source model and reconstruct under the target"},
      {"sweep", "run the sampler across one sweep axis"},
  };
  static_assert(std::size(commands) == std::size(schedlab::kCommands));
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(name), std::string(description));
    sub->add_option("--config", config_path, "scenario config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "run a single seed (overrides the config)");
    sub->add_option("--grid", grid, "grid size: table rows, scan samples or sampler steps");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  schedlab::CommandOptions options;
  options.config_path = config_path;
  if (chosen->count("--out")) options.out_dir = out_dir;
  if (chosen->count("--seed")) options.seed = seed;
  if (chosen->count("--grid")) options.grid = grid;

  try {
    options.threads = schedlab::threads_from_env();
    const schedlab::CommandResult result = schedlab::run_command(chosen->get_name(), options);
    for (const auto& f : result.data_files) std::cout << f.string() << '\n';
    if (!result.report_file.empty()) std::cout << result.report_file.string() << '\n';
    std::cout << result.metadata_file.string() << '\n';
  } catch (const schedlab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const schedlab::DomainError& e) {
    std::cerr << "numeric domain error: " << e.what() << '\n';
    return kDomain;
  } catch (const schedlab::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
