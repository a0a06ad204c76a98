#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace trackmpc::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kRuntimeError = 2,
};

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path out;  // overrides output_dir when non-empty
  std::optional<std::uint64_t> seed;
  bool closed_form = false;
  std::optional<std::size_t> pop_size;
  std::optional<std::size_t> generations;
  std::optional<std::size_t> dump_context_step;
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bank_gen(const std::filesystem::path& spec, const std::filesystem::path& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_step_response(const std::filesystem::path& bank, long long entry, long long n, std::ostream& out,
                      std::ostream& err);
int cmd_optimize_once(const std::filesystem::path& config, const std::filesystem::path& context, std::ostream& out,
                      std::ostream& err);
int cmd_study(const std::filesystem::path& config, const std::filesystem::path& grid,
              const std::filesystem::path& out_dir, std::size_t workers, std::ostream& out, std::ostream& err);
int cmd_compare(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& out,
                std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trackmpc::cli
