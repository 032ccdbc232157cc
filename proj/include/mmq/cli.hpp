#pragma once

#include "mmq/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmq {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitVerifyFail = 1;
inline constexpr int kExitInputError = 2;

[[nodiscard]] const std::vector<std::string>& command_names();

/// Command-line values that take precedence over the config file.
struct CliOverrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::int64_t> n;  // also replaces n_list
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

/// Executes one command. Results go to `out`, the resolved config and
/// diagnostics to `log`. Returns the process exit status.
int run_command(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& log);

/// Full entry point: `<tool> <command> --config <path> [--out <dir>] [--seed <u64>] [--reps <int>] [--n <int>]`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace mmq
