#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace galds {

// Flag-level overrides applied on top of the config file.
struct CliOverrides {
  std::optional<uint64_t> seed;
  std::optional<int32_t> workers;
};

// Runs one subcommand against a config file and returns the process exit
// code: 0 on success, otherwise the ErrorCode of the failure. The parsed
// config is echoed to stdout first (the reproducibility record), and every
// command ends with one machine-readable `galds-summary ...` line.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const CliOverrides& overrides = {});

}  // namespace galds
