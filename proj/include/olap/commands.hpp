#pragma once

// Subcommands of the olap executable. Each writes its artifacts plus a
// metadata.toml echo of the resolved configuration into the output directory.

#include <iosfwd>
#include <string>
#include <vector>

#include "olap/config.hpp"

namespace olap {

enum ExitCode : int { kExitOk = 0, kExitNumerical = 1, kExitConfig = 2 };

const std::vector<std::string>& command_names();

/// Runs a subcommand; exceptions are mapped to exit codes with a message on `err`.
int run_command(const std::string& name, const RunConfig& config, const std::string& out_dir, std::ostream& out,
                std::ostream& err);

/// "# olap <version>", command and timestamp comment lines, then to_toml(config).
void write_metadata(const std::string& path, const RunConfig& config, const std::string& command);

}  // namespace olap
