#pragma once

#include <iosfwd>
#include <string>

#include "perihom/config.hpp"

namespace perihom {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNoConvergence = 2;

/// Executes one subcommand (mesh, cell, micro, macro, verify), writing
/// artifacts into config.out_dir. Each artifact starts with a CONFIG line
/// carrying the configuration hash; verify refuses an output directory with
/// artifacts from a different configuration. Returns the process exit code.
int run_command(const std::string& subcommand, const RunConfig& config, std::ostream& log,
                bool gnuplot_script = false);

}  // namespace perihom
