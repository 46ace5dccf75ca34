// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_CLI_HPP
#define AFEM_CLI_HPP

#include <string>
#include <vector>

namespace afem::cli
{

/// Exit codes of the command-line driver.
enum ExitCode : int
{
  kSuccess = 0,
  kRuntimeError = 1,  // solver failure, unreadable input
  kUsageError = 2,    // invalid flags, config or paths
};

/// Runs the `afem` driver on the given arguments (without the program name). Subcommands:
///   run           adaptive loop, writes history.csv and optional mesh_<l>.txt snapshots
///   solver-study  PGMRES sweeps on the finest mesh of a snapshot hierarchy
///   rates         rate diagnostics of a history.csv, writes rates.csv
/// A `--config <file>` of key=value lines supplies defaults; explicit flags win.
int run_cli(const std::vector<std::string> &args);

}  // namespace afem::cli

#endif  // AFEM_CLI_HPP
