// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>

namespace ektf::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitTraining = 3,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Parses arguments, dispatches the subcommand and maps failures to exit
/// codes, printing the message to stderr.
int run_app(int argc, const char* const* argv);

}  // namespace ektf::cli
