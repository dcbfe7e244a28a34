#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace segagent {

enum ExitCode : int {
  kExitOk = 0,
  kExitHarnessError = 1,
  kExitChainFailed = 2,
};

/// Entry point of the seg-agent tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segagent
