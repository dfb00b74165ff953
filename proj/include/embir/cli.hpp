#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace embir::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

/// Entry point of the `embir` tool. `args` excludes the program name.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Sets the log level from EMBIR_LOG (error|warn|info|debug).
void configure_logging();

}  // namespace embir::cli
