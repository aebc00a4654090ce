#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dualq::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 bad flags or configuration.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `dualq` tool. args excludes the program name. Machine-readable
/// JSON goes to `out` (or to files), summaries and structured errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dualq::cli
