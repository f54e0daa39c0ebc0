#pragma once

#include <iosfwd>
#include <string_view>

namespace migbench {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Runs the command line `argv[0] <command> ...`. Data goes to `out`, logs to
/// `err`. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace migbench
