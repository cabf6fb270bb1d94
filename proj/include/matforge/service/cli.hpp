#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace matforge::service {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitUsage = 2, kExitIo = 3, kExitValue = 4 };

// Runs `matforge <args...>` (args excludes the program name). Errors are a
// single line "error: <code>: <message>" on `err`, with code one of usage,
// io, value, internal.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace matforge::service
