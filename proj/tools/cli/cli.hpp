#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rkranks::cli {

/// Entry point for the `rkranks` tool. Machine-readable JSON goes to `out`,
/// human-readable summaries and diagnostics to `err`. Returns the exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rkranks::cli
