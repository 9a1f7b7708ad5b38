#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace loadpct::cli {

/// Entry point for the `loadpct` tool. `args` excludes the program name.
/// Returns the process exit status.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace loadpct::cli
