#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace formulafind {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one `formulafind` subcommand. `args` excludes the program name.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace formulafind
