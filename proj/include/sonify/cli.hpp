#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sonify::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// args[0] is the program name. Human summaries go to `out`, diagnostics to
// `err`; machine-readable reports go to the --out path.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sonify::cli
