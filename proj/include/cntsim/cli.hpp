#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cntsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation failure or runtime error
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name). Records go to
/// `out` (or the --out file), diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cntsim
