#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace matconc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;

/// Runs the matconc command line. Reports and per-step output go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matconc::cli
