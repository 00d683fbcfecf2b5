#pragma once

#include <ostream>

namespace keyrep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point of the keyrep tool. Normal output goes to `out`, diagnostics
// to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace keyrep::cli
