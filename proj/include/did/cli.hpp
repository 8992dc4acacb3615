#pragma once

#include <iosfwd>

namespace did::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitEstimation = 3;

// Entry point of the `did` tool. JSON goes to `out` (or --output), warnings
// and errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace did::cli
