#pragma once

#include <iosfwd>

namespace isoforge::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kDataError = 3;
inline constexpr int kNumericError = 4;

/// Entry point shared by the executable and the in-process tests. CSV goes
/// to `out` unless --out is given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace isoforge::cli
