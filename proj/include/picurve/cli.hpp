#pragma once

// `picurve` command-line front end. Exit codes: 0 success, 2 invalid input or
// usage, 3 convergence failure, 4 internal error.

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace picurve {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitInternal = 4;

inline constexpr std::string_view kThreadsEnv = "PICURVE_THREADS";

std::string_view version();

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace picurve
