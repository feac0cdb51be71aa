#pragma once

// Command-line entry point: subcommand dispatch, CSV outputs and the run
// manifest.

#include <string>
#include <vector>

namespace ptip {

inline constexpr int kSchemaVersion = 1;

/// Hex SHA-256 digest of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Runs one subcommand; returns 0 on success, 2 for configuration or usage
/// errors and 1 for runtime failures.
int run_command(int argc, const char* const* argv);

/// Same, with the arguments after the program name.
int run_command(const std::vector<std::string>& args);

}  // namespace ptip
