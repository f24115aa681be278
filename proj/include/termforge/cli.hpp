#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace termforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes the two-domain synthetic fixture plus a ready-to-run config file
/// `termforge.cfg` into `dir`.
void write_fixture(const std::string& dir, unsigned long long seed);

}  // namespace termforge::cli
