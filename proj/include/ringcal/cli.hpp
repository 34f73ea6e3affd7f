#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ringcal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;

/// Parse and run one command line. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Same, with args[0] taken as the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace ringcal::cli
