#pragma once
// Entry point of the flipconc command line tool.
#include <iosfwd>
#include <string>
#include <vector>

namespace flipconc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitConfig = 2;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flipconc::cli
