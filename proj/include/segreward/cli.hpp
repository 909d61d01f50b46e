#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace segreward::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitDegenerate = 3;

inline constexpr const char* kToolName = "segreward";
inline constexpr const char* kToolVersion = "0.1.0";

// Runs one subcommand. `args` excludes the program name. Output that is not
// written to a file goes to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace segreward::cli
