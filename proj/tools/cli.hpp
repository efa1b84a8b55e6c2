#pragma once

#include <ostream>
#include <span>
#include <string>

namespace headtrack::cli {

// Exit codes returned by dispatch.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kInputError = 2;
inline constexpr int kNumericError = 3;

// Runs one subcommand; args excludes the program name.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace headtrack::cli
