#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace isl::cli {

// Exit statuses.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_divergence = 3;
inline constexpr int exit_property = 4;

// Name of the environment variable holding the default output directory.
inline constexpr const char* output_dir_env = "ISL_OUTPUT_DIR";

// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isl::cli
