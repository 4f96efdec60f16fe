#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "revsent/labeler.hpp"

namespace revsent::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitStage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitConfig = 3;

// Entry point shared by the executable and the tests. args excludes argv[0].
// Diagnostics and log lines go to err; summaries go to out.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

}  // namespace revsent::cli
