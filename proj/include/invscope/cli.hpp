#pragma once

#include <ostream>

namespace invscope {

/// Exit status: 0 success, 1 usage or input error, 2 environment or store
/// error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitEnvironment = 2;

/// Entry point of the `invscope` command. Reads INVSCOPE_CONFIG when no
/// --config flag is given.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace invscope
