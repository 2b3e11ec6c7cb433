#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fedtest {

/// Environment variable consulted for the output directory when neither
/// --out nor output.dir is given.
inline constexpr const char* kOutDirEnv = "FEDTEST_OUT_DIR";

/// Entry point behind the `fedtest` binary. Exit codes: 0 success,
/// 1 runtime failure (e.g. divergence), 2 usage or configuration error.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fedtest
