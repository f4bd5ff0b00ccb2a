#pragma once

// Experiment driver behind the `occlab` executable.
// Exit codes: 0 success, 2 config error, 3 numerical-budget failure,
// 4 acceptance threshold missed under --assert.

#include <ostream>
#include <string>
#include <vector>

namespace occlab {

inline constexpr const char* kVersion = "0.1.0";

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace occlab
