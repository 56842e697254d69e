#pragma once

#include <string>
#include <vector>

namespace swipt {

/// Batch front-end dispatcher. args excludes the program name.
/// Exit codes: 0 success, 1 failed validation checks, 2 parse/config errors,
/// 3 solver infeasibility, 4 numerical failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace swipt
