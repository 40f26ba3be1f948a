#pragma once

// Batch front end. Exit codes: 0 ok, 1 verification failure, 2 config or
// precondition error, 3 budget exceeded, 4 internal error.

#include <iosfwd>
#include <string>
#include <vector>

#include "logdiam/modarith.hpp"

namespace logdiam {

enum ExitCode : int { exit_ok = 0, exit_verify = 1, exit_config = 2, exit_budget = 3, exit_internal = 4 };

/// "2..64", "7", "2,3,5" and mixtures such as "2..10,16". Throws ConfigError.
std::vector<u64> parse_q_list(const std::string& text);

/// argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace logdiam
