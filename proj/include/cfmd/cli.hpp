#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfmd {

// Exit codes: 0 success, 2 usage/validation error, 1 runtime failure.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace cfmd
