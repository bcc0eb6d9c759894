#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pireg {

// Full command-line surface, callable in-process. Exit codes: 0 pass/valid,
// 1 fail/invalid, 2 refusal or usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pireg
