#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdk::cli {

/// Runs one `cdk` invocation; args exclude the program name. Exit codes:
/// 0 success (verify: accepted), 1 verify rejected, 2 bad input.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace cdk::cli
