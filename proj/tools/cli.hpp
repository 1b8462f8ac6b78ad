#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace cqpolar::cli {

enum ExitCode : int { kOk = 0, kInvalid = 1, kCapacity = 2, kCheckFailed = 3 };

// args excludes the program name. Reports go to files or `out`;
// diagnostics and summaries go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cqpolar::cli
