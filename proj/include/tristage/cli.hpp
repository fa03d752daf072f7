#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tristage::cli {

/// Runs one subcommand (generate, train, predict, evaluate, diagnose).
/// `args` excludes the program name. Returns the process exit code:
/// 0 success, 2 usage, 3 validation, 4 constraint-data, 5 persistence.
/// Failures print one line `error: <category>: <message>` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tristage::cli
