#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dialogen::cli {

/// Runs one subcommand. Results go to `out`; failures are reported on `err`
/// as {"error": {"kind", "message", "command"}}. Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dialogen::cli
