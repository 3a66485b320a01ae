#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aat {

// Entry point of the `aat` tool. Human-readable output goes to `out`; on
// failure a JSON object {"error": kind, "message": text} is written to `err`
// and a nonzero code returned:
//   1 internal, 2 usage/config, 3 I/O, 4 format, 5 contract, 6 numeric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aat
