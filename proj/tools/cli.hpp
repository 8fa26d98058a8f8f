#pragma once

#include <iosfwd>

namespace prelabel {

/// Entry point of the `prelabel` tool. Returns 0 on success, 1 on user
/// error and 2 on internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prelabel
