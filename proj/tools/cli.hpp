#pragma once

#include <iosfwd>

namespace stens::cli {

/// Runs the command line. Returns 0 on success, 1 on input errors and
/// usage mistakes, 2 on internal errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace stens::cli
