#pragma once

#include <iosfwd>

namespace tiltcli {

/// Runs one CLI invocation. Returns 0 on success, 1 on a usage error
/// (bad flags, unreadable or malformed input, unknown config key) and 2 on
/// a numerical failure, in which case diagnostic.txt is written to the
/// output directory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tiltcli
