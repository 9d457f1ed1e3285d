#pragma once

#include <iosfwd>

namespace narrowlab {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand. Returns 0 on success, 2 on a usage error (bad flag,
/// bad value, unknown config key) and 1 when the computation itself fails.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace narrowlab
