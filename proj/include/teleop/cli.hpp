#pragma once

#include <iosfwd>

namespace teleop {

/// Entry point of `teleopctl`. Returns 0 on success, 2 on invalid input or usage, 1 otherwise.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

/// Sets the spdlog level from TELEOP_LOG (trace, debug, info, warn, error, off; default warn).
void configure_logging();

} // namespace teleop
