#pragma once

#include <iosfwd>

namespace crawler {

/// Exit codes: 0 success, 1 scenario ended in a failure status, 2 bad
/// configuration or unreadable/malformed input.
enum ExitCode { exit_ok = 0, exit_failure = 1, exit_config = 2 };

/// Entry point of the crawler_slam tool (run, bench, render, validate).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crawler
