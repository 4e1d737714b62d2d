#pragma once

namespace regraph {

// Parses argv, dispatches to the subcommand, and maps failures onto the exit
// scheme: 0 success, 1 unexpected runtime failure, 2 configuration or input
// error, 3 empty output graph, 4 partial run with report emitted.
int run_cli(int argc, const char* const* argv);

}  // namespace regraph
