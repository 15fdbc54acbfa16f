#ifndef MSRDS_CLI_COMMANDS_HPP
#define MSRDS_CLI_COMMANDS_HPP

#include <string>
#include <vector>

#include "msrds/cli/config.hpp"
#include "msrds/cli/table.hpp"

namespace msrds::cli {

// Numeric codes used in CSV output (documented in docs/config.md):
// method: 0 eigen-lift, 1 finite-time, 2 analytic.
// admissibility_verdict: 0 retained, 1 rejected, 2 inconclusive.
// classification: 0 trivial, 1 positive-branch, 2 negative-branch, 3 none.

ResultTable cmd_spectrum(const RunConfig& config);
ResultTable cmd_simulate(const RunConfig& config);
ResultTable cmd_pullback(const RunConfig& config);
ResultTable cmd_bifurcate(const RunConfig& config);

// Writes the table into config.out_dir as <command>.csv (and <command>.svg
// when requested); returns the paths written.
std::vector<std::string> write_outputs(const std::string& command, const RunConfig& config,
                                       const ResultTable& table);

// Full entry point: argument parsing, dispatch and the exit-code contract
// (0 success, 2 configuration errors, 3 numerical failures, 4 I/O failures).
int run_cli(int argc, const char* const* argv);

}  // namespace msrds::cli

#endif
