#pragma once

#include <string>
#include <vector>

namespace sdd::cli {

// Runs one subcommand (synth, train, eval, crossval, ablate, report).
// Returns a process exit code; errors are reported on stderr.
int dispatch(int argc, char** argv);
int dispatch(const std::vector<std::string>& args);

}  // namespace sdd::cli
