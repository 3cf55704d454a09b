#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace spikezip {

/// Command-line entry point (argv without the program name).
/// Exit codes: 0 success, 1 usage error, 2 I/O or data error, 3 numeric
/// divergence during training. Diagnostics go to `err`, results to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spikezip
