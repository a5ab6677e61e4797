#pragma once

#include <string>
#include <vector>

namespace hpi::cli {

// Entry point shared by the binary and the CLI tests. Returns the process
// exit code: 0 success, 2 config error, 3 data error, 4 numerical failure.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace hpi::cli
