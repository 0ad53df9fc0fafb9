#pragma once

#include <string>
#include <vector>

// Batch command-line front end over the library. run() is the whole program;
// tests drive it in-process and the binary forwards argv. Exit codes: 0
// success, 1 usage error, 2 data error, each with a single-line diagnostic.

namespace stylo::cli {

// args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace stylo::cli
