#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adlex::cli {

// Runs one subcommand. args excludes the program name. Exit codes: 0 success,
// 1 usage or validation error, 2 runtime error. Artifacts without --out go to
// `out`; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace adlex::cli
