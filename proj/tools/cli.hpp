#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sandpile::cli {

enum ExitCode : int {
    kPass = 0,
    kThresholdFailure = 1,
    kConfigError = 2,
    kCapacityError = 3,
};

/// Entry point for the `sandpile` binary. Reports go to the --out file (or
/// `out` when none is given); the human-readable summary goes to `err`.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sandpile::cli
