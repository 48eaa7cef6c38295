#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dep/error.hpp"

namespace dep::cli {

// Process exit codes. Stable public contract.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitInvalidData = 2,    // bad magic/version/dtype, parse errors, out-of-range ids
    kExitShapeMismatch = 3,  // shape, remap and cross-input consistency errors
    kExitUnwritable = 4,     // output exists without --force, or cannot be written
    kExitMissingInput = 5,
};

int exit_code_for(ErrorCode code) noexcept;

// Runs one subcommand. `args` excludes the program name. Results and help go
// to `out`; failures are reported on `err` as a single `CODE: message` line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dep::cli
