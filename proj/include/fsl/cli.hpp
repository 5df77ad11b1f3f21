#pragma once

#include <iosfwd>

namespace fsl {

/// Exit codes of the command-line driver.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitValidation = 4,
};

/// fslctl entry point: solve-forward | solve-adjoint | optimize | validate.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fsl
