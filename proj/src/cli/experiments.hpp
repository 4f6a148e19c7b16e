#ifndef OMCV_CLI_EXPERIMENTS_HPP
#define OMCV_CLI_EXPERIMENTS_HPP

#include <string>

#include "cli/config.hpp"

namespace omcv::cli {

/// Exit codes shared by the tool: 0 success, 1 config error, 2 numerical
/// failure (non-convergence, instability, truncation overflow).
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Execute a parsed + schema-validated config; writes the CSV and its
/// JSON metadata sidecar next to it.
int run_experiment(const RawConfig& config);

/// Field-by-field validation plus physics pre-checks (stability of the drive
/// recipe, RWA margin). Prints the report to stdout; returns true when valid.
bool validate_and_report(const RawConfig& config);

int worker_count();

}  // namespace omcv::cli

#endif
