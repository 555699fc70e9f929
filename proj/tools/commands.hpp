#pragma once

#include <ostream>
#include <stdexcept>

#include "cli_config.hpp"

namespace dml::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kDataError = 3,
  kPipelineError = 4,
  kInvariantFailure = 5,
};

/// A hard post-condition of a run did not hold.
class InvariantFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes report.json, table.txt and table.csv to options.out; echoes the table to `log`.
void run_estimate(const EstimateOptions& options, std::ostream& log);

/// Writes reps.csv and summary.json to options.out. Re-runs the first two
/// replications of the first experiment row and throws InvariantFailure if
/// they differ, or if any sigma_hat is non-positive or non-finite.
void run_simulate(const SimulateOptions& options, std::ostream& log);

/// Maps an exception to its exit code and prints "error: ..." to `err`.
int report_failure(std::ostream& err);

}  // namespace dml::cli
