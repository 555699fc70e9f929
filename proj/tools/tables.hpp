#pragma once

#include <string>
#include <vector>

#include "dml/report_io.hpp"
#include "dml/simulation.hpp"

namespace dml::cli {

/// Fixed-width panels, one per (score, K), methods as columns. Standard
/// errors sit in parentheses under each estimate.
std::string format_estimate_table(const EstimateBundle& bundle);

/// One row per (score, method, K).
std::string format_estimate_csv(const EstimateBundle& bundle);

/// One row per replication across all experiment rows.
std::string format_reps_csv(const std::vector<CoverageSummary>& rows);

/// Shortest decimal that round-trips.
std::string format_exact(double v);

}  // namespace dml::cli
