#pragma once

#include <cstdint>
#include <vector>

#include "dml/crossfit.hpp"

namespace dml {

struct AggregateReport {
  std::uint64_t master_seed = 0;
  /// One report per split, in replication order; split s used seed master_seed + s.
  std::vector<EstimateReport> splits;
  double mean_theta = 0.0;
  double median_theta = 0.0;
  double sigma_mean = 0.0;
  double sigma_median = 0.0;
};

/// Median with the mean of the two middle values for even length. Throws
/// InsufficientData on empty input.
double median(std::vector<double> values);

/// sqrt(mean_s(sigma_s^2 + (theta_s - mean theta)^2)). Throws LengthMismatch
/// or InsufficientData (empty).
double sigma_mean(const std::vector<double>& thetas, const std::vector<double>& sigmas);

/// median_i sqrt(sigma_i^2 + (theta_i - median theta)^2).
double sigma_median(const std::vector<double>& thetas, const std::vector<double>& sigmas);

/// Aggregates of already computed splits.
AggregateReport aggregate(std::vector<EstimateReport> splits, std::uint64_t master_seed);

/// S cross-fitting passes of `config` with seeds master_seed + s, run
/// concurrently and reduced in replication order. Throws InvalidArgument if S == 0.
AggregateReport run_repeated(const Dataset& data, const CrossfitConfig& config, std::size_t splits,
                             std::uint64_t master_seed);

}  // namespace dml
