#include "dml/repeated.hpp"

#include <algorithm>
#include <cmath>

#include "dml/error.hpp"
#include "dml/parallel.hpp"

namespace dml {
namespace {

void check_lengths(const std::vector<double>& thetas, const std::vector<double>& sigmas) {
  if (thetas.size() != sigmas.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(thetas.size()) + " thetas vs " +
                                               std::to_string(sigmas.size()) + " sigmas");
  }
  if (thetas.empty()) throw Error(ErrorCode::InsufficientData, "no splits");
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InsufficientData, "median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double sigma_mean(const std::vector<double>& thetas, const std::vector<double>& sigmas) {
  check_lengths(thetas, sigmas);
  const double s = static_cast<double>(thetas.size());
  double theta_bar = 0.0;
  for (double t : thetas) theta_bar += t;
  theta_bar /= s;
  double acc = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double dev = thetas[i] - theta_bar;
    acc += sigmas[i] * sigmas[i] + dev * dev;
  }
  return std::sqrt(acc / s);
}

double sigma_median(const std::vector<double>& thetas, const std::vector<double>& sigmas) {
  check_lengths(thetas, sigmas);
  const double theta_med = median(thetas);
  std::vector<double> adjusted(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double dev = thetas[i] - theta_med;
    adjusted[i] = std::sqrt(sigmas[i] * sigmas[i] + dev * dev);
  }
  return median(std::move(adjusted));
}

AggregateReport aggregate(std::vector<EstimateReport> splits, std::uint64_t master_seed) {
  AggregateReport out;
  out.master_seed = master_seed;
  std::vector<double> thetas, sigmas;
  for (const auto& r : splits) {
    thetas.push_back(r.theta_hat);
    sigmas.push_back(r.sigma_hat);
  }
  check_lengths(thetas, sigmas);
  double sum = 0.0;
  for (double t : thetas) sum += t;
  out.mean_theta = sum / static_cast<double>(thetas.size());
  out.median_theta = median(thetas);
  out.sigma_mean = sigma_mean(thetas, sigmas);
  out.sigma_median = sigma_median(thetas, sigmas);
  out.splits = std::move(splits);
  return out;
}

AggregateReport run_repeated(const Dataset& data, const CrossfitConfig& config, std::size_t splits,
                             std::uint64_t master_seed) {
  if (splits == 0) throw Error(ErrorCode::InvalidArgument, "splits must be >= 1");
  validate(config);
  std::vector<EstimateReport> reports(splits);
  parallel_for(splits, [&](std::size_t s) {
    CrossfitConfig c = config;
    c.seed = master_seed + static_cast<std::uint64_t>(s);
    reports[s] = crossfit_estimate(data, c);
  });
  return aggregate(std::move(reports), master_seed);
}

}  // namespace dml
