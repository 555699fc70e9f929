#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "dml/learners/learner.hpp"
#include "dml/scores.hpp"
#include "dml/simulation.hpp"

namespace dml::cli {

/// Malformed or unknown configuration; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hyperparameters and component lists from the per-learner sections.
struct LearnerSettings {
  std::map<LearnerKind, Hyperparameters> params;
  std::map<LearnerKind, std::vector<LearnerKind>> components;
};

/// Spec for `kind` with its section's hyperparameters; Ensemble and Best
/// components are resolved recursively from their own sections.
LearnerSpec make_spec(LearnerKind kind, Task task, const LearnerSettings& settings);

struct EstimateOptions {
  std::string data;
  std::string outcome;
  std::string treatment;
  std::vector<std::string> covariates;
  std::vector<ScoreKind> scores{ScoreKind::ATE};
  std::vector<LearnerKind> methods{LearnerKind::Lasso};
  std::vector<std::size_t> folds{5};
  std::size_t splits = 100;
  double trim_lo = 0.01;
  double trim_hi = 0.99;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out = ".";
  LearnerSettings learners;
};

enum class ExperimentKind { Coverage, Rate };

struct SimulateOptions {
  ExperimentKind experiment = ExperimentKind::Coverage;
  std::vector<std::size_t> n_grid{1000};
  std::size_t reps = 100;
  ScoreKind score = ScoreKind::ATE;
  LearnerKind method_g = LearnerKind::OracleLinear;
  LearnerKind method_m = LearnerKind::OracleLinear;
  NuisanceMode mode = NuisanceMode::Learned;
  std::size_t folds = 5;
  double trim_lo = 0.01;
  double trim_hi = 0.99;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out = ".";
  DgpSpec dgp;
  LearnerSettings learners;
};

/// Parses an INI file. Throws ConfigError if unreadable or malformed.
boost::property_tree::ptree load_config(const std::string& path);

/// Applies [estimate] and learner sections. Rejects any other section and any
/// unknown key with ConfigError naming "section.key".
void apply_estimate_config(const boost::property_tree::ptree& tree, EstimateOptions& options);

/// Applies [simulate], [dgp] and learner sections.
void apply_simulate_config(const boost::property_tree::ptree& tree, SimulateOptions& options);

/// Value parsers shared by config and flags; `where` names the key in errors.
std::vector<std::string> split_list(const std::string& text);
std::vector<ScoreKind> parse_scores(const std::string& text, const std::string& where);
std::vector<LearnerKind> parse_methods(const std::string& text, const std::string& where);
std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& where);
std::pair<double, double> parse_trim(const std::string& text, const std::string& where);
double parse_double(const std::string& text, const std::string& where);
std::uint64_t parse_u64(const std::string& text, const std::string& where);

}  // namespace dml::cli
