#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli_config.hpp"
#include "commands.hpp"

namespace {

using namespace dml::cli;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct CommonFlags {
  std::optional<std::string> config, out, seed, workers, folds, trim, alpha;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI configuration file");
  cmd->add_option("--out", f.out, "output directory (env DML_OUT_DIR)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--workers", f.workers, "worker thread cap (env DML_WORKERS); results do not depend on it");
  cmd->add_option("--folds", f.folds, "cross-fitting folds K (estimate accepts a list, e.g. 2,5)");
  cmd->add_option("--trim", f.trim, "propensity cutoffs lo,hi");
  cmd->add_option("--alpha", f.alpha, "CI level is 1 - alpha");
}

template <typename Options>
void apply_common(const CommonFlags& f, Options& o) {
  if (const auto v = env("DML_OUT_DIR")) o.out = *v;
  if (const auto v = env("DML_WORKERS")) o.workers = static_cast<std::size_t>(parse_u64(*v, "DML_WORKERS"));
  if (f.out) o.out = *f.out;
  if (f.workers) o.workers = static_cast<std::size_t>(parse_u64(*f.workers, "--workers"));
  if (f.seed) o.seed = parse_u64(*f.seed, "--seed");
  if (f.trim) std::tie(o.trim_lo, o.trim_hi) = parse_trim(*f.trim, "--trim");
  if (f.alpha) o.alpha = parse_double(*f.alpha, "--alpha");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double/debiased machine learning estimates of treatment effects"};
  app.require_subcommand(1);

  CommonFlags est_common;
  std::optional<std::string> data, outcome, treatment, covariates, score, method, splits;
  CLI::App* estimate = app.add_subcommand("estimate", "cross-fitted ATE/ATTE/PLM estimates on a CSV file");
  add_common(estimate, est_common);
  estimate->add_option("--data", data, "CSV file with a header row");
  estimate->add_option("--outcome", outcome, "outcome column");
  estimate->add_option("--treatment", treatment, "binary treatment column");
  estimate->add_option("--covariates", covariates, "comma-separated covariate columns (default: all others)");
  estimate->add_option("--score", score, "ate, atte, plm (comma list)");
  estimate->add_option("--method", method,
                       "lasso, reg_tree, random_forest, boosting, ensemble, best, oracle_linear (comma list)");
  estimate->add_option("--splits", splits, "number of repeated sample splits S");

  CommonFlags sim_common;
  std::optional<std::string> reps, n_grid;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo coverage and rate experiments");
  add_common(simulate, sim_common);
  simulate->add_option("--reps", reps, "Monte Carlo replications");
  simulate->add_option("--n", n_grid, "sample size(s), comma list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (estimate->parsed()) {
      EstimateOptions o;
      if (est_common.config) apply_estimate_config(load_config(*est_common.config), o);
      apply_common(est_common, o);
      if (est_common.folds) o.folds = parse_sizes(*est_common.folds, "--folds");
      if (data) o.data = *data;
      if (outcome) o.outcome = *outcome;
      if (treatment) o.treatment = *treatment;
      if (covariates) o.covariates = split_list(*covariates);
      if (score) o.scores = parse_scores(*score, "--score");
      if (method) o.methods = parse_methods(*method, "--method");
      if (splits) o.splits = static_cast<std::size_t>(parse_u64(*splits, "--splits"));
      run_estimate(o, std::cout);
    } else {
      SimulateOptions o;
      if (!sim_common.config) throw ConfigError("simulate requires --config");
      apply_simulate_config(load_config(*sim_common.config), o);
      apply_common(sim_common, o);
      if (sim_common.folds) {
        const auto k = parse_sizes(*sim_common.folds, "--folds");
        if (k.size() != 1) throw ConfigError("--folds: simulate takes a single K");
        o.folds = k.front();
      }
      if (reps) o.reps = static_cast<std::size_t>(parse_u64(*reps, "--reps"));
      if (n_grid) o.n_grid = parse_sizes(*n_grid, "--n");
      run_simulate(o, std::cout);
    }
  } catch (...) {
    return report_failure(std::cerr);
  }
  return kOk;
}
