#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "csv.hpp"
#include "dml/error.hpp"
#include "dml/parallel.hpp"
#include "dml/repeated.hpp"
#include "dml/rng.hpp"
#include "dml/report_io.hpp"
#include "tables.hpp"

namespace dml::cli {
namespace {

using nlohmann::json;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for '" + path.string() + "'");
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path path(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create output directory '" + dir + "': " + ec.message());
  return path;
}

json learner_json(const LearnerSpec& spec) {
  json j{{"kind", to_string(spec.kind)}, {"params", spec.params}};
  if (!spec.components.empty()) {
    json comps = json::array();
    for (const auto& c : spec.components) comps.push_back(learner_json(c));
    j["components"] = comps;
  }
  return j;
}

json dgp_json(const DgpSpec& g) {
  return json{{"p", g.p},
              {"form", to_string(g.form)},
              {"sparsity", g.sparsity},
              {"confounders", g.confounders},
              {"confounder_scale", g.confounder_scale},
              {"outcome_scale", g.outcome_scale},
              {"propensity_scale", g.propensity_scale},
              {"effect", g.effect},
              {"effect_heterogeneity", g.effect_heterogeneity},
              {"propensity_bounds", {g.propensity_lo, g.propensity_hi}},
              {"noise_sd", g.noise_sd},
              {"correlation", g.correlation},
              {"seed", g.seed}};
}

void check_config_ranges(std::size_t folds, double lo, double hi, double alpha, const std::string& section) {
  if (folds < 2) throw ConfigError(section + ".folds: K must be >= 2");
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw ConfigError(section + ".trim: need 0 < lo < hi < 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError(section + ".alpha: must lie in (0, 1)");
}

}  // namespace

void run_estimate(const EstimateOptions& o, std::ostream& log) {
  if (o.data.empty()) throw ConfigError("estimate.data: no data file given (--data)");
  if (o.outcome.empty()) throw ConfigError("estimate.outcome: no outcome column given (--outcome)");
  if (o.treatment.empty()) throw ConfigError("estimate.treatment: no treatment column given (--treatment)");
  if (o.splits == 0) throw ConfigError("estimate.splits: must be >= 1");
  for (std::size_t k : o.folds) check_config_ranges(k, o.trim_lo, o.trim_hi, o.alpha, "estimate");
  set_max_workers(std::max<std::size_t>(1, o.workers));

  const Dataset data = dataset_from_csv(read_csv(o.data), o.outcome, o.treatment, o.covariates);
  const auto out_dir = prepare_out_dir(o.out);

  EstimateBundle bundle;
  json methods = json::array(), scores = json::array(), learners = json::object();
  for (LearnerKind m : o.methods) {
    methods.push_back(to_string(m));
    learners[to_string(m)] = {{"g", learner_json(make_spec(m, Task::Regression, o.learners))},
                              {"m", learner_json(make_spec(m, Task::Probability, o.learners))}};
  }
  for (ScoreKind s : o.scores) scores.push_back(to_string(s));
  bundle.config = json{{"data", std::filesystem::path(o.data).filename().string()},
                       {"outcome", o.outcome},
                       {"treatment", o.treatment},
                       {"covariates", data.feature_names()},
                       {"n_obs", data.size()},
                       {"scores", scores},
                       {"methods", methods},
                       {"folds", o.folds},
                       {"splits", o.splits},
                       {"trim", {o.trim_lo, o.trim_hi}},
                       {"alpha", o.alpha},
                       {"seed", o.seed},
                       {"learners", learners}};

  for (ScoreKind score : o.scores) {
    for (std::size_t k : o.folds) {
      for (LearnerKind method : o.methods) {
        CrossfitConfig config;
        config.folds = k;
        config.score = score;
        config.learner_g = make_spec(method, Task::Regression, o.learners);
        config.learner_m = make_spec(method, Task::Probability, o.learners);
        config.trim_lo = o.trim_lo;
        config.trim_hi = o.trim_hi;
        config.alpha = o.alpha;
        EstimateEntry entry;
        entry.score = score;
        entry.method = display_name(method);
        entry.folds = k;
        entry.aggregate = run_repeated(data, config, o.splits, o.seed);
        bundle.entries.push_back(std::move(entry));
      }
    }
  }

  const std::string table = format_estimate_table(bundle);
  write_file(out_dir / "report.json", to_json(bundle).dump(2) + "\n");
  write_file(out_dir / "table.txt", table);
  write_file(out_dir / "table.csv", format_estimate_csv(bundle));
  log << table;
}

void run_simulate(const SimulateOptions& o, std::ostream& log) {
  check_config_ranges(o.folds, o.trim_lo, o.trim_hi, o.alpha, "simulate");
  if (o.reps < 2) throw ConfigError("simulate.reps: must be >= 2");
  if (o.experiment == ExperimentKind::Rate && o.n_grid.size() < 2) {
    throw ConfigError("simulate.n: a rate experiment needs at least two sample sizes");
  }
  for (std::size_t i = 1; i < o.n_grid.size(); ++i) {
    if (o.n_grid[i] <= o.n_grid[i - 1]) throw ConfigError("simulate.n: sample sizes must increase");
  }
  try {
    validate(o.dgp);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid [dgp]: ") + e.what());
  }
  set_max_workers(std::max<std::size_t>(1, o.workers));
  const auto out_dir = prepare_out_dir(o.out);

  ExperimentConfig config;
  config.mode = o.mode;
  config.crossfit.folds = o.folds;
  config.crossfit.score = o.score;
  config.crossfit.learner_g = make_spec(o.method_g, Task::Regression, o.learners);
  config.crossfit.learner_m = make_spec(o.method_m, Task::Probability, o.learners);
  config.crossfit.trim_lo = o.trim_lo;
  config.crossfit.trim_hi = o.trim_hi;
  config.crossfit.alpha = o.alpha;
  config.crossfit.seed = o.seed;

  DgpSpec dgp = o.dgp;
  dgp.seed = derive_seed(o.seed, o.dgp.seed);

  std::vector<CoverageSummary> rows;
  std::vector<double> ratios;
  if (o.experiment == ExperimentKind::Rate) {
    RateTable table = rate_experiment(dgp, o.n_grid, o.reps, config);
    rows = std::move(table.rows);
    ratios = std::move(table.ratios);
  } else {
    for (std::size_t n : o.n_grid) rows.push_back(coverage_experiment(dgp, n, o.reps, config));
  }

  for (const auto& row : rows) {
    for (const auto& r : row.records) {
      if (!(r.sigma_hat > 0.0 && std::isfinite(r.sigma_hat))) {
        throw InvariantFailure("non-positive sigma_hat at N=" + std::to_string(row.n) + ", rep " +
                               std::to_string(r.rep));
      }
    }
  }
  const CoverageSummary again = coverage_experiment(dgp, rows.front().n, 2, config);
  const auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  for (std::size_t r = 0; r < 2; ++r) {
    const auto& a = again.records[r];
    const auto& b = rows.front().records[r];
    if (!same(a.theta_hat, b.theta_hat) || !same(a.sigma_hat, b.sigma_hat) || !same(a.naive_theta, b.naive_theta)) {
      throw InvariantFailure("replication " + std::to_string(r) + " is not reproducible");
    }
  }

  json summary_rows = json::array();
  for (const auto& row : rows) summary_rows.push_back(to_json(row));
  const json summary{
      {"schema_version", kSchemaVersion},
      {"experiment", o.experiment == ExperimentKind::Rate ? "rate" : "coverage"},
      {"config",
       {{"n", o.n_grid},
        {"reps", o.reps},
        {"score", to_string(o.score)},
        {"mode", to_string(o.mode)},
        {"learner_g", learner_json(config.crossfit.learner_g)},
        {"learner_m", learner_json(config.crossfit.learner_m)},
        {"folds", o.folds},
        {"trim", {o.trim_lo, o.trim_hi}},
        {"alpha", o.alpha},
        {"seed", o.seed},
        {"dgp", dgp_json(dgp)}}},
      {"rows", summary_rows},
      {"ratios", ratios},
      {"determinism_verified", true}};
  write_file(out_dir / "reps.csv", format_reps_csv(rows));
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");

  for (const auto& row : rows) {
    char line[256];
    std::snprintf(line, sizeof line,
                  "N=%zu reps=%zu target=%.6f coverage=%.3f (%.3f) bias=%.5f (%.5f) rmse=%.5f naive_coverage=%.3f\n",
                  row.n, row.reps, row.target, row.coverage, row.coverage_se, row.bias, row.bias_se, row.rmse,
                  row.naive_coverage);
    log << line;
  }
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "rmse ratio N=%zu/N=%zu: %.4f\n", o.n_grid[i + 1], o.n_grid[i], ratios[i]);
    log << line;
  }
}

int report_failure(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvariantFailure& e) {
    err << "invariant failure: " << e.what() << "\n";
    return kInvariantFailure;
  } catch (const Error& e) {
    if (is_data_error(e.code())) {
      err << "data error: " << e.what() << "\n";
      return kDataError;
    }
    err << "pipeline error: " << e.what() << "\n";
    return kPipelineError;
  } catch (const std::exception& e) {
    err << "pipeline error: " << e.what() << "\n";
    return kPipelineError;
  }
}

}  // namespace dml::cli
