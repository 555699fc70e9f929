#include "dml/report_io.hpp"

#include "dml/error.hpp"

namespace dml {

using nlohmann::json;

nlohmann::json to_json(const FoldDiagnostics& d) {
  return json{{"size", d.size}, {"theta", d.theta}, {"n_trimmed", d.n_trimmed}, {"m_bar", d.m_bar},
              {"selected", d.selected}};
}

nlohmann::json to_json(const EstimateReport& r) {
  json folds = json::array();
  for (const auto& d : r.per_fold) folds.push_back(to_json(d));
  return json{{"score", to_string(r.score)}, {"theta_hat", r.theta_hat}, {"sigma_hat", r.sigma_hat},
              {"ci_lo", r.ci_lo},           {"ci_hi", r.ci_hi},         {"alpha", r.alpha},
              {"n_obs", r.n_obs},           {"folds", r.folds},         {"seed", r.seed},
              {"n_trimmed", r.n_trimmed},   {"per_fold", folds}};
}

nlohmann::json to_json(const AggregateReport& r) {
  json splits = json::array();
  for (const auto& s : r.splits) splits.push_back(to_json(s));
  return json{{"master_seed", r.master_seed}, {"mean_theta", r.mean_theta},   {"median_theta", r.median_theta},
              {"sigma_mean", r.sigma_mean},   {"sigma_median", r.sigma_median}, {"splits", splits}};
}

nlohmann::json to_json(const CoverageSummary& s, bool include_records) {
  json j{{"n", s.n},
         {"reps", s.reps},
         {"target", s.target},
         {"coverage", s.coverage},
         {"coverage_se", s.coverage_se},
         {"bias", s.bias},
         {"bias_se", s.bias_se},
         {"rmse", s.rmse},
         {"rmse_se", s.rmse_se},
         {"mean_sigma", s.mean_sigma},
         {"mean_ci_width", s.mean_ci_width},
         {"within_3se", s.within_3se},
         {"naive_coverage", s.naive_coverage},
         {"naive_bias", s.naive_bias},
         {"naive_rmse", s.naive_rmse}};
  if (include_records) {
    json recs = json::array();
    for (const auto& r : s.records) {
      recs.push_back(json{{"rep", r.rep}, {"theta_hat", r.theta_hat}, {"sigma_hat", r.sigma_hat},
                          {"ci_lo", r.ci_lo}, {"ci_hi", r.ci_hi}, {"covered", r.covered},
                          {"naive_theta", r.naive_theta}, {"naive_covered", r.naive_covered},
                          {"n_trimmed", r.n_trimmed}});
    }
    j["records"] = recs;
  }
  return j;
}

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("missing field ") + key);
  return j.at(key).get<T>();
}

}  // namespace

FoldDiagnostics fold_diagnostics_from_json(const nlohmann::json& j) {
  FoldDiagnostics d;
  d.size = field<std::size_t>(j, "size");
  d.theta = field<double>(j, "theta");
  d.n_trimmed = field<std::size_t>(j, "n_trimmed");
  d.m_bar = field<double>(j, "m_bar");
  d.selected = field<std::map<std::string, std::string>>(j, "selected");
  return d;
}

EstimateReport estimate_report_from_json(const nlohmann::json& j) {
  EstimateReport r;
  r.score = score_kind_from_string(field<std::string>(j, "score"));
  r.theta_hat = field<double>(j, "theta_hat");
  r.sigma_hat = field<double>(j, "sigma_hat");
  r.ci_lo = field<double>(j, "ci_lo");
  r.ci_hi = field<double>(j, "ci_hi");
  r.alpha = field<double>(j, "alpha");
  r.n_obs = field<std::size_t>(j, "n_obs");
  r.folds = field<std::size_t>(j, "folds");
  r.seed = field<std::uint64_t>(j, "seed");
  r.n_trimmed = field<std::size_t>(j, "n_trimmed");
  for (const auto& d : field<json>(j, "per_fold")) r.per_fold.push_back(fold_diagnostics_from_json(d));
  return r;
}

AggregateReport aggregate_report_from_json(const nlohmann::json& j) {
  AggregateReport r;
  r.master_seed = field<std::uint64_t>(j, "master_seed");
  r.mean_theta = field<double>(j, "mean_theta");
  r.median_theta = field<double>(j, "median_theta");
  r.sigma_mean = field<double>(j, "sigma_mean");
  r.sigma_median = field<double>(j, "sigma_median");
  for (const auto& s : field<json>(j, "splits")) r.splits.push_back(estimate_report_from_json(s));
  return r;
}

nlohmann::json to_json(const EstimateBundle& b) {
  json entries = json::array();
  for (const auto& e : b.entries) {
    entries.push_back(json{{"score", to_string(e.score)},
                           {"method", e.method},
                           {"folds", e.folds},
                           {"aggregate", to_json(e.aggregate)}});
  }
  return json{{"schema_version", b.schema_version}, {"config", b.config}, {"entries", entries}};
}

EstimateBundle estimate_bundle_from_json(const nlohmann::json& j) {
  EstimateBundle b;
  b.schema_version = field<std::string>(j, "schema_version");
  if (b.schema_version != kSchemaVersion) {
    throw Error(ErrorCode::InvalidArgument, "unsupported schema_version " + b.schema_version);
  }
  b.config = field<json>(j, "config");
  for (const auto& e : field<json>(j, "entries")) {
    EstimateEntry entry;
    entry.score = score_kind_from_string(field<std::string>(e, "score"));
    entry.method = field<std::string>(e, "method");
    entry.folds = field<std::size_t>(e, "folds");
    entry.aggregate = aggregate_report_from_json(field<json>(e, "aggregate"));
    b.entries.push_back(std::move(entry));
  }
  return b;
}

bool operator==(const FoldDiagnostics& a, const FoldDiagnostics& b) {
  return a.size == b.size && a.theta == b.theta && a.n_trimmed == b.n_trimmed && a.m_bar == b.m_bar &&
         a.selected == b.selected;
}

bool operator==(const EstimateReport& a, const EstimateReport& b) {
  return a.score == b.score && a.theta_hat == b.theta_hat && a.sigma_hat == b.sigma_hat && a.ci_lo == b.ci_lo &&
         a.ci_hi == b.ci_hi && a.alpha == b.alpha && a.n_obs == b.n_obs && a.folds == b.folds && a.seed == b.seed &&
         a.n_trimmed == b.n_trimmed && a.per_fold == b.per_fold;
}

bool operator==(const AggregateReport& a, const AggregateReport& b) {
  return a.master_seed == b.master_seed && a.mean_theta == b.mean_theta && a.median_theta == b.median_theta &&
         a.sigma_mean == b.sigma_mean && a.sigma_median == b.sigma_median && a.splits == b.splits;
}

bool operator==(const EstimateEntry& a, const EstimateEntry& b) {
  return a.score == b.score && a.method == b.method && a.folds == b.folds && a.aggregate == b.aggregate;
}

bool operator==(const EstimateBundle& a, const EstimateBundle& b) {
  return a.schema_version == b.schema_version && a.config == b.config && a.entries == b.entries;
}

}  // namespace dml
