#include <doctest.h>

#include "dml/error.hpp"
#include "dml/report_io.hpp"
#include "dml/simulation.hpp"

using namespace dml;

namespace {

AggregateReport sample_aggregate() {
  DgpSpec spec;
  const SyntheticSample s = generate(spec, 300, 1);
  CrossfitConfig c;
  c.score = ScoreKind::ATTE;
  c.learner_g = LearnerSpec{LearnerKind::OracleLinear, Task::Regression, {}, {}};
  c.learner_m = LearnerSpec{LearnerKind::OracleLinear, Task::Probability, {}, {}};
  return run_repeated(s.data, c, 3, 0xfffffffffffffff0ULL);
}

}  // namespace

TEST_CASE("estimate reports round trip field for field") {
  const AggregateReport agg = sample_aggregate();
  for (const EstimateReport& r : agg.splits) {
    const EstimateReport back = estimate_report_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back == r);
    CHECK(back.theta_hat == r.theta_hat);
    CHECK(back.per_fold.size() == r.per_fold.size());
  }
  CHECK(aggregate_report_from_json(nlohmann::json::parse(to_json(agg).dump())) == agg);
}

TEST_CASE("bundles round trip and carry the schema version") {
  EstimateBundle bundle;
  bundle.config = {{"seed", 4}, {"splits", 3}};
  bundle.entries.push_back({ScoreKind::ATTE, "Oracle Linear", 5, sample_aggregate()});
  const nlohmann::json j = to_json(bundle);
  CHECK(j.at("schema_version") == kSchemaVersion);
  const EstimateBundle back = estimate_bundle_from_json(nlohmann::json::parse(j.dump(2)));
  CHECK(back == bundle);
  CHECK(back.entries[0].aggregate.master_seed == 0xfffffffffffffff0ULL);
}

TEST_CASE("a foreign schema version is rejected") {
  nlohmann::json j = to_json(EstimateBundle{});
  j["schema_version"] = "dml-report/0";
  CHECK_THROWS(estimate_bundle_from_json(j));
}

TEST_CASE("coverage summaries serialize their records on request") {
  DgpSpec spec;
  ExperimentConfig c;
  c.mode = NuisanceMode::Oracle;
  const CoverageSummary s = coverage_experiment(spec, 100, 4, c);
  CHECK_FALSE(to_json(s).contains("records"));
  const nlohmann::json full = to_json(s, true);
  REQUIRE(full.contains("records"));
  CHECK(full.at("records").size() == 4);
  CHECK(full.at("coverage").get<double>() == s.coverage);
}
