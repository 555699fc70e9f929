#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dml/repeated.hpp"
#include "dml/simulation.hpp"

namespace dml {

inline constexpr const char* kSchemaVersion = "dml-report/1";

nlohmann::json to_json(const FoldDiagnostics& d);
nlohmann::json to_json(const EstimateReport& r);
nlohmann::json to_json(const AggregateReport& r);
nlohmann::json to_json(const CoverageSummary& s, bool include_records = false);

FoldDiagnostics fold_diagnostics_from_json(const nlohmann::json& j);
EstimateReport estimate_report_from_json(const nlohmann::json& j);
AggregateReport aggregate_report_from_json(const nlohmann::json& j);

/// One (score, method, K) cell of an estimate run.
struct EstimateEntry {
  ScoreKind score = ScoreKind::ATE;
  std::string method;
  std::size_t folds = 0;
  AggregateReport aggregate;
};

struct EstimateBundle {
  std::string schema_version = kSchemaVersion;
  /// Echo of the resolved configuration.
  nlohmann::json config = nlohmann::json::object();
  std::vector<EstimateEntry> entries;
};

nlohmann::json to_json(const EstimateBundle& b);
/// Throws InvalidArgument on a schema_version mismatch or missing fields.
EstimateBundle estimate_bundle_from_json(const nlohmann::json& j);

bool operator==(const FoldDiagnostics& a, const FoldDiagnostics& b);
bool operator==(const EstimateReport& a, const EstimateReport& b);
bool operator==(const AggregateReport& a, const AggregateReport& b);
bool operator==(const EstimateEntry& a, const EstimateEntry& b);
bool operator==(const EstimateBundle& a, const EstimateBundle& b);

}  // namespace dml
