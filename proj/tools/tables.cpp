#include "tables.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

namespace dml::cli {
namespace {

constexpr int kLabelWidth = 14;
constexpr int kColumnWidth = 15;

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad_left(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? " " + s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? s : s + std::string(width - s.size(), ' ');
}

std::string panel_title(ScoreKind score) {
  switch (score) {
    case ScoreKind::ATE: return "Interactive model, ATE";
    case ScoreKind::ATTE: return "Interactive model, ATTE";
    case ScoreKind::PLM: return "Partially linear model";
  }
  return "";
}

std::string estimand(ScoreKind score) { return score == ScoreKind::ATTE ? "ATTE" : "ATE"; }

}  // namespace

std::string format_exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string format_estimate_table(const EstimateBundle& bundle) {
  // Keyed by (score, K) in first-appearance order; methods keep their order too.
  std::vector<std::pair<ScoreKind, std::size_t>> panels;
  std::map<std::pair<ScoreKind, std::size_t>, std::vector<const EstimateEntry*>> cells;
  for (const auto& e : bundle.entries) {
    const auto key = std::make_pair(e.score, e.folds);
    if (!cells.count(key)) panels.push_back(key);
    cells[key].push_back(&e);
  }
  std::ostringstream out;
  bool first = true;
  for (const auto& key : panels) {
    const auto& entries = cells[key];
    if (!first) out << "\n";
    first = false;
    const std::size_t splits = entries.front()->aggregate.splits.size();
    out << panel_title(key.first) << ", " << key.second << "-fold cross-fitting, " << splits
        << (splits == 1 ? " split\n" : " splits\n");
    out << pad_right("", kLabelWidth);
    for (const auto* e : entries) out << pad_left(e->method, kColumnWidth);
    out << "\n";
    const auto row = [&](const std::string& label, auto value, bool parens) {
      out << pad_right(label, kLabelWidth);
      for (const auto* e : entries) {
        const std::string v = fixed(value(e->aggregate));
        out << pad_left(parens ? "(" + v + ")" : v, kColumnWidth);
      }
      out << "\n";
    };
    const std::string name = estimand(key.first);
    row("Mean " + name, [](const AggregateReport& a) { return a.mean_theta; }, false);
    row("", [](const AggregateReport& a) { return a.sigma_mean; }, true);
    row("Median " + name, [](const AggregateReport& a) { return a.median_theta; }, false);
    row("", [](const AggregateReport& a) { return a.sigma_median; }, true);
  }
  return out.str();
}

std::string format_estimate_csv(const EstimateBundle& bundle) {
  std::ostringstream out;
  out << "score,method,folds,splits,n_obs,mean_theta,sigma_mean,median_theta,sigma_median\n";
  for (const auto& e : bundle.entries) {
    const auto& a = e.aggregate;
    out << to_string(e.score) << ',' << e.method << ',' << e.folds << ',' << a.splits.size() << ','
        << (a.splits.empty() ? 0 : a.splits.front().n_obs) << ',' << format_exact(a.mean_theta) << ','
        << format_exact(a.sigma_mean) << ',' << format_exact(a.median_theta) << ','
        << format_exact(a.sigma_median) << '\n';
  }
  return out.str();
}

std::string format_reps_csv(const std::vector<CoverageSummary>& rows) {
  std::ostringstream out;
  out << "n,rep,theta_hat,sigma_hat,ci_lo,ci_hi,covered,naive_theta,naive_covered,n_trimmed\n";
  for (const auto& s : rows) {
    for (const auto& r : s.records) {
      out << s.n << ',' << r.rep << ',' << format_exact(r.theta_hat) << ',' << format_exact(r.sigma_hat) << ','
          << format_exact(r.ci_lo) << ',' << format_exact(r.ci_hi) << ',' << (r.covered ? 1 : 0) << ','
          << format_exact(r.naive_theta) << ',' << (r.naive_covered ? 1 : 0) << ',' << r.n_trimmed << '\n';
    }
  }
  return out.str();
}

}  // namespace dml::cli
