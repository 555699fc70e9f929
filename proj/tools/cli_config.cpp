#include "cli_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <boost/property_tree/ini_parser.hpp>

#include "dml/error.hpp"

namespace dml::cli {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::size_t parse_size(const std::string& text, const std::string& where) {
  const std::uint64_t v = parse_u64(text, where);
  return static_cast<std::size_t>(v);
}

const std::vector<LearnerKind>& all_kinds() {
  static const std::vector<LearnerKind> kinds = {LearnerKind::Lasso,        LearnerKind::RegTree,
                                                 LearnerKind::RandomForest, LearnerKind::Boosting,
                                                 LearnerKind::Ensemble,     LearnerKind::Best,
                                                 LearnerKind::OracleLinear};
  return kinds;
}

bool is_learner_section(const std::string& name) {
  return std::any_of(all_kinds().begin(), all_kinds().end(),
                     [&](LearnerKind k) { return name == to_string(k); });
}

void apply_learner_section(const std::string& section, const pt::ptree& keys, LearnerSettings& settings) {
  const LearnerKind kind = learner_kind_from_string(section);
  const auto& known = known_hyperparameters(kind);
  const bool composite = kind == LearnerKind::Ensemble || kind == LearnerKind::Best;
  for (const auto& [key, node] : keys) {
    const std::string where = section + "." + key;
    const std::string value = node.get_value<std::string>();
    if (composite && key == "components") {
      std::vector<LearnerKind> comps = parse_methods(value, where);
      for (LearnerKind c : comps) {
        if (c == LearnerKind::Best || c == kind) throw ConfigError(where + ": component cannot be " + to_string(c));
      }
      settings.components[kind] = std::move(comps);
      continue;
    }
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + where + "'");
    }
    settings.params[kind][key] = parse_double(value, where);
  }
  LearnerSpec probe{kind, Task::Regression, settings.params[kind], {}};
  try {
    validate(probe);
  } catch (const Error& e) {
    throw ConfigError("invalid value in section [" + section + "]: " + e.what());
  }
}

template <typename Handler>
void for_each_key(const pt::ptree& section, const std::string& name, Handler&& handle) {
  for (const auto& [key, node] : section) {
    const std::string where = name + "." + key;
    if (!handle(key, trim(node.template get_value<std::string>()), where)) {
      throw ConfigError("unknown config key '" + where + "'");
    }
  }
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& where) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(where + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::vector<ScoreKind> parse_scores(const std::string& text, const std::string& where) {
  std::vector<ScoreKind> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(score_kind_from_string(item));
    } catch (const Error&) {
      throw ConfigError(where + ": unknown score '" + item + "' (expected ate, atte or plm)");
    }
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::vector<LearnerKind> parse_methods(const std::string& text, const std::string& where) {
  std::vector<LearnerKind> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(learner_kind_from_string(item));
    } catch (const Error&) {
      throw ConfigError(where + ": unknown method '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& where) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_size(item, where));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::pair<double, double> parse_trim(const std::string& text, const std::string& where) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw ConfigError(where + ": expected lo,hi");
  const double lo = parse_double(parts[0], where), hi = parse_double(parts[1], where);
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw ConfigError(where + ": need 0 < lo < hi < 1");
  return {lo, hi};
}

LearnerSpec make_spec(LearnerKind kind, Task task, const LearnerSettings& settings) {
  LearnerSpec spec{kind, task, {}, {}};
  if (auto it = settings.params.find(kind); it != settings.params.end()) spec.params = it->second;
  if (auto it = settings.components.find(kind); it != settings.components.end()) {
    for (LearnerKind c : it->second) spec.components.push_back(make_spec(c, task, settings));
  }
  return spec;
}

boost::property_tree::ptree load_config(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  return tree;
}

void apply_estimate_config(const boost::property_tree::ptree& tree, EstimateOptions& o) {
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) throw ConfigError("unknown config key '" + section + "' outside a section");
    if (is_learner_section(section)) {
      apply_learner_section(section, keys, o.learners);
      continue;
    }
    if (section != "estimate") throw ConfigError("unknown config section '[" + section + "]'");
    for_each_key(keys, section, [&](const std::string& key, const std::string& v, const std::string& where) {
      if (key == "data") o.data = v;
      else if (key == "outcome") o.outcome = v;
      else if (key == "treatment") o.treatment = v;
      else if (key == "covariates") o.covariates = split_list(v);
      else if (key == "score") o.scores = parse_scores(v, where);
      else if (key == "method") o.methods = parse_methods(v, where);
      else if (key == "folds") o.folds = parse_sizes(v, where);
      else if (key == "splits") o.splits = parse_size(v, where);
      else if (key == "trim") std::tie(o.trim_lo, o.trim_hi) = parse_trim(v, where);
      else if (key == "alpha") o.alpha = parse_double(v, where);
      else if (key == "seed") o.seed = parse_u64(v, where);
      else if (key == "workers") o.workers = parse_size(v, where);
      else if (key == "out") o.out = v;
      else return false;
      return true;
    });
  }
}

void apply_simulate_config(const boost::property_tree::ptree& tree, SimulateOptions& o) {
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) throw ConfigError("unknown config key '" + section + "' outside a section");
    if (is_learner_section(section)) {
      apply_learner_section(section, keys, o.learners);
      continue;
    }
    if (section == "simulate") {
      for_each_key(keys, section, [&](const std::string& key, const std::string& v, const std::string& where) {
        if (key == "experiment") {
          if (v == "coverage") o.experiment = ExperimentKind::Coverage;
          else if (v == "rate") o.experiment = ExperimentKind::Rate;
          else throw ConfigError(where + ": expected coverage or rate");
        } else if (key == "n") o.n_grid = parse_sizes(v, where);
        else if (key == "reps") o.reps = parse_size(v, where);
        else if (key == "score") {
          const auto scores = parse_scores(v, where);
          if (scores.size() != 1) throw ConfigError(where + ": expected a single score");
          o.score = scores.front();
        } else if (key == "method") {
          const auto m = parse_methods(v, where);
          if (m.size() != 1) throw ConfigError(where + ": expected a single method");
          o.method_g = o.method_m = m.front();
        } else if (key == "method_g") o.method_g = parse_methods(v, where).front();
        else if (key == "method_m") o.method_m = parse_methods(v, where).front();
        else if (key == "mode") {
          try {
            o.mode = nuisance_mode_from_string(v);
          } catch (const Error&) {
            throw ConfigError(where + ": expected learned, oracle or true_propensity");
          }
        } else if (key == "folds") o.folds = parse_size(v, where);
        else if (key == "trim") std::tie(o.trim_lo, o.trim_hi) = parse_trim(v, where);
        else if (key == "alpha") o.alpha = parse_double(v, where);
        else if (key == "seed") o.seed = parse_u64(v, where);
        else if (key == "workers") o.workers = parse_size(v, where);
        else if (key == "out") o.out = v;
        else return false;
        return true;
      });
    } else if (section == "dgp") {
      DgpSpec& g = o.dgp;
      for_each_key(keys, section, [&](const std::string& key, const std::string& v, const std::string& where) {
        if (key == "p") g.p = parse_size(v, where);
        else if (key == "form") {
          try {
            g.form = dgp_form_from_string(v);
          } catch (const Error&) {
            throw ConfigError(where + ": expected linear or nonlinear");
          }
        } else if (key == "sparsity") g.sparsity = parse_size(v, where);
        else if (key == "confounders") g.confounders = parse_size(v, where);
        else if (key == "confounder_scale") g.confounder_scale = parse_double(v, where);
        else if (key == "outcome_scale") g.outcome_scale = parse_double(v, where);
        else if (key == "propensity_scale") g.propensity_scale = parse_double(v, where);
        else if (key == "effect") g.effect = parse_double(v, where);
        else if (key == "effect_heterogeneity") g.effect_heterogeneity = parse_double(v, where);
        else if (key == "propensity_eps") {
          g.propensity_lo = parse_double(v, where);
          g.propensity_hi = 1.0 - g.propensity_lo;
        } else if (key == "noise_sd") g.noise_sd = parse_double(v, where);
        else if (key == "correlation") g.correlation = parse_double(v, where);
        else if (key == "seed") g.seed = parse_u64(v, where);
        else return false;
        return true;
      });
    } else {
      throw ConfigError("unknown config section '[" + section + "]'");
    }
  }
}

}  // namespace dml::cli
