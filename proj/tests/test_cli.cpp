#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_config.hpp"
#include "commands.hpp"
#include "csv.hpp"
#include "dml/error.hpp"
#include "dml/report_io.hpp"
#include "dml/simulation.hpp"
#include "tables.hpp"

namespace fs = std::filesystem;
using namespace dml;
using namespace dml::cli;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dml_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

boost::property_tree::ptree config_from(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "c.cfg";
  write_text(path, text);
  return load_config(path.string());
}

std::string config_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("expected ConfigError");
  return "";
}

struct Run {
  int code;
  std::string output;
};

Run run_cli(const std::string& args, const fs::path& dir) {
  const char* cli = std::getenv("DML_CLI");
  REQUIRE(cli != nullptr);
  const fs::path log = dir / "cli.log";
  const std::string command = std::string("\"") + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(log)};
}

fs::path write_sample_csv(const fs::path& dir) {
  DgpSpec spec;
  spec.p = 3;
  spec.sparsity = 2;
  const SyntheticSample s = generate(spec, 400, 9);
  std::ostringstream out;
  out << "y,d,z1,z2,z3\n";
  for (Eigen::Index i = 0; i < 400; ++i) {
    out << format_exact(s.data.outcomes()[i]) << ',' << s.data.treatments()[i];
    for (Eigen::Index j = 0; j < 3; ++j) out << ',' << format_exact(s.data.covariates()(i, j));
    out << '\n';
  }
  const fs::path path = dir / "data.csv";
  write_text(path, out.str());
  return path;
}

}  // namespace

TEST_CASE("csv parser handles quotes, CRLF and blank lines") {
  const CsvTable t = parse_csv("a,\"b,c\",d\r\n1,\"x \"\"q\"\"\",3\r\n\r\n4,5,6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x \"q\"");
  CHECK(t.rows[1][2] == "6");
}

TEST_CASE("ragged csv rows report their line") {
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("dataset columns are resolved by name") {
  const CsvTable t = parse_csv("y,d,z\n1,0,5\n2,1,6\n3,1,7\n");
  const Dataset ds = dataset_from_csv(t, "y", "d", {});
  CHECK(ds.num_covariates() == 1);
  CHECK(ds.covariates()(2, 0) == 7.0);
  try {
    dataset_from_csv(t, "y", "treat", {});
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).find("treat") != std::string::npos);
  }
  try {
    dataset_from_csv(parse_csv("y,d\n1,0\nabc,1\n"), "y", "d", {});
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
  }
}

TEST_CASE("estimate config sections fill the options") {
  const fs::path dir = scratch_dir("config");
  EstimateOptions o;
  apply_estimate_config(config_from(dir, "[estimate]\nscore = ate,atte\nmethod = lasso,best\nfolds = 2,5\nsplits = 7\n"
                                         "trim = 0.05,0.95\n[random_forest]\ntrees = 50\n"
                                         "[best]\ncomponents = lasso,random_forest\n"),
                        o);
  CHECK(o.scores == std::vector<ScoreKind>{ScoreKind::ATE, ScoreKind::ATTE});
  CHECK(o.methods == std::vector<LearnerKind>{LearnerKind::Lasso, LearnerKind::Best});
  CHECK(o.folds == std::vector<std::size_t>{2, 5});
  CHECK(o.splits == 7);
  CHECK(o.trim_lo == 0.05);
  const LearnerSpec best = make_spec(LearnerKind::Best, Task::Probability, o.learners);
  REQUIRE(best.components.size() == 2);
  CHECK(best.components[1].kind == LearnerKind::RandomForest);
  CHECK(best.components[1].task == Task::Probability);
  CHECK(best.components[1].params.at("trees") == 50.0);
}

TEST_CASE("config errors name the offending key") {
  const fs::path dir = scratch_dir("config_errors");
  EstimateOptions o;
  CHECK(config_error([&] { apply_estimate_config(config_from(dir, "[estimate]\nsplitz = 3\n"), o); })
            .find("estimate.splitz") != std::string::npos);
  CHECK(config_error([&] { apply_estimate_config(config_from(dir, "[lasso]\nlamda = 3\n"), o); })
            .find("lasso.lamda") != std::string::npos);
  CHECK(config_error([&] { apply_estimate_config(config_from(dir, "[estimate]\nfolds = two\n"), o); })
            .find("estimate.folds") != std::string::npos);
  CHECK(config_error([&] { apply_estimate_config(config_from(dir, "[estmate]\nfolds = 2\n"), o); })
            .find("estmate") != std::string::npos);
  CHECK(config_error([&] { apply_estimate_config(config_from(dir, "[estimate]\ntrim = 0.9,0.1\n"), o); })
            .find("estimate.trim") != std::string::npos);
  CHECK(config_error([&] { apply_estimate_config(config_from(dir, "[random_forest]\ntrees = 0\n"), o); })
            .find("random_forest") != std::string::npos);
  SimulateOptions s;
  CHECK(config_error([&] { apply_simulate_config(config_from(dir, "[dgp]\nsparsty = 3\n"), s); })
            .find("dgp.sparsty") != std::string::npos);
}

TEST_CASE("shipped configs parse") {
  const char* dir = std::getenv("DML_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  EstimateOptions e;
  CHECK_NOTHROW(apply_estimate_config(load_config((fs::path(dir) / "default.cfg").string()), e));
  CHECK(e.splits == 100);
  CHECK(e.methods.size() == 6);
  for (const char* name : {"coverage_linear.cfg", "rate_oracle.cfg", "debias_contrast.cfg"}) {
    SimulateOptions s;
    CAPTURE(name);
    CHECK_NOTHROW(apply_simulate_config(load_config((fs::path(dir) / name).string()), s));
  }
}

TEST_CASE("value parsers") {
  CHECK(split_list(" a, b ,c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(parse_sizes("2,5", "k") == std::vector<std::size_t>{2, 5});
  CHECK(parse_trim("0.01,0.99", "k") == std::pair<double, double>{0.01, 0.99});
  CHECK(parse_u64("18446744073709551615", "k") == 18446744073709551615ULL);
  CHECK_THROWS_AS(parse_u64("-1", "k"), ConfigError);
  CHECK_THROWS_AS(parse_double("1.5x", "k"), ConfigError);
  CHECK(parse_methods("reg_tree,oracle_linear", "k") == std::vector<LearnerKind>{LearnerKind::RegTree, LearnerKind::OracleLinear});
}

TEST_CASE("exact number formatting round trips") {
  for (double v : {0.1, -1e-300, 3.0, 123456.789, 1.0 / 3.0}) CHECK(std::stod(format_exact(v)) == v);
}

TEST_CASE("estimate table mirrors the panel layout") {
  EstimateBundle b;
  AggregateReport agg;
  agg.mean_theta = 1.23456;
  agg.median_theta = 1.2;
  agg.sigma_mean = 0.5;
  agg.sigma_median = 0.25;
  b.entries.push_back({ScoreKind::ATE, "Lasso", 2, agg});
  b.entries.push_back({ScoreKind::PLM, "Lasso", 2, agg});
  const std::string table = format_estimate_table(b);
  CHECK(table.find("Interactive model, ATE") != std::string::npos);
  CHECK(table.find("Partially linear model") != std::string::npos);
  CHECK(table.find("Mean ATE") != std::string::npos);
  CHECK(table.find("1.235") != std::string::npos);
  CHECK(table.find("(0.500)") != std::string::npos);
  CHECK(table.find("(0.250)") != std::string::npos);
}

TEST_CASE("CLI happy path writes the report files") {
  const fs::path dir = scratch_dir("happy");
  const fs::path csv = write_sample_csv(dir);
  const Run r = run_cli("estimate --data " + csv.string() + " --outcome y --treatment d --score ate --method lasso --folds 5 "
                        "--splits 3 --trim 0.01,0.99 --alpha 0.05 --seed 42 --out " + (dir / "report").string(), dir);
  CHECK(r.code == kOk);
  CAPTURE(r.output);
  for (const char* f : {"report.json", "table.txt", "table.csv"}) CHECK(fs::exists(dir / "report" / f));
  const EstimateBundle b = estimate_bundle_from_json(nlohmann::json::parse(read_text(dir / "report" / "report.json")));
  REQUIRE(b.entries.size() == 1);
  CHECK(b.entries[0].aggregate.splits.size() == 3);
  CHECK(b.config.at("seed") == 42);
}

TEST_CASE("CLI with one split reports that split's sigma") {
  const fs::path dir = scratch_dir("single");
  const fs::path csv = write_sample_csv(dir);
  const Run r = run_cli("estimate --data " + csv.string() + " --outcome y --treatment d --method oracle_linear --splits 1 --out " +
                            (dir / "out").string(), dir);
  REQUIRE(r.code == kOk);
  const EstimateBundle b = estimate_bundle_from_json(nlohmann::json::parse(read_text(dir / "out" / "report.json")));
  const AggregateReport& agg = b.entries.at(0).aggregate;
  REQUIRE(agg.splits.size() == 1);
  CHECK(agg.sigma_mean == agg.splits[0].sigma_hat);
  CHECK(agg.mean_theta == agg.splits[0].theta_hat);
}

TEST_CASE("CLI exit codes distinguish data, config and usage errors") {
  const fs::path dir = scratch_dir("errors");
  const fs::path csv = write_sample_csv(dir);
  Run r = run_cli("estimate --data " + csv.string() + " --outcome y --treatment e401 --out " + dir.string(), dir);
  CHECK(r.code == kDataError);
  CHECK(r.output.find("e401") != std::string::npos);

  write_text(dir / "bad.cfg", "[estimate]\nspilts = 3\n");
  r = run_cli("estimate --config " + (dir / "bad.cfg").string() + " --data " + csv.string() +
                  " --outcome y --treatment d --out " + dir.string(), dir);
  CHECK(r.code == kConfigError);
  CHECK(r.output.find("estimate.spilts") != std::string::npos);

  write_text(dir / "sim.cfg", "[simulate]\nreps = 5\n[dgp]\nsparsty = 2\n");
  r = run_cli("simulate --config " + (dir / "sim.cfg").string() + " --out " + dir.string(), dir);
  CHECK(r.code == kConfigError);
  CHECK(r.output.find("dgp.sparsty") != std::string::npos);

  r = run_cli("estimate --data " + (dir / "missing.csv").string() + " --outcome y --treatment d --out " + dir.string(), dir);
  CHECK(r.code == kDataError);

  r = run_cli("frobnicate", dir);
  CHECK(r.code == kUsage);
}

TEST_CASE("CLI simulate writes replication rows and a summary") {
  const fs::path dir = scratch_dir("simulate");
  write_text(dir / "sim.cfg", "[simulate]\nexperiment = coverage\nn = 200\nreps = 10\nseed = 3\n[dgp]\np = 4\nsparsity = 2\n");
  const Run r = run_cli("simulate --config " + (dir / "sim.cfg").string() + " --out " + (dir / "o").string(), dir);
  CAPTURE(r.output);
  REQUIRE(r.code == kOk);
  const std::string reps = read_text(dir / "o" / "reps.csv");
  CHECK(std::count(reps.begin(), reps.end(), '\n') == 11);
  const nlohmann::json summary = nlohmann::json::parse(read_text(dir / "o" / "summary.json"));
  CHECK(summary.contains("schema_version"));
}
