#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lcmodel/error.hpp"
#include "lcmodel/pipeline.hpp"

using namespace lcmodel;
using namespace lcmodel::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lcmodel-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Ten curves; two of them (ids c3, c7) carry only four detections.
void write_ten_curves(const fs::path& csv, const fs::path& labels, double span) {
  std::ofstream out(csv), lab(labels);
  out << "id,jd,mag,magerr,censored\n";
  lab << "id,label\n";
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 0.1);
  for (int c = 0; c < 10; ++c) {
    const int n = (c == 3 || c == 7) ? 4 : 12;
    for (int i = 0; i < n; ++i) {
      out << 'c' << c << ',' << 53464.0 + span * i / (n - 1) << ',' << 17.0 + c * 0.1 + gauss(rng) << ",0.1,0\n";
    }
    out << 'c' << c << ',' << 53464.5 << ",20.5,,1\n";
    lab << 'c' << c << ',' << (c % 2 == 0 ? "non-transient" : "AGN") << '\n';
  }
}

int run_cli(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = std::string(LCMODEL_CLI_PATH) + " " + args + " >/dev/null 2>" + stderr_file.string();
  const int status = std::system(cmd.c_str());
  return status;
}

}  // namespace

TEST_CASE("ingest reports rejections and is idempotent") {
  const auto dir = scratch("ingest");
  write_ten_curves(dir / "in.csv", dir / "labels.csv", 100.0);
  RunConfig config;
  std::ostringstream log;
  cmd_ingest(dir / "in.csv", dir / "labels.csv", dir / "store", config, log);
  CHECK(log.str() == "accepted 8, rejected 2 (TooFewObservations)\n");
  const auto first = slurp(dir / "store" / "lightcurves.csv");
  std::ostringstream log2;
  cmd_ingest(dir / "in.csv", dir / "labels.csv", dir / "store", config, log2);
  CHECK(slurp(dir / "store" / "lightcurves.csv") == first);
  CHECK(read_store(dir / "store", config).size() == 8);
  CHECK(read_store(dir / "store", config).front().label == std::optional<std::string>("non-transient"));

  try {
    cmd_ingest(dir / "missing.csv", std::nullopt, dir / "store2", config, log);
    FAIL("expected FileNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("fit dumps record the prior branch and grid size") {
  for (const double span : {100.0, 800.0}) {
    const auto dir = scratch("fit" + std::to_string(static_cast<int>(span)));
    write_ten_curves(dir / "in.csv", dir / "labels.csv", span);
    RunConfig config;
    std::ostringstream log;
    cmd_ingest(dir / "in.csv", dir / "labels.csv", dir / "store", config, log);
    cmd_fit(dir / "store", dir / "fits", config, log);
    const auto text = slurp(dir / "fits" / "c0.csv");
    const auto curves = read_store(dir / "store", config);
    if (span < 365.0) {
      CHECK(text.find("prior_mean=20.5,") != std::string::npos);
    } else {
      std::vector<double> y;
      for (const auto& o : curves.front().obs) {
        if (!o.censored) y.push_back(o.y);
      }
      std::sort(y.begin(), y.end());
      const double med = 0.5 * (y[5] + y[6]);
      CHECK(text.find("prior_mean=" + format_double(med) + ",") != std::string::npos);
    }
    std::size_t lines = 0;
    for (const char c : text) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 2 + 300);
    CHECK(fs::exists(dir / "fits" / "hyper.txt"));
  }
}

TEST_CASE("config precedence and validation") {
  RunConfig config;
  apply_key_values(config, {{"seed", "9"}, {"scheme", "hier"}, {"feature_set", "richards"}, {"forest_trees", "25"}});
  CHECK(config.seed == 9);
  CHECK(config.split_seed() == 9);
  CHECK(config.model_seed() == 10);
  CHECK(config.simulate_seed() == 11);
  CHECK(config.scheme == classify::Scheme::Hierarchical);
  CHECK(config.feature_set == features::FeatureSet::Richards);
  CHECK(config.trainer.forest.trees == 25);
  CHECK_THROWS_AS(apply_key_values(config, {{"bogus", "1"}}), Error);
  CHECK_THROWS_AS(apply_key_values(config, {{"train_fraction", "1.5"}}), Error);
  CHECK_THROWS_AS(apply_key_values(config, {{"classifier", "svm"}}), Error);

  RunConfig round;
  apply_key_values(round, to_key_values(config));
  CHECK(to_key_values(round) == to_key_values(config));

  setenv("LCMODEL_SEED", "123", 1);
  const auto env = environment_overrides();
  unsetenv("LCMODEL_SEED");
  CHECK(env.at("seed") == "123");
}

TEST_CASE("simulate, features, train and evaluate are reproducible") {
  const auto dir = scratch("flow");
  RunConfig config;
  config.curves_per_kind = 15;
  config.trainer.forest.trees = 30;
  std::ostringstream log;
  cmd_simulate(dir / "sim", config, log);
  CHECK(fs::exists(dir / "sim" / "truth.csv"));
  cmd_ingest(dir / "sim" / "lightcurves.csv", dir / "sim" / "labels.csv", dir / "store", config, log);
  cmd_features(dir / "store", dir / "features.csv", config, log);
  CHECK(slurp(dir / "features.csv.meta").find("sigma_f2=") != std::string::npos);
  cmd_train(dir / "features.csv", dir / "model.json", config, log);

  std::ostringstream a, b;
  cmd_evaluate(dir / "features.csv", dir / "model.json", dir / "cm1.csv", config, a);
  cmd_train(dir / "features.csv", dir / "model2.json", config, log);
  cmd_evaluate(dir / "features.csv", dir / "model2.json", dir / "cm2.csv", config, b);
  CHECK(a.str() == b.str());
  CHECK(slurp(dir / "model.json") == slurp(dir / "model2.json"));
  CHECK(slurp(dir / "cm1.csv") == slurp(dir / "cm2.csv"));
  CHECK(a.str().rfind("all,forest,", 0) == 0);

  // Evaluating without a stored model trains the same thing from the config.
  std::ostringstream c;
  cmd_evaluate(dir / "features.csv", std::nullopt, std::nullopt, config, c);
  CHECK(c.str() == a.str());

  cmd_select(dir / "features.csv", dir / "trace.csv", config, log);
  const auto trace = slurp(dir / "trace.csv");
  std::size_t lines = 0;
  for (const char ch : trace) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 1 + 27);
}

TEST_CASE("separable binary evaluation reports accuracy 1 and stderr 0") {
  const auto dir = scratch("separable");
  {
    std::ofstream out(dir / "features.csv");
    out << "id,label,a,b\n";
    for (int i = 0; i < 60; ++i) {
      const bool nt = i % 2 == 0;
      out << "o" << i << ',' << (nt ? "non-transient" : "SNe") << ',' << (nt ? 0.0 : 10.0) + i * 0.01 << ',' << i << '\n';
    }
  }
  RunConfig config;
  config.scheme = classify::Scheme::TransientOrNot;
  config.trainer.forest.trees = 20;
  std::ostringstream log;
  cmd_evaluate(dir / "features.csv", std::nullopt, dir / "cm.csv", config, log);
  CHECK(log.str() == "binary,forest,1.000000,0.000000\n");
}

TEST_CASE("command line front end") {
  const auto dir = scratch("cli");
  const auto err = dir / "stderr.txt";
  CHECK(run_cli("ingest " + (dir / "nope.csv").string() + " -o " + (dir / "store").string(), err) != 0);
  const auto message = slurp(err);
  CHECK(message.rfind("error: FileNotFound: ", 0) == 0);
  CHECK(message.find("nope.csv") != std::string::npos);
  CHECK(std::count(message.begin(), message.end(), '\n') == 1);

  CHECK(run_cli("simulate -o " + (dir / "sim").string() + " --curves-per-kind 5 --seed 3", err) == 0);
  CHECK(run_cli("ingest " + (dir / "sim" / "lightcurves.csv").string() + " --labels " +
                    (dir / "sim" / "labels.csv").string() + " -o " + (dir / "store").string(),
                err) == 0);
  CHECK(run_cli("features " + (dir / "store").string() + " -o " + (dir / "f.csv").string() + " --feature-set richards", err) == 0);
  CHECK(slurp(dir / "f.csv").rfind("id,label,skew,", 0) == 0);
  CHECK(run_cli("evaluate " + (dir / "f.csv").string() + " --classifier lda --scheme binary", err) == 0);

  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "scheme=nonsense\n";
  }
  CHECK(run_cli("--config " + (dir / "run.cfg").string() + " evaluate " + (dir / "f.csv").string(), err) != 0);
  CHECK(slurp(err).rfind("error: InvalidConfig: ", 0) == 0);
  // Flags override the config file.
  CHECK(run_cli("--config " + (dir / "run.cfg").string() + " --scheme all --classifier tree evaluate " + (dir / "f.csv").string(),
                err) == 0);
}
