// lcmodel command-line front end.
//
// Settings resolve as: built-in defaults < --config file < LCMODEL_* environment < flags.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "lcmodel/error.hpp"
#include "lcmodel/pipeline.hpp"

namespace fs = std::filesystem;
using lcmodel::pipeline::RunConfig;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string feature_set;
  std::string scheme;
  std::string classifier;
  std::string hyper;
};

RunConfig resolve_config(const GlobalFlags& flags) {
  // Later layers replace earlier keys; the merged set is validated once.
  lcmodel::KeyValues kv;
  if (!flags.config_path.empty()) kv = lcmodel::pipeline::read_config_file(flags.config_path);
  for (auto& [key, value] : lcmodel::pipeline::environment_overrides()) kv[key] = value;
  if (flags.seed) kv["seed"] = std::to_string(*flags.seed);
  if (flags.workers) kv["workers"] = std::to_string(*flags.workers);
  if (!flags.feature_set.empty()) kv["feature_set"] = flags.feature_set;
  if (!flags.scheme.empty()) kv["scheme"] = flags.scheme;
  if (!flags.classifier.empty()) kv["classifier"] = flags.classifier;
  if (!flags.hyper.empty()) kv["hyper"] = flags.hyper;
  RunConfig config;
  lcmodel::pipeline::apply_key_values(config, kv);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process lightcurve measures and classification"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "key=value configuration file");
  app.add_option("--seed", flags.seed, "run seed (split = seed, model = seed+1, simulate = seed+2)");
  app.add_option("--workers", flags.workers, "worker threads (0 = hardware concurrency)");
  app.add_option("--feature-set", flags.feature_set, "feature tag")->check(CLI::IsMember({"richards", "full"}));
  app.add_option("--scheme", flags.scheme, "classification scheme")->check(CLI::IsMember({"all", "binary", "transient", "hier"}));
  app.add_option("--classifier", flags.classifier, "classifier kind")->check(CLI::IsMember({"lda", "tree", "forest"}));
  app.add_option("--hyper", flags.hyper, "persisted GP hyperparameters (estimated from the store when absent)");

  std::string input, output, labels, model, confusion;
  int curves_per_kind = 0;

  auto* ingest = app.add_subcommand("ingest", "validate a lightcurve CSV into a store directory");
  ingest->add_option("input", input, "lightcurve CSV (id,jd,mag,magerr,censored)")->required();
  ingest->add_option("--labels", labels, "label CSV (id,label)");
  ingest->add_option("-o,--output", output, "store directory")->required();

  auto* fit = app.add_subcommand("fit", "dump GP posterior fits per curve");
  fit->add_option("store", input, "store directory or lightcurve CSV")->required();
  fit->add_option("-o,--output", output, "output directory")->required();

  auto* features = app.add_subcommand("features", "extract the feature matrix");
  features->add_option("store", input, "store directory or lightcurve CSV")->required();
  features->add_option("-o,--output", output, "feature CSV")->required();

  auto* train = app.add_subcommand("train", "train a scheme model on the training split");
  train->add_option("features", input, "feature CSV")->required();
  train->add_option("-o,--output", output, "model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "report test-split accuracy and the confusion matrix");
  evaluate->add_option("features", input, "feature CSV")->required();
  evaluate->add_option("--model", model, "stored model (trained from the config when absent)");
  evaluate->add_option("--confusion", confusion, "confusion matrix CSV");

  auto* select = app.add_subcommand("select", "stepwise Gini-importance feature elimination");
  select->add_option("features", input, "feature CSV")->required();
  select->add_option("-o,--output", output, "selection trace CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "write the synthetic benchmark");
  simulate->add_option("-o,--output", output, "output directory")->required();
  simulate->add_option("--curves-per-kind", curves_per_kind, "curves per kind")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = resolve_config(flags);
    auto& log = std::cout;
    const auto optional_path = [](const std::string& p) { return p.empty() ? std::nullopt : std::optional<fs::path>(p); };
    if (*ingest) {
      lcmodel::pipeline::cmd_ingest(input, optional_path(labels), output, config, log);
    } else if (*fit) {
      lcmodel::pipeline::cmd_fit(input, output, config, log);
    } else if (*features) {
      lcmodel::pipeline::cmd_features(input, output, config, log);
    } else if (*train) {
      lcmodel::pipeline::cmd_train(input, output, config, log);
    } else if (*evaluate) {
      lcmodel::pipeline::cmd_evaluate(input, optional_path(model), optional_path(confusion), config, log);
    } else if (*select) {
      lcmodel::pipeline::cmd_select(input, output, config, log);
    } else if (*simulate) {
      if (curves_per_kind > 0) config.curves_per_kind = curves_per_kind;
      lcmodel::pipeline::cmd_simulate(output, config, log);
    }
  } catch (const lcmodel::Error& e) {
    std::cerr << "error: " << lcmodel::to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: IoFailure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
