#include "lcmodel/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "lcmodel/error.hpp"
#include "lcmodel/parallel.hpp"
#include "lcmodel/synth.hpp"

namespace lcmodel::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::array kKnownKeys = {
    "zero_point",   "detection_limit", "grouping_gap",  "min_observations", "hyper",           "length_scale",
    "span_threshold", "grid_size",     "feature_set",   "group_normalization", "scheme",       "classifier",
    "train_fraction", "seed",          "workers",       "forest_trees",     "forest_mtry",     "forest_min_leaf",
    "tree_min_leaf", "tree_max_depth", "curves_per_kind",
};

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  const auto v = parse_double(value);
  if (!v) throw Error(ErrorCode::InvalidConfig, key + ": not a number '" + value + "'");
  return *v;
}

long long to_integer(const std::string& key, const std::string& value, long long min) {
  const auto v = parse_integer(value);
  if (!v || *v < min) throw Error(ErrorCode::InvalidConfig, key + ": expected an integer >= " + std::to_string(min));
  return *v;
}

std::string file_name_for(const std::string& id) {
  std::string out;
  for (const char c : id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+';
    out += safe ? c : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
  return out;
}

}  // namespace

features::ExtractionOptions RunConfig::extraction() const {
  features::ExtractionOptions options;
  options.tag = feature_set;
  options.norm = group_normalization;
  options.prior = prior;
  options.grid_size = grid_size;
  options.grouping_gap = dataset.grouping_gap;
  return options;
}

void apply_key_values(RunConfig& target, const KeyValues& kv) {
  RunConfig config = target;  // left untouched when validation fails
  KeyValues dataset_keys;
  for (const auto& [key, value] : kv) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
    if (key == "zero_point" || key == "grouping_gap" || key == "min_observations") {
      dataset_keys[key] = value;
    } else if (key == "detection_limit") {
      dataset_keys[key] = value;
      config.prior.detection_limit = to_double(key, value);
    } else if (key == "hyper") {
      config.hyper_path = value;
    } else if (key == "length_scale") {
      config.length_scale = to_double(key, value);
    } else if (key == "span_threshold") {
      config.prior.span_threshold = to_double(key, value);
    } else if (key == "grid_size") {
      config.grid_size = static_cast<std::size_t>(to_integer(key, value, 3));
    } else if (key == "feature_set") {
      config.feature_set = features::feature_set_from(value);
    } else if (key == "group_normalization") {
      config.group_normalization = features::group_normalization_from(value);
    } else if (key == "scheme") {
      config.scheme = classify::scheme_from(value);
    } else if (key == "classifier") {
      config.classifier = classify::model_kind_from(value);
    } else if (key == "train_fraction") {
      config.train_fraction = to_double(key, value);
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(to_integer(key, value, 0));
    } else if (key == "workers") {
      config.workers = static_cast<unsigned>(to_integer(key, value, 0));
    } else if (key == "forest_trees") {
      config.trainer.forest.trees = static_cast<std::size_t>(to_integer(key, value, 1));
    } else if (key == "forest_mtry") {
      config.trainer.forest.mtry = static_cast<std::size_t>(to_integer(key, value, 0));
    } else if (key == "forest_min_leaf") {
      config.trainer.forest.min_leaf = static_cast<std::size_t>(to_integer(key, value, 1));
    } else if (key == "tree_min_leaf") {
      config.trainer.tree.min_leaf = static_cast<std::size_t>(to_integer(key, value, 1));
    } else if (key == "tree_max_depth") {
      config.trainer.tree.max_depth = static_cast<std::size_t>(to_integer(key, value, 1));
    } else if (key == "curves_per_kind") {
      config.curves_per_kind = static_cast<int>(to_integer(key, value, 1));
    }
  }
  lcmodel::apply_key_values(config.dataset, dataset_keys);
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_fraction must lie strictly between 0 and 1");
  }
  if (!(config.length_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "length_scale must be positive");
  if (!(config.prior.span_threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "span_threshold must be positive");
  config.trainer.forest.workers = config.workers;
  target = std::move(config);
}

KeyValues environment_overrides() {
  KeyValues kv;
  for (const std::string key : kKnownKeys) {
    std::string var = "LCMODEL_";
    for (const char c : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* value = std::getenv(var.c_str())) kv[key] = value;
  }
  return kv;
}

KeyValues to_key_values(const RunConfig& config) {
  auto kv = lcmodel::to_key_values(config.dataset);
  if (config.hyper_path) kv["hyper"] = config.hyper_path->string();
  kv["length_scale"] = format_double(config.length_scale);
  kv["span_threshold"] = format_double(config.prior.span_threshold);
  kv["grid_size"] = std::to_string(config.grid_size);
  kv["feature_set"] = std::string(features::to_string(config.feature_set));
  kv["group_normalization"] = std::string(features::to_string(config.group_normalization));
  kv["scheme"] = std::string(classify::to_string(config.scheme));
  kv["classifier"] = std::string(classify::to_string(config.classifier));
  kv["train_fraction"] = format_double(config.train_fraction);
  kv["seed"] = std::to_string(config.seed);
  kv["workers"] = std::to_string(config.workers);
  kv["forest_trees"] = std::to_string(config.trainer.forest.trees);
  kv["forest_mtry"] = std::to_string(config.trainer.forest.mtry);
  kv["forest_min_leaf"] = std::to_string(config.trainer.forest.min_leaf);
  kv["tree_min_leaf"] = std::to_string(config.trainer.tree.min_leaf);
  kv["tree_max_depth"] = std::to_string(config.trainer.tree.max_depth);
  kv["curves_per_kind"] = std::to_string(config.curves_per_kind);
  return kv;
}

KeyValues read_config_file(const fs::path& path) {
  auto in = open_input(path);
  return parse_key_values(in);
}

std::string IngestResult::summary() const {
  std::ostringstream out;
  out << "accepted " << accepted.size() << ", rejected " << rejected.size();
  if (!rejected.empty()) {
    std::map<std::string_view, std::size_t> reasons;
    for (const auto& [id, code] : rejected) ++reasons[to_string(code)];
    out << " (";
    bool first = true;
    for (const auto& [reason, count] : reasons) {
      if (!first) out << ", ";
      out << reason;
      if (reasons.size() > 1) out << ": " << count;
      first = false;
    }
    out << ')';
  }
  return out.str();
}

IngestResult ingest(const fs::path& input, const std::optional<fs::path>& labels, const RunConfig& config) {
  auto in = open_input(input);
  auto curves = parse_lightcurve_csv(in, config.dataset);
  if (labels) {
    auto label_in = open_input(*labels);
    attach_labels(curves, parse_label_csv(label_in));
  }
  std::sort(curves.begin(), curves.end(), [](const Lightcurve& a, const Lightcurve& b) { return a.id < b.id; });
  IngestResult result;
  for (auto& lc : curves) {
    try {
      (void)validate(lc, config.dataset);
      result.accepted.push_back(std::move(lc));
    } catch (const Error& e) {
      result.rejected.emplace_back(lc.id, e.code());
    }
  }
  return result;
}

void write_store(const fs::path& store, const IngestResult& result, const RunConfig& config) {
  fs::create_directories(store);
  {
    auto out = open_output(store / "lightcurves.csv");
    write_lightcurve_csv(out, result.accepted, config.dataset);
  }
  {
    auto out = open_output(store / "labels.csv");
    write_label_csv(out, result.accepted);
  }
  auto report = open_output(store / "ingest_report.txt");
  report << result.summary() << '\n';
  for (const auto& [id, code] : result.rejected) report << "rejected " << id << ' ' << to_string(code) << '\n';
}

std::vector<Lightcurve> read_store(const fs::path& store, const RunConfig& config) {
  const bool is_dir = fs::is_directory(store);
  const auto data = is_dir ? store / "lightcurves.csv" : store;
  const auto labels = is_dir ? store / "labels.csv" : store.parent_path() / "labels.csv";
  auto in = open_input(data);
  auto curves = parse_lightcurve_csv(in, config.dataset);
  if (fs::exists(labels)) {
    auto label_in = open_input(labels);
    attach_labels(curves, parse_label_csv(label_in));
  }
  std::sort(curves.begin(), curves.end(), [](const Lightcurve& a, const Lightcurve& b) { return a.id < b.id; });
  for (const auto& lc : curves) (void)validate(lc, config.dataset);
  return curves;
}

gp::GPHyperparameters resolve_hyperparameters(std::span<const Lightcurve> curves, const RunConfig& config) {
  if (config.hyper_path) {
    auto in = open_input(*config.hyper_path);
    return gp::hyperparameters_from(parse_key_values(in));
  }
  return gp::estimate_hyperparameters(curves, config.length_scale);
}

void cmd_ingest(const fs::path& input, const std::optional<fs::path>& labels, const fs::path& store,
                const RunConfig& config, std::ostream& log) {
  const auto result = ingest(input, labels, config);
  write_store(store, result, config);
  log << result.summary() << '\n';
}

void cmd_fit(const fs::path& store, const fs::path& out_dir, const RunConfig& config, std::ostream& log) {
  const auto curves = read_store(store, config);
  const auto h = resolve_hyperparameters(curves, config);
  fs::create_directories(out_dir);
  std::vector<std::string> dumps(curves.size());
  parallel_for(curves.size(), config.workers, [&](std::size_t i) {
    const auto fit = gp::fit_posterior(curves[i], h, config.prior, config.grid_size);
    std::ostringstream out;
    gp::write_fit_csv(out, curves[i].id, fit);
    dumps[i] = out.str();
  });
  for (std::size_t i = 0; i < curves.size(); ++i) {
    auto out = open_output(out_dir / (file_name_for(curves[i].id) + ".csv"));
    out << dumps[i];
  }
  {
    auto out = open_output(out_dir / "hyper.txt");
    write_key_values(out, gp::to_key_values(h));
  }
  log << "fitted " << curves.size() << " curves\n";
}

std::vector<features::FeatureVector> extract_all(std::span<const Lightcurve> curves, const gp::GPHyperparameters& h,
                                                 const RunConfig& config) {
  std::vector<features::FeatureVector> vectors(curves.size());
  const auto options = config.extraction();
  parallel_for(curves.size(), config.workers, [&](std::size_t i) { vectors[i] = features::extract(curves[i], h, options); });
  return vectors;
}

void cmd_features(const fs::path& store, const fs::path& out, const RunConfig& config, std::ostream& log) {
  const auto curves = read_store(store, config);
  const auto h = resolve_hyperparameters(curves, config);
  const auto vectors = extract_all(curves, h, config);
  {
    auto file = open_output(out);
    features::write_feature_csv(file, vectors);
  }
  auto meta = open_output(fs::path(out.string() + ".meta"));
  features::write_feature_sidecar(meta, config.extraction(), h);
  log << "wrote " << vectors.size() << " feature vectors (" << features::to_string(config.feature_set) << ")\n";
}

classify::LabeledDataset read_feature_dataset(const fs::path& path) {
  auto in = open_input(path);
  return classify::from_table(features::read_feature_csv(in));
}

void cmd_train(const fs::path& features, const fs::path& model_out, const RunConfig& config, std::ostream& log) {
  const auto dataset = read_feature_dataset(features);
  const auto [train, test] = classify::split_train_test(dataset, config.train_fraction, config.split_seed());
  const auto trainer = classify::make_trainer(config.classifier, config.trainer, config.model_seed());
  const auto model = classify::train_scheme(config.scheme, train, trainer);
  auto out = open_output(model_out);
  classify::write_scheme_model(out, model, config.seed, config.train_fraction);
  log << "trained " << classify::to_string(config.scheme) << ' ' << classify::to_string(config.classifier) << " on "
      << train.size() << " rows\n";
}

std::string EvaluationReport::summary_line() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << classify::to_string(scheme) << ',' << classify::to_string(kind) << ',' << confusion.accuracy() << ','
      << confusion.standard_error();
  return out.str();
}

EvaluationReport evaluate(const classify::LabeledDataset& dataset, const std::optional<classify::StoredSchemeModel>& model,
                          const RunConfig& config) {
  EvaluationReport report;
  if (model) {
    const auto [train, test] = classify::split_train_test(dataset, model->train_fraction, model->seed);
    report.scheme = model->model.scheme;
    report.kind = model->model.primary.kind;
    report.confusion = classify::evaluate(model->model, test, classify::prepare_for_scheme(report.scheme, train).class_names);
    return report;
  }
  const auto [train, test] = classify::split_train_test(dataset, config.train_fraction, config.split_seed());
  const auto trainer = classify::make_trainer(config.classifier, config.trainer, config.model_seed());
  report.scheme = config.scheme;
  report.kind = config.classifier;
  report.confusion = classify::evaluate_scheme(config.scheme, train, test, trainer);
  return report;
}

void cmd_evaluate(const fs::path& features, const std::optional<fs::path>& model, const std::optional<fs::path>& confusion_out,
                  const RunConfig& config, std::ostream& log) {
  const auto dataset = read_feature_dataset(features);
  std::optional<classify::StoredSchemeModel> stored;
  if (model) {
    auto in = open_input(*model);
    stored = classify::read_scheme_model(in);
  }
  const auto report = evaluate(dataset, stored, config);
  if (confusion_out) {
    auto out = open_output(*confusion_out);
    classify::write_confusion_csv(out, report.confusion);
  }
  log << report.summary_line() << '\n';
}

void cmd_select(const fs::path& features, const fs::path& out, const RunConfig& config, std::ostream& log) {
  const auto dataset = read_feature_dataset(features);
  const auto [train, test] = classify::split_train_test(dataset, config.train_fraction, config.split_seed());
  const auto trace = classify::stepwise_selection(train, test, config.trainer.forest, config.model_seed());
  auto file = open_output(out);
  classify::write_selection_csv(file, trace);
  log << "selection trace with " << trace.steps.size() << " steps\n";
}

void cmd_simulate(const fs::path& out_dir, const RunConfig& config, std::ostream& log) {
  synth::BenchmarkSpec spec;
  spec.curves_per_kind = config.curves_per_kind;
  spec.detection_limit = config.dataset.detection_limit;
  spec.min_observations = config.dataset.min_observations;
  const auto curves = synth::generate_benchmark(spec, config.simulate_seed());
  std::vector<Lightcurve> lcs;
  lcs.reserve(curves.size());
  for (const auto& c : curves) lcs.push_back(c.curve);
  fs::create_directories(out_dir);
  {
    auto out = open_output(out_dir / "lightcurves.csv");
    write_lightcurve_csv(out, lcs, config.dataset);
  }
  {
    auto out = open_output(out_dir / "labels.csv");
    write_label_csv(out, lcs);
  }
  {
    auto out = open_output(out_dir / "truth.csv");
    synth::write_truth_csv(out, curves);
  }
  log << "simulated " << curves.size() << " curves\n";
}

}  // namespace lcmodel::pipeline
