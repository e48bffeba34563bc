/**
 * @file pipeline.hpp
 * @brief Batch stages behind the `lcmodel` command line: ingest, fit, features,
 *        train, evaluate, select and simulate.
 *
 * Every stage is a pure function of its inputs, the RunConfig and the seed. One
 * run seed feeds the split (seed), the classifiers (seed + 1) and the simulator
 * (seed + 2).
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcmodel/classify/evaluation.hpp"
#include "lcmodel/core.hpp"
#include "lcmodel/error.hpp"
#include "lcmodel/features.hpp"
#include "lcmodel/gp.hpp"

namespace lcmodel::pipeline {

struct RunConfig {
  DatasetConfig dataset{};
  std::optional<std::filesystem::path> hyper_path;  ///< persisted hyperparameters; estimated when unset
  double length_scale = 140.0;
  gp::PriorMeanRule prior{};
  features::FeatureSet feature_set{features::FeatureSet::Full};
  features::GroupNormalization group_normalization{features::GroupNormalization::Observations};
  std::size_t grid_size = gp::kDefaultGridSize;
  classify::Scheme scheme{classify::Scheme::All};
  classify::ModelKind classifier{classify::ModelKind::Forest};
  classify::TrainerOptions trainer{};
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  int curves_per_kind = 500;

  [[nodiscard]] std::uint64_t split_seed() const noexcept { return seed; }
  [[nodiscard]] std::uint64_t model_seed() const noexcept { return seed + 1; }
  [[nodiscard]] std::uint64_t simulate_seed() const noexcept { return seed + 2; }

  [[nodiscard]] features::ExtractionOptions extraction() const;
};

/// Applies recognised keys; unknown keys raise InvalidConfig.
void apply_key_values(RunConfig& config, const KeyValues& kv);

/// Collects `LCMODEL_<KEY>` variables for every known key (KEY upper-cased).
[[nodiscard]] KeyValues environment_overrides();

[[nodiscard]] KeyValues to_key_values(const RunConfig& config);

/// Reads a key=value config file; throws FileNotFound naming the path.
[[nodiscard]] KeyValues read_config_file(const std::filesystem::path& path);

/**
 * @brief Validated lightcurves plus rejection bookkeeping.
 */
struct IngestResult {
  std::vector<Lightcurve> accepted;  ///< sorted by id
  std::vector<std::pair<std::string, ErrorCode>> rejected;

  /// e.g. "accepted 8, rejected 2 (TooFewObservations)".
  [[nodiscard]] std::string summary() const;
};

[[nodiscard]] IngestResult ingest(const std::filesystem::path& input, const std::optional<std::filesystem::path>& labels,
                                  const RunConfig& config);

/// Writes `lightcurves.csv`, `labels.csv` and `ingest_report.txt` into `store`.
void write_store(const std::filesystem::path& store, const IngestResult& result, const RunConfig& config);

/// Reads a store directory (or a bare lightcurve CSV with an optional sibling labels file).
[[nodiscard]] std::vector<Lightcurve> read_store(const std::filesystem::path& store, const RunConfig& config);

/// Hyperparameters from config.hyper_path, else estimated on the labelled curves.
[[nodiscard]] gp::GPHyperparameters resolve_hyperparameters(std::span<const Lightcurve> curves, const RunConfig& config);

// Stages --------------------------------------------------------------------

void cmd_ingest(const std::filesystem::path& input, const std::optional<std::filesystem::path>& labels,
                const std::filesystem::path& store, const RunConfig& config, std::ostream& log);

/// One `<id>.csv` dump per curve plus `hyper.txt` in `out_dir`.
void cmd_fit(const std::filesystem::path& store, const std::filesystem::path& out_dir, const RunConfig& config,
             std::ostream& log);

[[nodiscard]] std::vector<features::FeatureVector> extract_all(std::span<const Lightcurve> curves,
                                                               const gp::GPHyperparameters& h, const RunConfig& config);

/// Feature matrix at `out`, provenance at `out` + ".meta".
void cmd_features(const std::filesystem::path& store, const std::filesystem::path& out, const RunConfig& config,
                  std::ostream& log);

void cmd_train(const std::filesystem::path& features, const std::filesystem::path& model_out, const RunConfig& config,
               std::ostream& log);

struct EvaluationReport {
  classify::Scheme scheme{};
  classify::ModelKind kind{};
  classify::ConfusionMatrix confusion;

  /// `scheme,kind,accuracy,stderr`.
  [[nodiscard]] std::string summary_line() const;
};

/// Evaluates a stored scheme model, or trains one from `config` when `model` is unset.
[[nodiscard]] EvaluationReport evaluate(const classify::LabeledDataset& dataset,
                                        const std::optional<classify::StoredSchemeModel>& model,
                                        const RunConfig& config);

void cmd_evaluate(const std::filesystem::path& features, const std::optional<std::filesystem::path>& model,
                  const std::optional<std::filesystem::path>& confusion_out, const RunConfig& config, std::ostream& log);

void cmd_select(const std::filesystem::path& features, const std::filesystem::path& out, const RunConfig& config,
                std::ostream& log);

/// Benchmark dataset: `lightcurves.csv`, `labels.csv`, `truth.csv`.
void cmd_simulate(const std::filesystem::path& out_dir, const RunConfig& config, std::ostream& log);

[[nodiscard]] classify::LabeledDataset read_feature_dataset(const std::filesystem::path& path);

}  // namespace lcmodel::pipeline
