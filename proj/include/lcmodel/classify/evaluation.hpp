/**
 * @file evaluation.hpp
 * @brief The four classification schemes, confusion matrices and Gini stepwise selection.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcmodel/classify/model.hpp"

namespace lcmodel::classify {

/// All = every class; TransientOrNot = binary; TransientOnly = non-transients removed;
/// Hierarchical = binary stage followed by a transient-only stage.
enum class Scheme { All, TransientOrNot, TransientOnly, Hierarchical };

inline constexpr std::string_view kTransient = "transient";

[[nodiscard]] std::string_view to_string(Scheme scheme) noexcept;
/// Accepts the CLI names all, binary, transient, hier.
[[nodiscard]] Scheme scheme_from(std::string_view name);

/// Rows are predicted classes, columns actual classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  [[nodiscard]] std::size_t total() const noexcept;
  [[nodiscard]] std::size_t correct() const noexcept;
  [[nodiscard]] double accuracy() const noexcept;
  /// sqrt(acc (1 - acc) / total).
  [[nodiscard]] double standard_error() const noexcept;
  [[nodiscard]] std::vector<std::size_t> column_sums() const;

  void add(std::string_view predicted, std::string_view actual);
};

[[nodiscard]] ConfusionMatrix make_confusion(std::vector<std::string> classes);

/// CSV with a `predicted\actual` corner cell; one row per predicted class.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

using Trainer = std::function<ClassifierModel(const LabeledDataset&)>;

struct TrainerOptions {
  TreeOptions tree{};
  ForestOptions forest{};
};

[[nodiscard]] Trainer make_trainer(ModelKind kind, const TrainerOptions& options, std::uint64_t seed);

/// A trained scheme: one model, or two for Hierarchical (stage 2 sees transients only).
struct SchemeModel {
  Scheme scheme{Scheme::All};
  ClassifierModel primary;
  std::optional<ClassifierModel> stage2;
};

/// Label space a scheme evaluates in (binary collapse, transient filter, or unchanged).
[[nodiscard]] LabeledDataset prepare_for_scheme(Scheme scheme, const LabeledDataset& ds);

/// Throws MissingClass when the scheme's required classes are absent.
[[nodiscard]] SchemeModel train_scheme(Scheme scheme, const LabeledDataset& train, const Trainer& trainer);

/// Hierarchical scheme with separately supplied stage trainers.
[[nodiscard]] SchemeModel train_hierarchical(const LabeledDataset& train, const Trainer& stage1, const Trainer& stage2);

[[nodiscard]] std::string predict(const SchemeModel& model, std::span<const double> features);

/// Confusion over the classes of train and test in the scheme's label space.
[[nodiscard]] ConfusionMatrix evaluate(const SchemeModel& model, const LabeledDataset& test,
                                       const std::vector<std::string>& extra_classes = {});

[[nodiscard]] ConfusionMatrix evaluate_scheme(Scheme scheme, const LabeledDataset& train, const LabeledDataset& test,
                                              const Trainer& trainer);

void write_scheme_model(std::ostream& out, const SchemeModel& model, std::uint64_t seed, double train_fraction);

struct StoredSchemeModel {
  SchemeModel model;
  std::uint64_t seed{};
  double train_fraction{};
};

[[nodiscard]] StoredSchemeModel read_scheme_model(std::istream& in);

struct SelectionStep {
  std::string removed;
  double train_accuracy{};
  double test_accuracy{};
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
};

/**
 * @brief Backward elimination by forest Gini importance.
 *
 * Each step removes the feature with the smallest mean Gini decrease in the
 * current forest (fitted on `train` only), refits on the reduced set and records
 * its train/test accuracy. Once no feature remains the model predicts the
 * majority training class. Forest seeds are derive_seed(seed, step).
 */
[[nodiscard]] SelectionTrace stepwise_selection(const LabeledDataset& train, const LabeledDataset& test,
                                                const ForestOptions& options, std::uint64_t seed);

void write_selection_csv(std::ostream& out, const SelectionTrace& trace);

}  // namespace lcmodel::classify
