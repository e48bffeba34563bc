/**
 * @file model.hpp
 * @brief Linear discriminant analysis, CART and random-forest classifiers.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lcmodel/classify/dataset.hpp"

namespace lcmodel::classify {

enum class ModelKind { Lda, Tree, Forest };

[[nodiscard]] std::string_view to_string(ModelKind kind) noexcept;
[[nodiscard]] ModelKind model_kind_from(std::string_view name);

/// Discriminants are linear in standardised features z = (x - center) / scale.
struct LdaParameters {
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<std::vector<double>> coefficients;  ///< one row per class
  std::vector<double> intercepts;
};

struct TreeNode {
  int feature = -1;            ///< -1 for a leaf
  double threshold{};          ///< rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  std::vector<double> class_counts;
  int prediction{};
};

struct TreeParameters {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root
};

struct ForestParameters {
  std::vector<TreeParameters> trees;
  std::vector<double> importance;  ///< mean decrease in Gini per feature, averaged over trees
};

struct ClassifierModel {
  ModelKind kind{ModelKind::Tree};
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::variant<LdaParameters, TreeParameters, ForestParameters> parameters;
};

struct TreeOptions {
  std::size_t min_leaf = 5;
  std::size_t max_depth = 30;
  /// Features tried per split; 0 tries every feature.
  std::size_t mtry = 0;
};

struct ForestOptions {
  std::size_t trees = 500;
  /// 0 selects floor(sqrt(p)).
  std::size_t mtry = 0;
  std::size_t min_leaf = 1;
  std::size_t max_depth = 1000;
  unsigned workers = 0;
};

/// Throws SingleClass or SingularCovariance (after a 1e-8 ridge).
[[nodiscard]] ClassifierModel train_lda(const LabeledDataset& train);

/// Deterministic unless options.mtry > 0, in which case `seed` drives the feature draws.
[[nodiscard]] ClassifierModel train_tree(const LabeledDataset& train, const TreeOptions& options = {},
                                         std::uint64_t seed = 0);

[[nodiscard]] ClassifierModel train_forest(const LabeledDataset& train, const ForestOptions& options,
                                           std::uint64_t seed);

/// One-leaf tree that always predicts `class_name`.
[[nodiscard]] ClassifierModel constant_model(std::vector<std::string> feature_names, std::vector<std::string> class_names,
                                             const std::string& class_name);

/// Class index into model.class_names. Throws DimensionMismatch.
[[nodiscard]] int predict_index(const ClassifierModel& model, std::span<const double> features);

[[nodiscard]] const std::string& predict(const ClassifierModel& model, std::span<const double> features);

/// Forest vote shares (or a one-hot vector for the other kinds), aligned with class_names.
[[nodiscard]] std::vector<double> predict_shares(const ClassifierModel& model, std::span<const double> features);

/// Per-feature mean Gini decrease; throws InvalidConfig unless the model is a forest.
[[nodiscard]] const std::vector<double>& gini_importance(const ClassifierModel& model);

/// Fraction of rows of `ds` whose label the model reproduces. Columns are matched by name.
[[nodiscard]] double accuracy(const ClassifierModel& model, const LabeledDataset& ds);

/// Gini impurity 1 - sum p_i^2 of a count vector.
[[nodiscard]] double gini_impurity(std::span<const double> counts) noexcept;

/// Versioned JSON. Throws MalformedModel on read.
void write_model(std::ostream& out, const ClassifierModel& model);
[[nodiscard]] ClassifierModel read_model(std::istream& in);

}  // namespace lcmodel::classify
