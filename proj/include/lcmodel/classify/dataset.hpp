/**
 * @file dataset.hpp
 * @brief Labelled feature matrices and the seeded train/test split.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lcmodel/features.hpp"

namespace lcmodel::classify {

/**
 * @brief Row-major feature matrix with integer class codes.
 *
 * `labels[i]` indexes `class_names`. Every row has `feature_names.size()` columns.
 */
struct LabeledDataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t dimension() const noexcept { return feature_names.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {values.data() + i * dimension(), dimension()};
  }
  [[nodiscard]] double at(std::size_t i, std::size_t feature) const noexcept { return values[i * dimension() + feature]; }
  [[nodiscard]] const std::string& label_name(std::size_t i) const { return class_names[labels[i]]; }

  /// Per-class row counts, aligned with class_names.
  [[nodiscard]] std::vector<std::size_t> class_counts() const;

  void push_back(std::string id, std::span<const double> features, const std::string& label);
};

/**
 * @brief Builds a dataset from raw rows; classes are ordered with ordered_classes().
 *
 * Throws DimensionMismatch on ragged rows and NonFiniteMeasure on missing values.
 */
[[nodiscard]] LabeledDataset make_dataset(std::vector<std::string> feature_names, std::span<const std::string> ids,
                                          std::span<const std::vector<double>> rows,
                                          std::span<const std::string> labels);

/// Labelled rows of a feature table; unlabelled rows are dropped.
[[nodiscard]] LabeledDataset from_table(const features::FeatureTable& table);

[[nodiscard]] LabeledDataset from_vectors(std::span<const features::FeatureVector> vectors);

/// Rows at `indices`, in that order. The class list is recomputed from the kept rows.
[[nodiscard]] LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> indices);

/// Keeps only the named columns, in the order given.
[[nodiscard]] LabeledDataset select_features(const LabeledDataset& ds, std::span<const std::string> names);

/// Rewrites every label through `map`; the class list is recomputed.
[[nodiscard]] LabeledDataset relabel(const LabeledDataset& ds, const std::function<std::string(const std::string&)>& map);

/// Rows whose label satisfies `keep`.
[[nodiscard]] LabeledDataset filter(const LabeledDataset& ds, const std::function<bool(const std::string&)>& keep);

/// Applies `transform` to every value of one column.
[[nodiscard]] LabeledDataset map_column(const LabeledDataset& ds, std::size_t feature,
                                        const std::function<double(double)>& transform);

/**
 * @brief Uniform random partition without replacement.
 *
 * The training part holds round(train_fraction * N) rows, clamped so both parts
 * are nonempty. Throws DatasetTooSmall for fewer than two rows and InvalidConfig
 * unless 0 < train_fraction < 1.
 */
[[nodiscard]] std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds,
                                                                         double train_fraction, std::uint64_t seed);

}  // namespace lcmodel::classify
