#include "lcmodel/classify/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lcmodel/error.hpp"
#include "lcmodel/random.hpp"

namespace lcmodel::classify {

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto c : labels) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

void LabeledDataset::push_back(std::string id, std::span<const double> features, const std::string& label) {
  if (features.size() != dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "row '" + id + "' has " + std::to_string(features.size()) +
                                                  " values, expected " + std::to_string(dimension()));
  }
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (!std::isfinite(features[k])) {
      throw Error(ErrorCode::NonFiniteMeasure, "row '" + id + "': missing or non-finite '" + feature_names[k] + "'");
    }
  }
  auto it = std::find(class_names.begin(), class_names.end(), label);
  if (it == class_names.end()) throw Error(ErrorCode::MissingClass, "label '" + label + "' is not a known class");
  ids.push_back(std::move(id));
  values.insert(values.end(), features.begin(), features.end());
  labels.push_back(static_cast<int>(it - class_names.begin()));
}

LabeledDataset make_dataset(std::vector<std::string> feature_names, std::span<const std::string> ids,
                            std::span<const std::vector<double>> rows, std::span<const std::string> labels) {
  if (ids.size() != rows.size() || labels.size() != rows.size()) {
    throw Error(ErrorCode::DimensionMismatch, "ids, rows and labels differ in length");
  }
  LabeledDataset ds;
  ds.feature_names = std::move(feature_names);
  ds.class_names = ordered_classes(std::vector<std::string>(labels.begin(), labels.end()));
  ds.values.reserve(rows.size() * ds.dimension());
  for (std::size_t i = 0; i < rows.size(); ++i) ds.push_back(ids[i], rows[i], labels[i]);
  return ds;
}

LabeledDataset from_table(const features::FeatureTable& table) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.labels[i].empty()) continue;
    ids.push_back(table.ids[i]);
    rows.push_back(table.rows[i]);
    labels.push_back(table.labels[i]);
  }
  return make_dataset(table.names, ids, rows, labels);
}

LabeledDataset from_vectors(std::span<const features::FeatureVector> vectors) {
  std::vector<std::string> names;
  if (!vectors.empty()) {
    for (const auto& [name, v] : vectors.front().values) names.push_back(name);
  }
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (const auto& fv : vectors) {
    if (!fv.label) continue;
    ids.push_back(fv.curve_id);
    rows.push_back(fv.row());
    labels.push_back(*fv.label);
  }
  return make_dataset(std::move(names), ids, rows, labels);
}

namespace {

LabeledDataset rebuild(const LabeledDataset& ds, std::span<const std::size_t> indices,
                       const std::function<std::string(const std::string&)>& map) {
  std::vector<std::string> labels;
  labels.reserve(indices.size());
  for (const auto i : indices) labels.push_back(map ? map(ds.label_name(i)) : ds.label_name(i));
  LabeledDataset out;
  out.feature_names = ds.feature_names;
  out.class_names = ordered_classes(labels);
  out.values.reserve(indices.size() * ds.dimension());
  for (std::size_t k = 0; k < indices.size(); ++k) out.push_back(ds.ids[indices[k]], ds.row(indices[k]), labels[k]);
  return out;
}

std::vector<std::size_t> all_rows(const LabeledDataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> indices) { return rebuild(ds, indices, {}); }

LabeledDataset select_features(const LabeledDataset& ds, std::span<const std::string> names) {
  std::vector<std::size_t> columns;
  for (const auto& name : names) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    if (it == ds.feature_names.end()) throw Error(ErrorCode::DimensionMismatch, "no feature named '" + name + "'");
    columns.push_back(static_cast<std::size_t>(it - ds.feature_names.begin()));
  }
  LabeledDataset out;
  out.feature_names.assign(names.begin(), names.end());
  out.class_names = ds.class_names;
  out.ids = ds.ids;
  out.labels = ds.labels;
  out.values.reserve(ds.size() * columns.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto c : columns) out.values.push_back(ds.at(i, c));
  }
  return out;
}

LabeledDataset relabel(const LabeledDataset& ds, const std::function<std::string(const std::string&)>& map) {
  const auto idx = all_rows(ds);
  return rebuild(ds, idx, map);
}

LabeledDataset filter(const LabeledDataset& ds, const std::function<bool(const std::string&)>& keep) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (keep(ds.label_name(i))) idx.push_back(i);
  }
  return rebuild(ds, idx, {});
}

LabeledDataset map_column(const LabeledDataset& ds, std::size_t feature, const std::function<double(double)>& transform) {
  LabeledDataset out = ds;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& v = out.values[i * out.dimension() + feature];
    v = transform(v);
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, double train_fraction,
                                                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train fraction must lie strictly between 0 and 1");
  }
  if (ds.size() < 2) throw Error(ErrorCode::DatasetTooSmall, "need at least two rows to split");
  auto idx = all_rows(ds);
  auto rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, ds.size() - 1);
  std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  // Keep original row order inside each part so downstream output is stable.
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {subset(ds, train_idx), subset(ds, test_idx)};
}

}  // namespace lcmodel::classify
