#include "lcmodel/classify/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "lcmodel/error.hpp"
#include "lcmodel/random.hpp"
#include "model_json.hpp"

namespace lcmodel::classify {

namespace {

std::string binary_label(const std::string& label) {
  return is_non_transient(label) ? std::string(kNonTransient) : std::string(kTransient);
}

bool has_class(const LabeledDataset& ds, std::string_view name) {
  return std::find(ds.class_names.begin(), ds.class_names.end(), name) != ds.class_names.end();
}

void require_non_transients(const LabeledDataset& ds, std::string_view scheme) {
  if (!has_class(ds, kNonTransient)) {
    throw Error(ErrorCode::MissingClass, std::string(scheme) + " scheme needs non-transient training rows");
  }
}

}  // namespace

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::All: return "all";
    case Scheme::TransientOrNot: return "binary";
    case Scheme::TransientOnly: return "transient";
    case Scheme::Hierarchical: return "hier";
  }
  return "unknown";
}

Scheme scheme_from(std::string_view name) {
  if (name == "all") return Scheme::All;
  if (name == "binary") return Scheme::TransientOrNot;
  if (name == "transient") return Scheme::TransientOnly;
  if (name == "hier") return Scheme::Hierarchical;
  throw Error(ErrorCode::InvalidConfig, "unknown scheme '" + std::string(name) + "'");
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (const auto c : row) sum += c;
  }
  return sum;
}

std::size_t ConfusionMatrix::correct() const noexcept {
  std::size_t sum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) sum += counts[k][k];
  return sum;
}

double ConfusionMatrix::accuracy() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

double ConfusionMatrix::standard_error() const noexcept {
  const auto n = total();
  if (n == 0) return 0.0;
  const double acc = accuracy();
  return std::sqrt(acc * (1.0 - acc) / static_cast<double>(n));
}

std::vector<std::size_t> ConfusionMatrix::column_sums() const {
  std::vector<std::size_t> sums(classes.size(), 0);
  for (const auto& row : counts) {
    for (std::size_t k = 0; k < row.size(); ++k) sums[k] += row[k];
  }
  return sums;
}

void ConfusionMatrix::add(std::string_view predicted, std::string_view actual) {
  const auto find = [&](std::string_view name) {
    const auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) throw Error(ErrorCode::MissingClass, "class '" + std::string(name) + "' not in confusion matrix");
    return static_cast<std::size_t>(it - classes.begin());
  };
  ++counts[find(predicted)][find(actual)];
}

ConfusionMatrix make_confusion(std::vector<std::string> classes) {
  ConfusionMatrix cm;
  cm.classes = ordered_classes(std::move(classes));
  cm.counts.assign(cm.classes.size(), std::vector<std::size_t>(cm.classes.size(), 0));
  return cm;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "predicted\\actual";
  for (const auto& c : cm.classes) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < cm.classes.size(); ++r) {
    out << cm.classes[r];
    for (const auto c : cm.counts[r]) out << ',' << c;
    out << '\n';
  }
}

Trainer make_trainer(ModelKind kind, const TrainerOptions& options, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::Lda: return [](const LabeledDataset& ds) { return train_lda(ds); };
    case ModelKind::Tree: return [options, seed](const LabeledDataset& ds) { return train_tree(ds, options.tree, seed); };
    case ModelKind::Forest:
      return [options, seed](const LabeledDataset& ds) { return train_forest(ds, options.forest, seed); };
  }
  throw Error(ErrorCode::InvalidConfig, "unknown classifier kind");
}

LabeledDataset prepare_for_scheme(Scheme scheme, const LabeledDataset& ds) {
  switch (scheme) {
    case Scheme::All:
    case Scheme::Hierarchical: return ds;
    case Scheme::TransientOrNot: return relabel(ds, binary_label);
    case Scheme::TransientOnly: return filter(ds, [](const std::string& label) { return !is_non_transient(label); });
  }
  return ds;
}

SchemeModel train_scheme(Scheme scheme, const LabeledDataset& train, const Trainer& trainer) {
  if (scheme == Scheme::Hierarchical) return train_hierarchical(train, trainer, trainer);
  if (scheme == Scheme::TransientOrNot) require_non_transients(train, "binary");
  const auto prepared = prepare_for_scheme(scheme, train);
  if (scheme == Scheme::TransientOnly && prepared.size() == 0) {
    throw Error(ErrorCode::MissingClass, "transient scheme needs transient training rows");
  }
  return SchemeModel{scheme, trainer(prepared), std::nullopt};
}

SchemeModel train_hierarchical(const LabeledDataset& train, const Trainer& stage1, const Trainer& stage2) {
  require_non_transients(train, "hierarchical");
  const auto binary = prepare_for_scheme(Scheme::TransientOrNot, train);
  const auto transients = prepare_for_scheme(Scheme::TransientOnly, train);
  if (transients.size() == 0) throw Error(ErrorCode::MissingClass, "hierarchical scheme needs transient training rows");
  return SchemeModel{Scheme::Hierarchical, stage1(binary), stage2(transients)};
}

std::string predict(const SchemeModel& model, std::span<const double> features) {
  const auto& first = predict(model.primary, features);
  if (model.scheme != Scheme::Hierarchical || first == kNonTransient) return first;
  if (!model.stage2) throw Error(ErrorCode::MalformedModel, "hierarchical model lacks its second stage");
  return predict(*model.stage2, features);
}

ConfusionMatrix evaluate(const SchemeModel& model, const LabeledDataset& test,
                         const std::vector<std::string>& extra_classes) {
  auto prepared = prepare_for_scheme(model.scheme, test);
  if (prepared.feature_names != model.primary.feature_names) {
    prepared = select_features(prepared, model.primary.feature_names);
  }
  std::vector<std::string> classes = prepared.class_names;
  classes.insert(classes.end(), extra_classes.begin(), extra_classes.end());
  classes.insert(classes.end(), model.primary.class_names.begin(), model.primary.class_names.end());
  if (model.scheme == Scheme::Hierarchical) {
    std::erase(classes, std::string(kTransient));
    if (model.stage2) classes.insert(classes.end(), model.stage2->class_names.begin(), model.stage2->class_names.end());
  }
  auto cm = make_confusion(std::move(classes));
  for (std::size_t i = 0; i < prepared.size(); ++i) cm.add(predict(model, prepared.row(i)), prepared.label_name(i));
  return cm;
}

ConfusionMatrix evaluate_scheme(Scheme scheme, const LabeledDataset& train, const LabeledDataset& test,
                                const Trainer& trainer) {
  const auto model = train_scheme(scheme, train, trainer);
  return evaluate(model, test, prepare_for_scheme(scheme, train).class_names);
}

void write_scheme_model(std::ostream& out, const SchemeModel& model, std::uint64_t seed, double train_fraction) {
  nlohmann::json j;
  j["format"] = "lcmodel-scheme";
  j["version"] = 1;
  j["scheme"] = std::string(to_string(model.scheme));
  j["seed"] = seed;
  j["train_fraction"] = train_fraction;
  j["primary"] = model_to_json(model.primary);
  if (model.stage2) j["stage2"] = model_to_json(*model.stage2);
  out << j.dump() << '\n';
}

StoredSchemeModel read_scheme_model(std::istream& in) {
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("format").get<std::string>() != "lcmodel-scheme" || j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::MalformedModel, "not a version-1 lcmodel scheme file");
    }
    StoredSchemeModel stored;
    stored.model.scheme = scheme_from(j.at("scheme").get<std::string>());
    stored.model.primary = model_from_json(j.at("primary"));
    if (j.contains("stage2")) stored.model.stage2 = model_from_json(j.at("stage2"));
    if (stored.model.scheme == Scheme::Hierarchical && !stored.model.stage2) {
      throw Error(ErrorCode::MalformedModel, "hierarchical model lacks its second stage");
    }
    stored.seed = j.at("seed").get<std::uint64_t>();
    stored.train_fraction = j.at("train_fraction").get<double>();
    return stored;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedModel, e.what());
  }
}

SelectionTrace stepwise_selection(const LabeledDataset& train, const LabeledDataset& test, const ForestOptions& options,
                                  std::uint64_t seed) {
  if (train.dimension() < 2) throw Error(ErrorCode::InvalidConfig, "stepwise selection needs at least two features");
  std::vector<std::string> current = train.feature_names;
  SelectionTrace trace;
  std::size_t step = 0;
  auto model = train_forest(train, options, derive_seed(seed, step));

  while (!current.empty()) {
    const auto& importance = gini_importance(model);
    const auto weakest = static_cast<std::size_t>(std::min_element(importance.begin(), importance.end()) - importance.begin());
    SelectionStep record;
    record.removed = current[weakest];
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(weakest));
    ++step;

    if (current.empty()) {
      // No predictors left: majority training class.
      const auto counts = train.class_counts();
      const auto majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      const auto& name = train.class_names[majority];
      auto hit_rate = [&](const LabeledDataset& ds) {
        if (ds.size() == 0) return 0.0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) hits += ds.label_name(i) == name ? 1 : 0;
        return static_cast<double>(hits) / static_cast<double>(ds.size());
      };
      record.train_accuracy = hit_rate(train);
      record.test_accuracy = hit_rate(test);
    } else {
      const auto reduced_train = select_features(train, current);
      model = train_forest(reduced_train, options, derive_seed(seed, step));
      record.train_accuracy = accuracy(model, reduced_train);
      record.test_accuracy = accuracy(model, test);
    }
    trace.steps.push_back(std::move(record));
  }
  return trace;
}

void write_selection_csv(std::ostream& out, const SelectionTrace& trace) {
  out << "step,removed,train_accuracy,test_accuracy\n";
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    out << (k + 1) << ',' << s.removed << ',' << format_double(s.train_accuracy) << ',' << format_double(s.test_accuracy)
        << '\n';
  }
}

}  // namespace lcmodel::classify
