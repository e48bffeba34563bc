#include "lcmodel/classify/model.hpp"

#include "model_json.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "lcmodel/error.hpp"
#include "lcmodel/parallel.hpp"
#include "lcmodel/random.hpp"

namespace lcmodel::classify {

namespace {

constexpr double kRidge = 1e-8;
constexpr double kMinDecrease = 1e-12;
constexpr int kModelFormatVersion = 1;

void require_two_classes(const LabeledDataset& train) {
  const auto counts = train.class_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (present < 2) throw Error(ErrorCode::SingleClass, "training data contains fewer than two classes");
}

int argmax_first(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Grows one CART tree over rows `sample` (duplicates allowed) of `ds`.
class TreeBuilder {
 public:
  TreeBuilder(const LabeledDataset& ds, const TreeOptions& options, Rng* rng)
      : ds_(ds), options_(options), rng_(rng), classes_(ds.class_names.size()), importance_(ds.dimension(), 0.0) {
    features_.resize(ds.dimension());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  TreeParameters build(std::vector<std::size_t> sample) {
    sample_ = std::move(sample);
    nodes_.clear();
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
      std::size_t depth;
    };
    std::vector<Pending> stack;
    nodes_.emplace_back();
    stack.push_back({0, 0, sample_.size(), 0});
    while (!stack.empty()) {
      const auto job = stack.back();
      stack.pop_back();
      const auto mid = split_node(job.node, job.begin, job.end, job.depth);
      if (!mid) continue;
      const int left = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      nodes_[job.node].left = left;
      nodes_[job.node].right = left + 1;
      // Right first so the left subtree is expanded first.
      stack.push_back({left + 1, *mid, job.end, job.depth + 1});
      stack.push_back({left, job.begin, *mid, job.depth + 1});
    }
    return TreeParameters{std::move(nodes_)};
  }

  [[nodiscard]] const std::vector<double>& importance() const noexcept { return importance_; }

 private:
  // Returns the partition point of the node's rows, or nullopt for a leaf.
  std::optional<std::size_t> split_node(int node_id, std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    std::vector<double> counts(classes_, 0.0);
    for (std::size_t k = begin; k < end; ++k) counts[static_cast<std::size_t>(ds_.labels[sample_[k]])] += 1.0;
    {
      auto& node = nodes_[node_id];
      node.class_counts = counts;
      node.prediction = argmax_first(counts);
    }
    const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; });
    if (nonzero <= 1 || depth >= options_.max_depth || n < 2 * options_.min_leaf) return std::nullopt;

    double parent_sumsq = 0.0;
    for (const auto c : counts) parent_sumsq += c * c;
    const double parent_score = parent_sumsq / static_cast<double>(n);

    const std::size_t p = features_.size();
    std::size_t tries = p;
    if (options_.mtry > 0 && options_.mtry < p && rng_ != nullptr) {
      tries = options_.mtry;
      for (std::size_t k = 0; k < tries; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, p - 1);
        std::swap(features_[k], features_[pick(*rng_)]);
      }
    } else {
      std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    double best_score = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<double> left_counts(classes_);
    for (std::size_t t = 0; t < tries; ++t) {
      const auto f = features_[t];
      buffer_.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const auto row = sample_[k];
        buffer_.emplace_back(ds_.at(row, f), ds_.labels[row]);
      }
      std::sort(buffer_.begin(), buffer_.end());
      if (buffer_.front().first == buffer_.back().first) continue;

      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double left_sumsq = 0.0;
      double right_sumsq = parent_sumsq;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(buffer_[i].second);
        const double right_c = counts[c] - left_counts[c];
        left_sumsq += 2.0 * left_counts[c] + 1.0;
        right_sumsq -= 2.0 * right_c - 1.0;
        left_counts[c] += 1.0;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < options_.min_leaf) continue;
        if (n_right < options_.min_leaf) break;
        if (!(buffer_[i].first < buffer_[i + 1].first)) continue;
        const double score = left_sumsq / static_cast<double>(n_left) + right_sumsq / static_cast<double>(n_right);
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = buffer_[i].first;
        }
      }
    }
    if (best_feature < 0) return std::nullopt;
    const double decrease = best_score - parent_score;
    if (!(decrease > kMinDecrease)) return std::nullopt;

    const auto f = static_cast<std::size_t>(best_feature);
    const auto mid_it = std::partition(sample_.begin() + static_cast<std::ptrdiff_t>(begin),
                                       sample_.begin() + static_cast<std::ptrdiff_t>(end),
                                       [&](std::size_t row) { return ds_.at(row, f) <= best_threshold; });
    importance_[f] += decrease;
    auto& node = nodes_[node_id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    return static_cast<std::size_t>(mid_it - sample_.begin());
  }

  const LabeledDataset& ds_;
  TreeOptions options_;
  Rng* rng_;
  std::size_t classes_;
  std::vector<double> importance_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> sample_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, int>> buffer_;
};

int tree_predict(const TreeParameters& tree, std::span<const double> x) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].prediction;
}

std::vector<double> lda_discriminants(const LdaParameters& lda, std::span<const double> x) {
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - lda.center[k]) / lda.scale[k];
  std::vector<double> score(lda.intercepts.size());
  for (std::size_t c = 0; c < score.size(); ++c) {
    double s = lda.intercepts[c];
    for (std::size_t k = 0; k < z.size(); ++k) s += lda.coefficients[c][k] * z[k];
    score[c] = s;
  }
  return score;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Lda: return "lda";
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
  }
  return "unknown";
}

ModelKind model_kind_from(std::string_view name) {
  if (name == "lda") return ModelKind::Lda;
  if (name == "tree") return ModelKind::Tree;
  if (name == "forest") return ModelKind::Forest;
  throw Error(ErrorCode::InvalidConfig, "unknown classifier '" + std::string(name) + "'");
}

double gini_impurity(std::span<const double> counts) noexcept {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double sumsq = 0.0;
  for (const auto c : counts) sumsq += (c / total) * (c / total);
  return 1.0 - sumsq;
}

ClassifierModel train_lda(const LabeledDataset& train) {
  require_two_classes(train);
  const auto n = train.size();
  const auto p = train.dimension();
  const auto classes = train.class_names.size();
  const auto counts = train.class_counts();

  LdaParameters lda;
  lda.center.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) lda.center[k] += train.at(i, k);
  }
  for (auto& c : lda.center) c /= static_cast<double>(n);

  std::vector<std::vector<double>> means(classes, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& m = means[static_cast<std::size_t>(train.labels[i])];
    for (std::size_t k = 0; k < p; ++k) m[k] += train.at(i, k);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) continue;
    for (auto& v : means[c]) v /= static_cast<double>(counts[c]);
  }

  const double dof = n > classes ? static_cast<double>(n - classes) : static_cast<double>(n);
  lda.scale.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = means[static_cast<std::size_t>(train.labels[i])];
    for (std::size_t k = 0; k < p; ++k) {
      const double d = train.at(i, k) - m[k];
      lda.scale[k] += d * d;
    }
  }
  for (auto& s : lda.scale) {
    s = std::sqrt(s / dof);
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  }

  const auto pi = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(pi, pi);
  Eigen::VectorXd d(pi);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = means[static_cast<std::size_t>(train.labels[i])];
    for (std::size_t k = 0; k < p; ++k) d(static_cast<Eigen::Index>(k)) = (train.at(i, k) - m[k]) / lda.scale[k];
    within.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  within = within.selfadjointView<Eigen::Lower>();
  within /= dof;
  within.diagonal().array() += kRidge;
  const Eigen::LLT<Eigen::MatrixXd> llt(within);
  if (llt.info() != Eigen::Success || !within.allFinite() || !(llt.rcond() > 1e-15)) {
    throw Error(ErrorCode::SingularCovariance, "pooled within-class covariance is singular");
  }

  lda.coefficients.assign(classes, std::vector<double>(p, 0.0));
  lda.intercepts.assign(classes, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) continue;
    Eigen::VectorXd mu(pi);
    for (std::size_t k = 0; k < p; ++k) mu(static_cast<Eigen::Index>(k)) = (means[c][k] - lda.center[k]) / lda.scale[k];
    const Eigen::VectorXd w = llt.solve(mu);
    for (std::size_t k = 0; k < p; ++k) lda.coefficients[c][k] = w(static_cast<Eigen::Index>(k));
    lda.intercepts[c] = -0.5 * mu.dot(w) + std::log(static_cast<double>(counts[c]) / static_cast<double>(n));
  }

  return ClassifierModel{ModelKind::Lda, train.feature_names, train.class_names, std::move(lda)};
}

ClassifierModel train_tree(const LabeledDataset& train, const TreeOptions& options, std::uint64_t seed) {
  require_two_classes(train);
  auto rng = make_rng(seed);
  TreeBuilder builder(train, options, options.mtry > 0 ? &rng : nullptr);
  std::vector<std::size_t> sample(train.size());
  std::iota(sample.begin(), sample.end(), std::size_t{0});
  auto tree = builder.build(std::move(sample));
  return ClassifierModel{ModelKind::Tree, train.feature_names, train.class_names, std::move(tree)};
}

ClassifierModel train_forest(const LabeledDataset& train, const ForestOptions& options, std::uint64_t seed) {
  require_two_classes(train);
  if (options.trees == 0) throw Error(ErrorCode::InvalidConfig, "forest needs at least one tree");
  const auto p = train.dimension();
  const auto n = train.size();
  TreeOptions tree_options;
  tree_options.min_leaf = std::max<std::size_t>(options.min_leaf, 1);
  tree_options.max_depth = options.max_depth;
  tree_options.mtry = options.mtry > 0 ? options.mtry
                                       : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));

  ForestParameters forest;
  forest.trees.resize(options.trees);
  std::vector<std::vector<double>> importances(options.trees);
  parallel_for(options.trees, options.workers, [&](std::size_t t) {
    auto rng = make_rng(seed, t);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = draw(rng);
    TreeBuilder builder(train, tree_options, &rng);
    forest.trees[t] = builder.build(std::move(sample));
    importances[t] = builder.importance();
  });

  forest.importance.assign(p, 0.0);
  for (const auto& imp : importances) {
    for (std::size_t k = 0; k < p; ++k) forest.importance[k] += imp[k] / static_cast<double>(n);
  }
  for (auto& v : forest.importance) v /= static_cast<double>(options.trees);
  return ClassifierModel{ModelKind::Forest, train.feature_names, train.class_names, std::move(forest)};
}

ClassifierModel constant_model(std::vector<std::string> feature_names, std::vector<std::string> class_names,
                               const std::string& class_name) {
  const auto it = std::find(class_names.begin(), class_names.end(), class_name);
  if (it == class_names.end()) throw Error(ErrorCode::MissingClass, "class '" + class_name + "' not in class list");
  TreeNode leaf;
  leaf.class_counts.assign(class_names.size(), 0.0);
  leaf.prediction = static_cast<int>(it - class_names.begin());
  leaf.class_counts[static_cast<std::size_t>(leaf.prediction)] = 1.0;
  return ClassifierModel{ModelKind::Tree, std::move(feature_names), std::move(class_names), TreeParameters{{leaf}}};
}

int predict_index(const ClassifierModel& model, std::span<const double> features) {
  if (features.size() != model.feature_names.size()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.feature_names.size()) +
                                                  " features, got " + std::to_string(features.size()));
  }
  switch (model.kind) {
    case ModelKind::Lda: return argmax_first(lda_discriminants(std::get<LdaParameters>(model.parameters), features));
    case ModelKind::Tree: return tree_predict(std::get<TreeParameters>(model.parameters), features);
    case ModelKind::Forest: return argmax_first(predict_shares(model, features));
  }
  return 0;
}

const std::string& predict(const ClassifierModel& model, std::span<const double> features) {
  return model.class_names[static_cast<std::size_t>(predict_index(model, features))];
}

std::vector<double> predict_shares(const ClassifierModel& model, std::span<const double> features) {
  std::vector<double> shares(model.class_names.size(), 0.0);
  if (model.kind != ModelKind::Forest) {
    shares[static_cast<std::size_t>(predict_index(model, features))] = 1.0;
    return shares;
  }
  if (features.size() != model.feature_names.size()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.feature_names.size()) +
                                                  " features, got " + std::to_string(features.size()));
  }
  const auto& forest = std::get<ForestParameters>(model.parameters);
  for (const auto& tree : forest.trees) shares[static_cast<std::size_t>(tree_predict(tree, features))] += 1.0;
  for (auto& s : shares) s /= static_cast<double>(forest.trees.size());
  return shares;
}

const std::vector<double>& gini_importance(const ClassifierModel& model) {
  if (model.kind != ModelKind::Forest) throw Error(ErrorCode::InvalidConfig, "importance is defined for forests only");
  return std::get<ForestParameters>(model.parameters).importance;
}

double accuracy(const ClassifierModel& model, const LabeledDataset& ds) {
  if (ds.size() == 0) return 0.0;
  const LabeledDataset* data = &ds;
  LabeledDataset aligned;
  if (ds.feature_names != model.feature_names) {
    aligned = select_features(ds, model.feature_names);
    data = &aligned;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data->size(); ++i) {
    if (predict(model, data->row(i)) == data->label_name(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data->size());
}

// Persistence ---------------------------------------------------------------

namespace {

using nlohmann::json;

json tree_to_json(const TreeParameters& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"prediction", n.prediction},
                     {"counts", n.class_counts}});
  }
  return nodes;
}

TreeParameters tree_from_json(const json& j, std::size_t classes, std::size_t features) {
  TreeParameters tree;
  for (const auto& jn : j) {
    TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    n.prediction = jn.at("prediction").get<int>();
    n.class_counts = jn.at("counts").get<std::vector<double>>();
    tree.nodes.push_back(std::move(n));
  }
  const auto size = static_cast<int>(tree.nodes.size());
  if (size == 0) throw Error(ErrorCode::MalformedModel, "tree without nodes");
  for (const auto& n : tree.nodes) {
    if (n.prediction < 0 || static_cast<std::size_t>(n.prediction) >= classes) {
      throw Error(ErrorCode::MalformedModel, "leaf prediction out of range");
    }
    if (n.feature >= 0 && (static_cast<std::size_t>(n.feature) >= features || n.left <= 0 || n.right <= 0 ||
                           n.left >= size || n.right >= size)) {
      throw Error(ErrorCode::MalformedModel, "split node references out of range");
    }
  }
  return tree;
}

}  // namespace

nlohmann::json model_to_json(const ClassifierModel& model) {
  json j;
  j["format"] = "lcmodel-classifier";
  j["version"] = kModelFormatVersion;
  j["kind"] = std::string(to_string(model.kind));
  j["feature_names"] = model.feature_names;
  j["class_names"] = model.class_names;
  switch (model.kind) {
    case ModelKind::Lda: {
      const auto& lda = std::get<LdaParameters>(model.parameters);
      json intercepts = json::array();
      for (const auto b : lda.intercepts) {
        // An absent class has intercept -inf, which JSON cannot hold.
        if (std::isfinite(b)) intercepts.push_back(b);
        else intercepts.push_back(nullptr);
      }
      j["lda"] = {{"center", lda.center}, {"scale", lda.scale}, {"coefficients", lda.coefficients}, {"intercepts", intercepts}};
      break;
    }
    case ModelKind::Tree: j["tree"] = tree_to_json(std::get<TreeParameters>(model.parameters)); break;
    case ModelKind::Forest: {
      const auto& forest = std::get<ForestParameters>(model.parameters);
      json trees = json::array();
      for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
      j["forest"] = {{"importance", forest.importance}, {"trees", trees}};
      break;
    }
  }
  return j;
}

ClassifierModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "lcmodel-classifier") throw Error(ErrorCode::MalformedModel, "unknown format");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::MalformedModel, "unsupported model version " + j.at("version").dump());
    }
    ClassifierModel model;
    model.kind = model_kind_from(j.at("kind").get<std::string>());
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto p = model.feature_names.size();
    const auto k = model.class_names.size();
    switch (model.kind) {
      case ModelKind::Lda: {
        const auto& jl = j.at("lda");
        LdaParameters lda;
        lda.center = jl.at("center").get<std::vector<double>>();
        lda.scale = jl.at("scale").get<std::vector<double>>();
        lda.coefficients = jl.at("coefficients").get<std::vector<std::vector<double>>>();
        for (const auto& b : jl.at("intercepts")) {
          lda.intercepts.push_back(b.is_null() ? -std::numeric_limits<double>::infinity() : b.get<double>());
        }
        if (lda.center.size() != p || lda.scale.size() != p || lda.coefficients.size() != k || lda.intercepts.size() != k ||
            std::any_of(lda.coefficients.begin(), lda.coefficients.end(), [&](const auto& row) { return row.size() != p; })) {
          throw Error(ErrorCode::MalformedModel, "LDA parameter shapes do not match feature/class lists");
        }
        model.parameters = std::move(lda);
        break;
      }
      case ModelKind::Tree: model.parameters = tree_from_json(j.at("tree"), k, p); break;
      case ModelKind::Forest: {
        const auto& jf = j.at("forest");
        ForestParameters forest;
        forest.importance = jf.at("importance").get<std::vector<double>>();
        for (const auto& jt : jf.at("trees")) forest.trees.push_back(tree_from_json(jt, k, p));
        if (forest.importance.size() != p || forest.trees.empty()) {
          throw Error(ErrorCode::MalformedModel, "forest parameter shapes do not match");
        }
        model.parameters = std::move(forest);
        break;
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedModel, e.what());
  }
}

void write_model(std::ostream& out, const ClassifierModel& model) { out << model_to_json(model).dump() << '\n'; }

ClassifierModel read_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedModel, e.what());
  }
  return model_from_json(j);
}

}  // namespace lcmodel::classify
