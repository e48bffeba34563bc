#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lcmodel/classify/evaluation.hpp"
#include "lcmodel/error.hpp"

using namespace lcmodel;
using namespace lcmodel::classify;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lcmodel::Error");
  return ErrorCode::IoFailure;
}

/// Gaussian blobs: class k centred at `separation * k` along every axis, plus `noise_dims` pure-noise columns.
LabeledDataset blobs(const std::vector<std::string>& classes, std::size_t per_class, std::size_t dims, double separation,
                     std::uint64_t seed, std::size_t noise_dims = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  LabeledDataset ds;
  for (std::size_t k = 0; k < dims; ++k) ds.feature_names.push_back("x" + std::to_string(k));
  for (std::size_t k = 0; k < noise_dims; ++k) ds.feature_names.push_back("noise" + std::to_string(k));
  ds.class_names = ordered_classes(classes);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> row;
      for (std::size_t k = 0; k < dims; ++k) row.push_back(gauss(rng) + separation * static_cast<double>(c));
      for (std::size_t k = 0; k < noise_dims; ++k) row.push_back(gauss(rng));
      ds.push_back(classes[c] + "-" + std::to_string(i), row, classes[c]);
    }
  }
  return ds;
}

const std::vector<std::string> kEight{"AGN", "Blazar", "CV", "CV-Downes", "Flare", "SNe", "RR-Lyrae", "non-transient"};

}  // namespace

TEST_CASE("train/test split") {
  LabeledDataset ds;
  ds.feature_names = {"x"};
  ds.class_names = {"AGN", "SNe"};
  for (int i = 0; i < 3720; ++i) ds.push_back(std::to_string(i), std::vector<double>{double(i)}, i % 2 ? "AGN" : "SNe");
  const auto [train, test] = split_train_test(ds, 2.0 / 3.0, 42);
  CHECK(train.size() == 2480);
  CHECK(test.size() == 1240);
  const auto [train2, test2] = split_train_test(ds, 2.0 / 3.0, 42);
  CHECK(train2.ids == train.ids);
  CHECK(test2.ids == test.ids);
  std::set<std::string> all(train.ids.begin(), train.ids.end());
  all.insert(test.ids.begin(), test.ids.end());
  CHECK(all.size() == 3720);
  const auto [train3, test3] = split_train_test(ds, 2.0 / 3.0, 43);
  CHECK(train3.ids != train.ids);

  LabeledDataset one;
  one.feature_names = {"x"};
  one.class_names = {"AGN"};
  one.push_back("a", std::vector<double>{1.0}, "AGN");
  CHECK(code_of([&] { (void)split_train_test(one, 0.5, 1); }) == ErrorCode::DatasetTooSmall);
  CHECK(code_of([&] { (void)split_train_test(ds, 1.0, 1); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("dataset invariants") {
  LabeledDataset ds;
  ds.feature_names = {"x", "y"};
  ds.class_names = {"AGN"};
  CHECK(code_of([&] { ds.push_back("a", std::vector<double>{1.0}, "AGN"); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { ds.push_back("a", std::vector<double>{1.0, NAN}, "AGN"); }) == ErrorCode::NonFiniteMeasure);
}

TEST_CASE("single class is rejected") {
  const auto ds = blobs({"AGN"}, 20, 2, 0.0, 1);
  CHECK(code_of([&] { (void)train_lda(ds); }) == ErrorCode::SingleClass);
  CHECK(code_of([&] { (void)train_tree(ds); }) == ErrorCode::SingleClass);
  CHECK(code_of([&] { (void)train_forest(ds, ForestOptions{10}, 1); }) == ErrorCode::SingleClass);
}

TEST_CASE("LDA") {
  const auto ds = blobs({"AGN", "SNe", "CV"}, 100, 3, 6.0, 2);
  const auto model = train_lda(ds);
  CHECK(accuracy(model, ds) > 0.98);
  // A point at a class mean is assigned to that class.
  for (const auto& cls : {"AGN", "SNe", "CV"}) {
    std::vector<double> mean(3, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.label_name(i) != cls) continue;
      for (std::size_t k = 0; k < 3; ++k) mean[k] += ds.at(i, k);
      ++count;
    }
    for (auto& v : mean) v /= static_cast<double>(count);
    CHECK(predict(model, mean) == cls);
  }
  // Affine maps applied to train and test leave decisions unchanged.
  auto mapped = ds;
  mapped = map_column(mapped, 0, [](double x) { return 3.0 * x - 7.0; });
  mapped = map_column(mapped, 2, [](double x) { return 0.25 * x + 100.0; });
  const auto mapped_model = train_lda(mapped);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(predict(model, ds.row(i)) == predict(mapped_model, mapped.row(i)));

  LabeledDataset collinear;
  collinear.feature_names = {"a", "b"};
  collinear.class_names = {"AGN", "SNe"};
  for (int i = 0; i < 20; ++i) {
    collinear.push_back(std::to_string(i), std::vector<double>{double(i), 2.0 * i}, i < 10 ? "AGN" : "SNe");
  }
  LabeledDataset constant = collinear;
  constant = map_column(constant, 0, [](double) { return 1.0; });
  constant = map_column(constant, 1, [](double) { return 1.0; });
  // The ridge keeps constant columns trainable; every row then falls back to the prior.
  const auto flat = train_lda(constant);
  CHECK(predict(flat, constant.row(0)) == predict(flat, constant.row(19)));

  LabeledDataset huge = collinear;
  huge = map_column(huge, 0, [](double x) { return x * 1e200; });
  CHECK(code_of([&] { (void)train_lda(huge); }) == ErrorCode::SingularCovariance);
}

TEST_CASE("tree") {
  const auto ds = blobs({"AGN", "SNe"}, 100, 2, 8.0, 3);
  const auto tree = train_tree(ds);
  CHECK(accuracy(tree, ds) == 1.0);
  const auto& nodes = std::get<TreeParameters>(tree.parameters).nodes;
  for (const auto& n : nodes) {
    if (n.feature < 0) {
      double total = 0.0;
      for (const double c : n.class_counts) total += c;
      CHECK(total >= 5.0);
    }
  }
  // Identical features cannot be split: a single leaf predicting the majority.
  LabeledDataset flat;
  flat.feature_names = {"x"};
  flat.class_names = {"AGN", "SNe"};
  for (int i = 0; i < 30; ++i) flat.push_back(std::to_string(i), std::vector<double>{1.0}, i < 20 ? "SNe" : "AGN");
  const auto leaf = train_tree(flat);
  CHECK(std::get<TreeParameters>(leaf.parameters).nodes.size() == 1);
  CHECK(predict(leaf, std::vector<double>{-50.0}) == "SNe");
  CHECK(code_of([&] { (void)predict(leaf, std::vector<double>{1.0, 2.0}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("forest") {
  const auto ds = blobs({"AGN", "SNe", "CV"}, 80, 1, 5.0, 4, 1);
  const auto forest = train_forest(ds, ForestOptions{100}, 5);
  CHECK(accuracy(forest, ds) > 0.95);
  const auto& imp = gini_importance(forest);
  REQUIRE(imp.size() == 2);
  CHECK(imp[0] > imp[1]);
  for (const double v : imp) CHECK(v >= 0.0);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto shares = predict_shares(forest, ds.row(i));
    double sum = 0.0;
    for (const double s : shares) sum += s;
    CHECK(sum == doctest::Approx(1.0));
  }

  // A one-tree forest predicts exactly as its tree.
  const auto single = train_forest(ds, ForestOptions{1}, 6);
  ClassifierModel tree{ModelKind::Tree, single.feature_names, single.class_names,
                       std::get<ForestParameters>(single.parameters).trees.front()};
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(predict(single, ds.row(i)) == predict(tree, ds.row(i)));

  // Same seed, same forest; worker count does not matter.
  ForestOptions threaded{50};
  threaded.workers = 3;
  const auto a = train_forest(ds, ForestOptions{50}, 9);
  const auto b = train_forest(ds, threaded, 9);
  std::ostringstream sa, sb;
  write_model(sa, a);
  write_model(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("monotone invariance of tree and forest") {
  const auto ds = blobs({"AGN", "SNe", "CV"}, 60, 3, 1.5, 7);
  const auto [train, test] = split_train_test(ds, 2.0 / 3.0, 1);
  auto train_t = map_column(map_column(train, 0, [](double x) { return std::exp(x); }), 2,
                            [](double x) { return x * x * x; });
  auto test_t = map_column(map_column(test, 0, [](double x) { return std::exp(x); }), 2,
                           [](double x) { return x * x * x; });
  const auto tree = train_tree(train), tree_t = train_tree(train_t);
  const auto forest = train_forest(train, ForestOptions{60}, 3), forest_t = train_forest(train_t, ForestOptions{60}, 3);
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(predict(tree, test.row(i)) == predict(tree_t, test_t.row(i)));
    CHECK(predict(forest, test.row(i)) == predict(forest_t, test_t.row(i)));
  }
}

TEST_CASE("forest accuracy varies less with more trees") {
  const auto ds = blobs({"AGN", "SNe"}, 100, 2, 1.0, 12, 2);
  const auto [train, test] = split_train_test(ds, 2.0 / 3.0, 3);
  const auto spread = [&](std::size_t trees) {
    std::vector<double> acc;
    for (std::uint64_t s = 0; s < 10; ++s) acc.push_back(accuracy(train_forest(train, ForestOptions{trees}, s), test));
    double mean = 0.0;
    for (const double a : acc) mean += a / 10.0;
    double var = 0.0;
    for (const double a : acc) var += (a - mean) * (a - mean) / 9.0;
    return std::sqrt(var);
  };
  CHECK(spread(500) <= spread(10));
}

TEST_CASE("model persistence") {
  const auto ds = blobs({"AGN", "SNe", "CV"}, 40, 2, 4.0, 8);
  for (const auto& model : {train_lda(ds), train_tree(ds), train_forest(ds, ForestOptions{20}, 1)}) {
    std::ostringstream out;
    write_model(out, model);
    std::istringstream in(out.str());
    const auto back = read_model(in);
    CHECK(back.kind == model.kind);
    CHECK(back.class_names == model.class_names);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(predict(back, ds.row(i)) == predict(model, ds.row(i)));
    std::ostringstream again;
    write_model(again, back);
    CHECK(again.str() == out.str());
  }
  std::istringstream junk("{\"format\": \"something-else\"}");
  CHECK(code_of([&] { (void)read_model(junk); }) == ErrorCode::MalformedModel);
  std::istringstream broken("not json");
  CHECK(code_of([&] { (void)read_model(broken); }) == ErrorCode::MalformedModel);
}

TEST_CASE("confusion matrix bookkeeping") {
  auto cm = make_confusion({"SNe", "AGN"});
  CHECK(cm.classes == std::vector<std::string>{"AGN", "SNe"});
  cm.add("AGN", "AGN");
  cm.add("AGN", "SNe");
  cm.add("SNe", "SNe");
  cm.add("SNe", "SNe");
  CHECK(cm.counts[0][1] == 1);  // predicted AGN, actually SNe
  CHECK(cm.total() == 4);
  CHECK(cm.accuracy() == 0.75);
  CHECK(cm.standard_error() == doctest::Approx(std::sqrt(0.75 * 0.25 / 4.0)));
  CHECK(cm.column_sums() == std::vector<std::size_t>{1, 3});
  std::ostringstream out;
  write_confusion_csv(out, cm);
  CHECK(out.str() == "predicted\\actual,AGN,SNe\nAGN,1,1\nSNe,0,2\n");
}

TEST_CASE("schemes") {
  const auto ds = blobs(kEight, 30, 3, 12.0, 10);
  const auto [train, test] = split_train_test(ds, 2.0 / 3.0, 2);
  const auto trainer = make_trainer(ModelKind::Forest, TrainerOptions{TreeOptions{}, ForestOptions{50}}, 4);

  const auto binary = evaluate_scheme(Scheme::TransientOrNot, train, test, trainer);
  CHECK(binary.classes == std::vector<std::string>{"non-transient", "transient"});
  // Thresholds sit on the largest left value, so a test row just past a bootstrap's edge may still miss.
  CHECK(binary.accuracy() >= 0.95);
  const double a = binary.accuracy();
  CHECK(binary.standard_error() == doctest::Approx(std::sqrt(a * (1.0 - a) / static_cast<double>(binary.total()))));
  CHECK(binary.total() == test.size());

  const auto all = evaluate_scheme(Scheme::All, train, test, trainer);
  const auto hier = evaluate_scheme(Scheme::Hierarchical, train, test, trainer);
  const auto counts = test.class_counts();
  CHECK(all.classes.size() == 8);
  CHECK(all.classes == hier.classes);
  CHECK(all.total() == test.size());
  for (std::size_t k = 0; k < all.classes.size(); ++k) {
    const auto it = std::find(test.class_names.begin(), test.class_names.end(), all.classes[k]);
    const std::size_t expected = it == test.class_names.end() ? 0 : counts[static_cast<std::size_t>(it - test.class_names.begin())];
    CHECK(all.column_sums()[k] == expected);
  }
  CHECK(all.column_sums() == hier.column_sums());

  const auto only = evaluate_scheme(Scheme::TransientOnly, train, test, trainer);
  CHECK(only.classes.size() == 7);
  CHECK(std::find(only.classes.begin(), only.classes.end(), "non-transient") == only.classes.end());

  auto no_nt = filter(train, [](const std::string& l) { return l != "non-transient"; });
  CHECK(code_of([&] { (void)train_scheme(Scheme::TransientOrNot, no_nt, trainer); }) == ErrorCode::MissingClass);
  CHECK(code_of([&] { (void)train_scheme(Scheme::Hierarchical, no_nt, trainer); }) == ErrorCode::MissingClass);
}

TEST_CASE("hierarchical bookkeeping with a forced first stage") {
  const auto ds = blobs(kEight, 30, 3, 1.0, 11);
  const auto [train, test] = split_train_test(ds, 2.0 / 3.0, 5);
  const auto trainer = make_trainer(ModelKind::Tree, TrainerOptions{}, 1);
  const Trainer everything_transient = [](const LabeledDataset& d) {
    return constant_model(d.feature_names, d.class_names, std::string(kTransient));
  };
  const auto model = train_hierarchical(train, everything_transient, trainer);
  const auto cm = evaluate(model, test, prepare_for_scheme(Scheme::All, train).class_names);

  const auto transient_test = prepare_for_scheme(Scheme::TransientOnly, test);
  std::size_t stage2_hits = 0;
  for (std::size_t i = 0; i < transient_test.size(); ++i) {
    stage2_hits += predict(*model.stage2, transient_test.row(i)) == transient_test.label_name(i) ? 1 : 0;
  }
  CHECK(cm.correct() == stage2_hits);
  const auto nt = static_cast<std::size_t>(std::find(cm.classes.begin(), cm.classes.end(), "non-transient") - cm.classes.begin());
  CHECK(cm.counts[nt][nt] == 0);
  std::size_t predicted_nt = 0;
  for (const auto c : cm.counts[nt]) predicted_nt += c;
  CHECK(predicted_nt == 0);
  CHECK(cm.total() == test.size());
}

TEST_CASE("scheme model persistence") {
  const auto ds = blobs(kEight, 20, 3, 5.0, 13);
  const auto trainer = make_trainer(ModelKind::Forest, TrainerOptions{TreeOptions{}, ForestOptions{20}}, 4);
  const auto model = train_scheme(Scheme::Hierarchical, ds, trainer);
  std::ostringstream out;
  write_scheme_model(out, model, 17, 0.5);
  std::istringstream in(out.str());
  const auto stored = read_scheme_model(in);
  CHECK(stored.seed == 17);
  CHECK(stored.train_fraction == 0.5);
  REQUIRE(stored.model.stage2.has_value());
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(predict(stored.model, ds.row(i)) == predict(model, ds.row(i)));
}

TEST_CASE("stepwise selection") {
  const auto ds = blobs({"AGN", "SNe"}, 100, 2, 3.0, 14, 1);
  const auto [train, test] = split_train_test(ds, 2.0 / 3.0, 6);
  const auto trace = stepwise_selection(train, test, ForestOptions{100}, 3);
  REQUIRE(trace.steps.size() == 3);
  CHECK(trace.steps.front().removed == "noise0");
  std::set<std::string> removed;
  for (const auto& s : trace.steps) {
    removed.insert(s.removed);
    CHECK(s.train_accuracy >= 0.0);
    CHECK(s.train_accuracy <= 1.0);
    CHECK(s.test_accuracy >= 0.0);
    CHECK(s.test_accuracy <= 1.0);
  }
  CHECK(removed.size() == 3);
  std::ostringstream out;
  write_selection_csv(out, trace);
  CHECK(out.str().rfind("step,removed,train_accuracy,test_accuracy\n1,noise0,", 0) == 0);

  LabeledDataset narrow = select_features(train, std::vector<std::string>{"x0"});
  CHECK(code_of([&] { (void)stepwise_selection(narrow, test, ForestOptions{10}, 1); }) == ErrorCode::InvalidConfig);
}
