#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

#include "stann/errors.hpp"
#include "stann/model.hpp"
#include "stann/train.hpp"
#include "support/oracles.hpp"

using namespace stann;

namespace {

StannConfig tiny_config() {
  StannConfig c;
  c.n_channels = 8;
  c.timesteps = 16;
  c.columns = {
      SteColumnSpec{{{{3, 3, 3}, {4, 3, 3}, {3, 3, 3}}}},
      SteColumnSpec{{{{2, 5, 5}, {3, 3, 3}, {2, 3, 3}}}},
      SteColumnSpec{{{{3, 3, 3}, {4, 1, 1}, {2, 1, 1}}}},
  };
  c.ran_hidden = 6;
  c.dense_width = 10;
  return c;
}

std::vector<LabeledWindow> toy_windows(const StannConfig& c, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledWindow> out;
  for (int i = 0; i < count; ++i) {
    LabeledWindow w;
    w.label = i % 2;
    w.subject_id = "s01";
    w.trial_id = "t" + std::to_string(i);
    w.x.resize(c.n_channels, c.timesteps);
    for (int ch = 0; ch < c.n_channels; ++ch) {
      for (int t = 0; t < c.timesteps; ++t) {
        w.x(ch, t) = static_cast<float>(rng.uniform(-0.5, 0.5));
      }
    }
    const float offset = w.label == 1 ? 2.0f : -2.0f;
    for (int t = 0; t < c.timesteps; ++t) w.x(0, t) += offset;
    out.push_back(std::move(w));
  }
  return out;
}

Hyper fast_hyper() {
  Hyper h;
  h.epochs = 12;
  h.batch = 8;
  h.optimizer.lr = 5e-3;
  h.seed = 7;
  return h;
}

}  // namespace

TEST_CASE("kfold_split partitions the indices evenly and reproducibly") {
  const CvPlan plan = kfold_split(23, 4, 99);
  REQUIRE(plan.folds.size() == 4);
  CHECK(plan.folds[0].size() == 6);
  CHECK(plan.folds[1].size() == 6);
  CHECK(plan.folds[2].size() == 6);
  CHECK(plan.folds[3].size() == 5);

  std::set<int> seen;
  for (const auto& fold : plan.folds) {
    for (int idx : fold) {
      CHECK(idx >= 0);
      CHECK(idx < 23);
      CHECK(seen.insert(idx).second);  // no duplicates anywhere
    }
  }
  CHECK(seen.size() == 23);

  const CvPlan again = kfold_split(23, 4, 99);
  CHECK(again.folds == plan.folds);
  const CvPlan other = kfold_split(23, 4, 100);
  CHECK(other.folds != plan.folds);

  CHECK_THROWS_AS(kfold_split(10, 1, 0), ArgumentError);
  CHECK_THROWS_AS(kfold_split(3, 4, 0), ArgumentError);
}

TEST_CASE("evaluate_metrics agrees with hand values and the reference") {
  // Always predicting positive on a balanced set: half right, f1 = 2/3.
  const Metrics all_pos = evaluate_metrics({1, 1, 1, 1}, {1, 0, 1, 0});
  CHECK(all_pos.accuracy == doctest::Approx(0.5));
  CHECK(all_pos.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(all_pos.tp == 2);
  CHECK(all_pos.fp == 2);
  CHECK(all_pos.tn == 0);
  CHECK(all_pos.fn == 0);

  const Metrics perfect = evaluate_metrics({0, 1, 1}, {0, 1, 1});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);

  // No positives anywhere: accuracy 1, f1 defined as 0.
  const Metrics none = evaluate_metrics({0, 0}, {0, 0});
  CHECK(none.accuracy == 1.0);
  CHECK(none.f1 == 0.0);

  CHECK_THROWS_AS(evaluate_metrics({0, 1}, {0}), ArgumentError);
  CHECK_THROWS_AS(evaluate_metrics({}, {}), ArgumentError);
  CHECK_THROWS_AS(evaluate_metrics({0, 2}, {0, 1}), ArgumentError);

  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<int> preds(static_cast<std::size_t>(n)), labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      preds[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
    }
    const Metrics got = evaluate_metrics(preds, labels);
    const Metrics want = oracle::metrics(preds, labels);
    CHECK(got.tp == want.tp);
    CHECK(got.fp == want.fp);
    CHECK(got.tn == want.tn);
    CHECK(got.fn == want.fn);
    CHECK(got.accuracy == doctest::Approx(want.accuracy).epsilon(1e-12));
    CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
  }
}

TEST_CASE("train_model validates its arguments and epochs=0 is a no-op") {
  const StannConfig c = tiny_config();
  const auto windows = toy_windows(c, 4, 3);
  StannModel model(c, 1);
  AdamState opt;
  Rng shuffle(1);

  CHECK_THROWS_AS(train_model(model, windows, {}, 1, 4, opt, shuffle), ArgumentError);
  CHECK_THROWS_AS(train_model(model, windows, {0, 1}, 1, 0, opt, shuffle), ArgumentError);
  CHECK_THROWS_AS(train_model(model, windows, {0, 1}, -1, 4, opt, shuffle), ArgumentError);

  model.set_mode(Mode::Eval);  // dropout off, so the forward is repeatable
  const Eigen::MatrixXd before = model.forward(make_batch(windows, {0, 1, 2, 3}));
  CHECK(train_model(model, windows, {0, 1, 2, 3}, 0, 4, opt, shuffle) == 0.0);
  CHECK(opt.t == 0);
  model.set_mode(Mode::Eval);
  const Eigen::MatrixXd after = model.forward(make_batch(windows, {0, 1, 2, 3}));
  CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("predict_indices matches whole-set prediction on the subset") {
  const StannConfig c = tiny_config();
  const auto windows = toy_windows(c, 7, 13);
  StannModel model(c, 21);

  const std::vector<int> all = {0, 1, 2, 3, 4, 5, 6};
  const std::vector<int> subset = {5, 2, 6};
  const std::vector<int> full = predict(model, windows, 3);
  const std::vector<int> part = predict_indices(model, windows, subset, 2);
  REQUIRE(part.size() == 3);
  CHECK(part[0] == full[5]);
  CHECK(part[1] == full[2]);
  CHECK(part[2] == full[6]);
}

TEST_CASE("cross-validated fit learns a separable toy problem") {
  const StannConfig c = tiny_config();
  const auto windows = toy_windows(c, 24, 17);
  const CvPlan plan = kfold_split(24, 4, 5);
  const FitResult result = fit(c, windows, fast_hyper(), plan);

  REQUIRE(result.folds.size() == 4);
  for (int f = 0; f < 4; ++f) {
    CHECK(result.folds[static_cast<std::size_t>(f)].fold == f);
    CHECK(result.folds[static_cast<std::size_t>(f)].repeat == 0);
    CHECK(result.folds[static_cast<std::size_t>(f)].metrics.accuracy == 1.0);
    CHECK(result.folds[static_cast<std::size_t>(f)].final_train_loss < 0.5);
  }
  CHECK(result.mean_accuracy == 1.0);
  CHECK(result.sd_accuracy == 0.0);
  CHECK(result.mean_f1 == 1.0);

  // Summary statistics recompute from the per-fold table.
  double mean = 0.0;
  for (const auto& fm : result.folds) mean += fm.metrics.f1;
  mean /= 4.0;
  CHECK(result.mean_f1 == doctest::Approx(mean).epsilon(1e-15));

  // Bitwise repeatability of the whole procedure.
  const FitResult again = fit(c, windows, fast_hyper(), plan);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(again.folds[i].metrics.accuracy == result.folds[i].metrics.accuracy);
    CHECK(again.folds[i].final_train_loss == result.folds[i].final_train_loss);
  }
}

TEST_CASE("repeats rerun the split with fresh fold assignments") {
  const StannConfig c = tiny_config();
  const auto windows = toy_windows(c, 16, 29);
  CvPlan plan = kfold_split(16, 2, 11);
  plan.repeats = 2;
  Hyper h = fast_hyper();
  h.epochs = 4;
  const FitResult result = fit(c, windows, h, plan);

  REQUIRE(result.folds.size() == 4);  // 2 repeats x 2 folds
  CHECK(result.folds[0].repeat == 0);
  CHECK(result.folds[1].repeat == 0);
  CHECK(result.folds[2].repeat == 1);
  CHECK(result.folds[3].repeat == 1);
  CHECK(result.folds[2].fold == 0);
  CHECK(result.folds[3].fold == 1);
}

TEST_CASE("fit rejects broken plans and degenerate folds") {
  const StannConfig c = tiny_config();
  const auto windows = toy_windows(c, 8, 41);
  const Hyper h = fast_hyper();

  CvPlan plan;
  plan.folds = {{0, 1, 2, 3, 4, 5, 6, 7}};
  CHECK_THROWS_AS(fit(c, windows, h, plan), ArgumentError);  // one fold

  plan.folds = {{0, 1, 2, 3}, {3, 4, 5, 6}};
  CHECK_THROWS_AS(fit(c, windows, h, plan), ArgumentError);  // overlap

  plan.folds = {{0, 1, 2}, {3, 4, 5}};
  CHECK_THROWS_AS(fit(c, windows, h, plan), ArgumentError);  // 6 and 7 missing

  plan.folds = {{0, 1, 2, 3}, {4, 5, 6, 8}};
  CHECK_THROWS_AS(fit(c, windows, h, plan), ArgumentError);  // out of range

  plan.folds = {{0, 1, 2, 3}, {4, 5, 6, 7}};
  plan.repeats = 0;
  CHECK_THROWS_AS(fit(c, windows, h, plan), ArgumentError);

  // A training fold that only ever sees one class is refused.
  auto lopsided = windows;
  for (std::size_t i = 0; i < lopsided.size(); ++i) lopsided[i].label = i == 0 ? 1 : 0;
  CvPlan degenerate;
  degenerate.folds = {{0}, {1, 2, 3, 4, 5, 6, 7}};
  CHECK_THROWS_AS(fit(c, lopsided, h, degenerate), DataError);
}
