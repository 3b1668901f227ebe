#include "stann/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stann/errors.hpp"

namespace stann {

CvPlan kfold_split(int n_items, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ArgumentError("kfold: need at least 2 folds");
  if (n_items < n_folds) {
    throw ArgumentError("kfold: " + std::to_string(n_items) + " items cannot fill " +
                        std::to_string(n_folds) + " folds");
  }
  std::vector<int> order(static_cast<std::size_t>(n_items));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  CvPlan plan;
  plan.seed = seed;
  plan.folds.assign(static_cast<std::size_t>(n_folds), {});
  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.folds[i % static_cast<std::size_t>(n_folds)].push_back(order[i]);
  }
  return plan;
}

Metrics evaluate_metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw ArgumentError("metrics: prediction/label size mismatch");
  }
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
      throw ArgumentError("metrics: predictions and labels must be 0 or 1");
    }
    if (p == 1 && y == 1) ++m.tp;
    else if (p == 1 && y == 0) ++m.fp;
    else if (p == 0 && y == 0) ++m.tn;
    else ++m.fn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(labels.size());
  const double denom = 2.0 * m.tp + m.fp + m.fn;
  m.f1 = denom > 0.0 ? 2.0 * m.tp / denom : 0.0;
  return m;
}

double train_model(StannModel& model, const std::vector<LabeledWindow>& windows,
                   const std::vector<int>& indices, int epochs, int batch,
                   AdamState& opt, Rng& shuffle_rng) {
  if (epochs < 0) throw ArgumentError("train: epoch count must be nonnegative");
  if (batch < 1) throw ArgumentError("train: batch size must be positive");
  if (indices.empty()) throw ArgumentError("train: no training indices");

  std::vector<int> order = indices;
  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
      const std::vector<int> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      total += model.train_step(make_batch(windows, chunk), gather_labels(windows, chunk), opt);
      ++steps;
    }
    last_epoch_loss = total / std::max(1, steps);
  }
  return last_epoch_loss;
}

std::vector<int> predict_indices(StannModel& model, const std::vector<LabeledWindow>& windows,
                                 const std::vector<int>& indices, int eval_batch) {
  model.set_mode(Mode::Eval);
  std::vector<int> predictions;
  predictions.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size();
       start += static_cast<std::size_t>(eval_batch)) {
    const std::size_t stop = std::min(indices.size(), start + static_cast<std::size_t>(eval_batch));
    const std::vector<int> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                 indices.begin() + static_cast<std::ptrdiff_t>(stop));
    const Eigen::MatrixXd probs = model.forward(make_batch(windows, chunk));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      predictions.push_back(probs(r, 1) > probs(r, 0) ? 1 : 0);
    }
  }
  return predictions;
}

namespace {

void check_partition(const CvPlan& plan, std::size_t n_items) {
  std::vector<char> seen(n_items, 0);
  for (const auto& fold : plan.folds) {
    for (int idx : fold) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= n_items) {
        throw ArgumentError("fit: fold index out of range");
      }
      if (seen[static_cast<std::size_t>(idx)]) {
        throw ArgumentError("fit: index appears in more than one fold");
      }
      seen[static_cast<std::size_t>(idx)] = 1;
    }
  }
  for (char c : seen) {
    if (!c) throw ArgumentError("fit: folds do not cover every window");
  }
}

}  // namespace

FitResult fit(const StannConfig& config, const std::vector<LabeledWindow>& windows,
              const Hyper& hyper, const CvPlan& plan) {
  if (plan.folds.size() < 2) throw ArgumentError("fit: need at least 2 folds");
  if (plan.repeats < 1) throw ArgumentError("fit: repeat count must be positive");
  check_partition(plan, windows.size());

  FitResult result;
  const int n_folds = static_cast<int>(plan.folds.size());
  for (int repeat = 0; repeat < plan.repeats; ++repeat) {
    const CvPlan current = repeat == 0
                               ? plan
                               : kfold_split(static_cast<int>(windows.size()), n_folds,
                                             plan.seed + static_cast<std::uint64_t>(repeat));
    for (int f = 0; f < n_folds; ++f) {
      const std::vector<int>& eval_idx = current.folds[static_cast<std::size_t>(f)];
      std::vector<int> train_idx;
      for (int g = 0; g < n_folds; ++g) {
        if (g == f) continue;
        const auto& fold = current.folds[static_cast<std::size_t>(g)];
        train_idx.insert(train_idx.end(), fold.begin(), fold.end());
      }

      // No-leakage assertion: the two index sets must be disjoint.
      std::vector<char> in_eval(windows.size(), 0);
      for (int idx : eval_idx) in_eval[static_cast<std::size_t>(idx)] = 1;
      for (int idx : train_idx) {
        if (in_eval[static_cast<std::size_t>(idx)]) {
          throw ArgumentError("fit: training fold leaks into the evaluation fold");
        }
      }

      bool has0 = false, has1 = false;
      for (int idx : train_idx) {
        (windows[static_cast<std::size_t>(idx)].label == 1 ? has1 : has0) = true;
      }
      if (!has0 || !has1) {
        throw DataError("fit: fold " + std::to_string(f) + " trains on a single class");
      }

      StannModel model(config, hyper.seed);
      AdamState opt;
      opt.hyper = hyper.optimizer;
      Rng shuffle_rng(hyper.seed ^
                      (0x9E3779B97F4A7C15ULL *
                       static_cast<std::uint64_t>(repeat * n_folds + f + 1)));
      const double loss =
          train_model(model, windows, train_idx, hyper.epochs, hyper.batch, opt, shuffle_rng);

      FoldMetrics fm;
      fm.repeat = repeat;
      fm.fold = f;
      fm.final_train_loss = loss;
      fm.metrics =
          evaluate_metrics(predict_indices(model, windows, eval_idx), gather_labels(windows, eval_idx));
      result.folds.push_back(fm);
    }
  }

  const double n = static_cast<double>(result.folds.size());
  for (const auto& fm : result.folds) {
    result.mean_accuracy += fm.metrics.accuracy;
    result.mean_f1 += fm.metrics.f1;
  }
  result.mean_accuracy /= n;
  result.mean_f1 /= n;
  if (result.folds.size() > 1) {
    double va = 0.0, vf = 0.0;
    for (const auto& fm : result.folds) {
      va += std::pow(fm.metrics.accuracy - result.mean_accuracy, 2);
      vf += std::pow(fm.metrics.f1 - result.mean_f1, 2);
    }
    result.sd_accuracy = std::sqrt(va / (n - 1.0));
    result.sd_f1 = std::sqrt(vf / (n - 1.0));
  }
  return result;
}

}  // namespace stann
