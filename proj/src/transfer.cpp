#include "stann/transfer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>

#include "stann/errors.hpp"

namespace stann {

std::vector<std::string> freeze_order() {
  return {"ste1.c1", "ste2.c1", "ste3.c1", "ste1.c2", "ste2.c2",
          "ste3.c2", "ste1.c3", "ste2.c3", "ste3.c3", "ste.merge",
          "ran.bilstm1", "ran.bilstm2", "ran.attention", "head.dense1", "head.dense2"};
}

FreezeScheme freeze_preset(char name) {
  if (name < 'a' || name > 'e') {
    throw ArgumentError("freeze preset: expected a letter in a..e");
  }
  const std::vector<std::string> order = freeze_order();
  FreezeScheme scheme;
  scheme.name = std::string(1, name);
  const int count = 8 + (name - 'a');
  scheme.frozen.assign(order.begin(), order.begin() + count);
  return scheme;
}

long apply_scheme(StannModel& model, const FreezeScheme& scheme) {
  for (const auto& id : model.block_ids()) model.set_trainable(id, true);
  for (const auto& id : scheme.frozen) model.set_trainable(id, false);
  return model.trainable_param_count();
}

std::string BudgetSpec::name() const {
  if (kind == Kind::OneTrialPerClass) return "1trial";
  return std::to_string(static_cast<int>(std::lround(fraction * 100.0))) + "pct";
}

BudgetSpec parse_budget(const std::string& text) {
  BudgetSpec spec;
  if (text == "1trial") {
    spec.kind = BudgetSpec::Kind::OneTrialPerClass;
    return spec;
  }
  if (text == "10pct" || text == "20pct" || text == "90pct") {
    spec.kind = BudgetSpec::Kind::Fraction;
    spec.fraction = (text == "10pct") ? 0.1 : (text == "20pct" ? 0.2 : 0.9);
    return spec;
  }
  throw ArgumentError("budget: expected 1trial, 10pct, 20pct or 90pct, got '" + text + "'");
}

BudgetSplit select_budget(const std::vector<LabeledWindow>& windows, const BudgetSpec& budget,
                          std::uint64_t seed) {
  std::array<std::vector<int>, 2> by_class;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const int y = windows[i].label;
    if (y != 0 && y != 1) throw DataError("budget: labels must be 0 or 1");
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<int>(i));
  }
  if (by_class[0].size() < 2 || by_class[1].size() < 2) {
    throw DataError("budget: need at least 2 windows of each class");
  }

  Rng rng(seed);
  BudgetSplit split;
  for (int y = 0; y < 2; ++y) {
    std::vector<int>& pool = by_class[static_cast<std::size_t>(y)];
    rng.shuffle(pool);
    const long n = static_cast<long>(pool.size());
    const long n_test = std::max(1L, std::lround(0.1 * static_cast<double>(n)));
    std::vector<int> remainder;
    for (long i = 0; i < n; ++i) {
      (i < n_test ? split.test : remainder).push_back(pool[static_cast<std::size_t>(i)]);
    }

    if (budget.kind == BudgetSpec::Kind::Fraction) {
      if (!(budget.fraction > 0.0) || budget.fraction > 0.9) {
        throw ArgumentError("budget: fraction must be in (0, 0.9]");
      }
      long want = std::lround(budget.fraction * static_cast<double>(n));
      if (budget.fraction >= 0.9) {
        want = static_cast<long>(remainder.size());  // the entire remainder
      } else if (want > static_cast<long>(remainder.size())) {
        throw ArgumentError("budget: " + budget.name() + " exceeds the available pool");
      }
      if (want < 1) throw ArgumentError("budget: too small, no calibration windows");
      split.calibration.insert(split.calibration.end(), remainder.begin(),
                               remainder.begin() + want);
    } else {
      std::map<std::string, std::vector<int>> trials;
      for (int idx : remainder) {
        trials[windows[static_cast<std::size_t>(idx)].trial_id].push_back(idx);
      }
      if (trials.empty()) throw DataError("budget: a class has no calibration trials");
      const std::size_t pick = static_cast<std::size_t>(rng.below(trials.size()));
      auto it = trials.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(pick));
      split.calibration.insert(split.calibration.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(split.calibration.begin(), split.calibration.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

FinetuneConfig finetune_config_for(const BudgetSpec& budget) {
  FinetuneConfig cfg;
  if (budget.kind == BudgetSpec::Kind::OneTrialPerClass) {
    cfg.epochs = 1;
  } else if (budget.fraction >= 0.9) {
    cfg.epochs = 20;
    cfg.patience = 10;
  } else {
    cfg.epochs = 20;
  }
  return cfg;
}

FinetuneResult finetune(StannModel& model, const FreezeScheme& scheme,
                        const std::vector<LabeledWindow>& windows, const BudgetSplit& split,
                        const FinetuneConfig& config, std::uint64_t seed) {
  if (split.calibration.empty() || split.test.empty()) {
    throw ArgumentError("finetune: empty calibration or test split");
  }
  if (config.alpha < 0.0 || config.alpha > 1.0) {
    throw ArgumentError("finetune: alpha must be in [0, 1]");
  }
  if (config.epochs < 0 || config.batch < 1 || config.patience < 0) {
    throw ArgumentError("finetune: bad epoch/batch/patience settings");
  }

  FinetuneResult result;
  result.retrainable_params = apply_scheme(model, scheme);

  // The blended update (1-a) p + a (p - lr g) collapses to a step of a*lr.
  const double effective_lr = config.alpha * config.base_lr;
  AdamState opt;
  opt.hyper.lr = effective_lr;

  Rng shuffle_rng(seed);
  std::vector<int> order = split.calibration;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      const std::vector<int> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      const ModelBatch batch = make_batch(windows, chunk);
      const std::vector<int> labels = gather_labels(windows, chunk);
      total += config.use_sgd ? model.train_step_sgd(batch, labels, effective_lr)
                              : model.train_step(batch, labels, opt);
      ++steps;
    }
    result.final_loss = total / std::max(1, steps);
    ++result.epochs_run;
    if (config.patience > 0) {
      if (result.final_loss < best - 1e-12) {
        best = result.final_loss;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }

  result.test_metrics = evaluate_metrics(predict_indices(model, windows, split.test),
                                         gather_labels(windows, split.test));
  return result;
}

}  // namespace stann
