#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stann/model.hpp"
#include "stann/train.hpp"

namespace stann {

// Blocks that stay frozen during fine-tuning.
struct FreezeScheme {
  std::string name;
  std::vector<std::string> frozen;
};

// Depth-ordered block list walked by the lettered presets.
std::vector<std::string> freeze_order();

// Presets a..e freeze a growing prefix of freeze_order(): 8, 9, 10, 11 and
// 12 blocks. Consecutive presets differ by exactly one block.
FreezeScheme freeze_preset(char name);

// Applies the scheme (listed blocks frozen, everything else trainable) and
// returns the retrainable parameter count. Unknown ids are ArgumentErrors.
long apply_scheme(StannModel& model, const FreezeScheme& scheme);

struct BudgetSpec {
  enum class Kind { OneTrialPerClass, Fraction };
  Kind kind = Kind::Fraction;
  double fraction = 0.1;

  std::string name() const;
};

// Accepts "1trial", "10pct", "20pct" or "90pct".
BudgetSpec parse_budget(const std::string& text);

struct BudgetSplit {
  std::vector<int> calibration;
  std::vector<int> test;
};

// Holds out a stratified 10% test set, then draws the calibration subset
// from the remainder: whole fractions of each class for fractional budgets
// (>= 90% takes the entire remainder), or every remaining window of one
// randomly chosen trial per class. Deterministic in the seed.
BudgetSplit select_budget(const std::vector<LabeledWindow>& windows, const BudgetSpec& budget,
                          std::uint64_t seed);

struct FinetuneConfig {
  double alpha = 0.1;    // update blend; the effective step rate is alpha * base_lr
  double base_lr = 1e-3;
  int epochs = 20;
  int patience = 0;      // 0 disables early stopping
  int batch = 300;
  bool use_sgd = false;  // plain descent instead of Adam
};

// Budget schedule: one epoch at one trial per class, twenty elsewhere,
// with patience 10 on the 90% budget.
FinetuneConfig finetune_config_for(const BudgetSpec& budget);

struct FinetuneResult {
  Metrics test_metrics;
  double final_loss = 0.0;
  int epochs_run = 0;
  long retrainable_params = 0;
};

// Fine-tunes the model on the calibration windows under the scheme and
// reports metrics on the held-out test windows.
FinetuneResult finetune(StannModel& model, const FreezeScheme& scheme,
                        const std::vector<LabeledWindow>& windows, const BudgetSplit& split,
                        const FinetuneConfig& config, std::uint64_t seed);

}  // namespace stann
