#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stann/model.hpp"
#include "stann/nn/optimizer.hpp"
#include "stann/signal.hpp"

namespace stann {

// Deterministic k-fold partition of item indices.
struct CvPlan {
  std::vector<std::vector<int>> folds;
  std::uint64_t seed = 0;
  int repeats = 1;  // extra repetitions reshuffle with seed+r
};

CvPlan kfold_split(int n_items, int n_folds, std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class; 0 when the class is never present nor predicted
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

Metrics evaluate_metrics(const std::vector<int>& predictions, const std::vector<int>& labels);

// Training hyperparameters, including the preprocessing fields echoed into
// result provenance.
struct Hyper {
  int epochs = 50;
  int batch = 300;
  AdamHyper optimizer;
  std::uint64_t seed = 0;
  std::string band = "wide";
  int knn = 4;
  int bandwidth = 0;
};

struct FoldMetrics {
  int repeat = 0;
  int fold = 0;
  Metrics metrics;
  double final_train_loss = 0.0;
};

struct FitResult {
  std::vector<FoldMetrics> folds;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
  double mean_f1 = 0.0;
  double sd_f1 = 0.0;
};

// Cross-validated training: a fresh model per fold from the same seed,
// shuffled mini-batches, argmax evaluation on the held-out fold. Training
// and evaluation index sets are asserted disjoint; a training fold missing
// one of the classes is an error.
FitResult fit(const StannConfig& config, const std::vector<LabeledWindow>& windows,
              const Hyper& hyper, const CvPlan& plan);

// Mini-batch training of one model over the given window indices.
// Returns the mean loss of the last epoch.
double train_model(StannModel& model, const std::vector<LabeledWindow>& windows,
                   const std::vector<int>& indices, int epochs, int batch,
                   AdamState& opt, Rng& shuffle_rng);

// Argmax predictions restricted to the given indices, in eval mode.
std::vector<int> predict_indices(StannModel& model, const std::vector<LabeledWindow>& windows,
                                 const std::vector<int>& indices, int eval_batch = 256);

}  // namespace stann
