#pragma once

#include <string>
#include <vector>

#include "stann/graph.hpp"
#include "stann/signal.hpp"

namespace stann {

// Preprocessing knobs applied to every trial before windowing. The order is
// fixed: graph smoothing (trial and pretrial), baseline correction, bandpass
// filtering, segmentation, rating binarization.
struct PipelineOptions {
  std::string band = "wide";   // theta|alpha|beta|gamma|wide, or "none" to skip
  int knn = 4;                 // 0 disables graph smoothing
  int bandwidth = 0;           // 0 means floor(n/2)
  double threshold = 0.0;      // 0 means the scale midpoint (5 on 1-9, 3 on 1-5)
  std::string dimension = "valence";
  double window_seconds = 1.0;
  bool baseline = true;
};

struct WindowSet {
  std::vector<LabeledWindow> windows;
  int n_channels = 0;
  int window_samples = 0;
  double fs = 0.0;
  double threshold_used = 0.0;
  int bandwidth_used = 0;  // 0 when smoothing is off
};

// Builds the sensor graph from the dataset montage (when knn > 0) and runs
// every trial through the preprocessing chain.
WindowSet make_windows(const Dataset& dataset, const PipelineOptions& options);

// Montage stored alongside a dataset.
Montage dataset_montage(const Dataset& dataset);

// Restrict a dataset to the named sensors (order defines the new channel
// order). Missing sensors raise a DataError naming each one.
Dataset select_channels(const Dataset& dataset, const std::vector<std::string>& labels);

}  // namespace stann
