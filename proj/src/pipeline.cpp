#include "stann/pipeline.hpp"

#include <cmath>

#include "stann/errors.hpp"

namespace stann {

Montage dataset_montage(const Dataset& dataset) {
  std::vector<Sensor> sensors;
  if (dataset.sensor_positions.rows() != static_cast<Eigen::Index>(dataset.sensor_labels.size())) {
    throw DataError("dataset: sensor label/position count mismatch");
  }
  for (std::size_t i = 0; i < dataset.sensor_labels.size(); ++i) {
    const auto row = dataset.sensor_positions.row(static_cast<Eigen::Index>(i));
    sensors.push_back({dataset.sensor_labels[i], row(0), row(1), row(2)});
  }
  return Montage(std::move(sensors));
}

Dataset select_channels(const Dataset& dataset, const std::vector<std::string>& labels) {
  const Montage montage = dataset_montage(dataset);
  const Montage picked = montage.subset(labels);  // throws naming missing sensors

  std::vector<Eigen::Index> rows;
  rows.reserve(labels.size());
  for (const auto& label : labels) {
    rows.push_back(montage.index_of(label));
  }

  Dataset out = dataset;
  out.sensor_labels = picked.labels();
  out.sensor_positions = picked.positions();
  for (auto& trial : out.trials) {
    Eigen::MatrixXf pre(static_cast<Eigen::Index>(rows.size()), trial.pretrial.cols());
    Eigen::MatrixXf data(static_cast<Eigen::Index>(rows.size()), trial.data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      pre.row(static_cast<Eigen::Index>(i)) = trial.pretrial.row(rows[i]);
      data.row(static_cast<Eigen::Index>(i)) = trial.data.row(rows[i]);
    }
    trial.pretrial = std::move(pre);
    trial.data = std::move(data);
  }
  return out;
}

WindowSet make_windows(const Dataset& dataset, const PipelineOptions& options) {
  if (dataset.trials.empty()) throw DataError("pipeline: dataset has no trials");
  const int n = static_cast<int>(dataset.sensor_labels.size());
  if (n < 2) throw DataError("pipeline: dataset montage too small");
  if (!(dataset.fs > 0.0)) throw DataError("pipeline: dataset sampling rate missing");
  if (options.dimension != "valence" && options.dimension != "arousal" &&
      options.dimension != "dominance") {
    throw ArgumentError("pipeline: unknown rating dimension '" + options.dimension + "'");
  }
  if (!(options.window_seconds > 0.0)) {
    throw ArgumentError("pipeline: window length must be positive");
  }

  const bool smoothing = options.knn > 0;
  SensorGraph graph;
  int bandwidth = 0;
  if (smoothing) {
    graph = build_knn_adjacency(dataset_montage(dataset), options.knn);
    bandwidth = options.bandwidth > 0 ? options.bandwidth : default_bandwidth(n);
    if (bandwidth > n) throw ArgumentError("pipeline: bandwidth exceeds channel count");
  }

  const bool filtering = options.band != "none";
  BandSpec band;
  if (filtering) band = band_by_name(options.band);

  const double threshold =
      options.threshold > 0.0 ? options.threshold : default_threshold(dataset.scale_max);
  const int k = static_cast<int>(std::lround(options.window_seconds * dataset.fs));
  if (k < 4) throw ArgumentError("pipeline: window too short for this sampling rate");

  WindowSet out;
  out.n_channels = n;
  out.window_samples = k;
  out.fs = dataset.fs;
  out.threshold_used = threshold;
  out.bandwidth_used = bandwidth;

  for (const auto& trial : dataset.trials) {
    if (trial.data.rows() != n || trial.pretrial.rows() != n) {
      throw DataError("pipeline: trial '" + trial.trial_id + "' channel count mismatch");
    }
    const auto rating = trial.ratings.find(options.dimension);
    if (rating == trial.ratings.end()) {
      throw DataError("pipeline: trial '" + trial.trial_id + "' lacks a '" +
                      options.dimension + "' rating");
    }

    TrialRecording work = trial;
    if (smoothing) {
      work.data = lowpass_smooth(trial.data.cast<double>(), graph, bandwidth).cast<float>();
      work.pretrial =
          lowpass_smooth(trial.pretrial.cast<double>(), graph, bandwidth).cast<float>();
    }
    if (options.baseline) work = baseline_correct(work);
    Eigen::MatrixXf prepared = work.data;
    if (filtering) {
      prepared = bandpass_filter(prepared.cast<double>(), band, dataset.fs).cast<float>();
    }

    const int label = binarize_rating(rating->second, threshold);
    for (auto& piece : segment_trial(prepared, k)) {
      LabeledWindow w;
      w.x = std::move(piece);
      w.label = label;
      w.subject_id = trial.subject_id;
      w.trial_id = trial.trial_id;
      out.windows.push_back(std::move(w));
    }
  }
  if (out.windows.empty()) throw DataError("pipeline: no windows produced");
  return out;
}

}  // namespace stann
