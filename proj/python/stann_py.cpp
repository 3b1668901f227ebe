// Python bindings for the preprocessing pipeline and the training entry
// points. Arrays cross the boundary as numpy buffers; datasets stay on disk
// in the directory container format shared with the command line tool.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "stann/errors.hpp"
#include "stann/graph.hpp"
#include "stann/io.hpp"
#include "stann/model.hpp"
#include "stann/montage.hpp"
#include "stann/pipeline.hpp"
#include "stann/signal.hpp"
#include "stann/synthetic.hpp"
#include "stann/train.hpp"
#include "stann/transfer.hpp"

namespace py = pybind11;
using namespace stann;

namespace {

Montage montage_from_positions(const Eigen::MatrixXd& positions) {
  if (positions.cols() != 3) throw ArgumentError("positions must be an (n, 3) array");
  std::vector<Sensor> sensors;
  sensors.reserve(static_cast<std::size_t>(positions.rows()));
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    sensors.push_back({"P" + std::to_string(i), positions(i, 0), positions(i, 1),
                       positions(i, 2)});
  }
  return Montage(std::move(sensors));
}

PipelineOptions options_from_kwargs(const std::string& band, int knn, int bandwidth,
                                    double threshold, const std::string& dimension,
                                    double window_seconds, bool baseline) {
  PipelineOptions p;
  p.band = band;
  p.knn = knn;
  p.bandwidth = bandwidth;
  p.threshold = threshold;
  p.dimension = dimension;
  p.window_seconds = window_seconds;
  p.baseline = baseline;
  return p;
}

// (m, channels, samples) float32 array + labels -> windows.
std::vector<LabeledWindow> windows_from_arrays(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
    const py::array_t<int, py::array::c_style | py::array::forcecast>& y) {
  if (x.ndim() != 3) throw ArgumentError("x must be an (m, channels, samples) array");
  if (y.ndim() != 1 || y.shape(0) != x.shape(0)) {
    throw ArgumentError("y must be an (m,) array matching x");
  }
  const auto m = static_cast<std::size_t>(x.shape(0));
  const int n = static_cast<int>(x.shape(1));
  const int k = static_cast<int>(x.shape(2));
  std::vector<LabeledWindow> windows(m);
  const float* ptr = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    windows[i].label = y.at(i);
    windows[i].x.resize(n, k);
    for (int ch = 0; ch < n; ++ch) {
      for (int t = 0; t < k; ++t) {
        windows[i].x(ch, t) = ptr[(i * n + ch) * static_cast<std::size_t>(k) + t];
      }
    }
  }
  return windows;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["f1"] = m.f1;
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["tn"] = m.tn;
  d["fn"] = m.fn;
  return d;
}

StannConfig config_for_shape(int n_channels, int timesteps) {
  StannConfig config;
  config.n_channels = n_channels;
  config.timesteps = timesteps;
  config.validate();
  return config;
}

}  // namespace

PYBIND11_MODULE(_stann, m) {
  m.doc() = "Graph-smoothed preprocessing and hybrid attention networks";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("ring_montage",
        [](int n) {
          const Montage montage = ring_montage(n);
          return py::make_tuple(montage.labels(), montage.positions());
        },
        py::arg("n"), "Evenly spaced sensor band; returns (labels, positions)");

  m.def("knn_graph",
        [](const Eigen::MatrixXd& positions, int k) {
          const SensorGraph g = build_knn_adjacency(montage_from_positions(positions), k);
          py::dict d;
          d["adjacency"] = g.adjacency;
          d["laplacian"] = g.laplacian;
          d["eigenvalues"] = g.eigenvalues;
          d["eigenvectors"] = g.eigenvectors;
          return d;
        },
        py::arg("positions"), py::arg("k"),
        "k-NN sensor graph with its Laplacian eigendecomposition");

  m.def("lowpass_smooth",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& positions, int k, int bandwidth) {
          const SensorGraph g = build_knn_adjacency(montage_from_positions(positions), k);
          const int w = bandwidth > 0 ? bandwidth : default_bandwidth(g.n);
          return lowpass_smooth(x, g, w);
        },
        py::arg("x"), py::arg("positions"), py::arg("k") = 4, py::arg("bandwidth") = 0,
        "Project the (channels, samples) signal onto the smooth graph subspace");

  m.def("bandpass",
        [](const Eigen::MatrixXd& x, const std::string& band, double fs) {
          return bandpass_filter(x, band_by_name(band), fs);
        },
        py::arg("x"), py::arg("band"), py::arg("fs"),
        "Zero-phase band-pass over each row; band is theta/alpha/beta/gamma/wide");

  m.def("generate_synthetic",
        [](const std::string& out_dir, int channels, int trials, double fs,
           double trial_seconds, double pretrial_seconds, double tone_hz, double effect,
           double noise_sd, int scale_max, std::uint64_t seed) {
          SyntheticSpec spec;
          spec.n_channels = channels;
          spec.n_trials = trials;
          spec.fs = fs;
          spec.trial_seconds = trial_seconds;
          spec.pretrial_seconds = pretrial_seconds;
          spec.tone_hz = tone_hz;
          spec.class_effect = effect;
          spec.noise_sd = noise_sd;
          spec.scale_max = scale_max;
          write_dataset(generate_synthetic(spec, seed), out_dir);
          return trials;
        },
        py::arg("out_dir"), py::arg("channels") = 8, py::arg("trials") = 40,
        py::arg("fs") = 32.0, py::arg("trial_seconds") = 8.0,
        py::arg("pretrial_seconds") = 3.0, py::arg("tone_hz") = 6.0,
        py::arg("effect") = 2.0, py::arg("noise_sd") = 1.0, py::arg("scale_max") = 9,
        py::arg("seed") = 1,
        "Write a two-class synthetic dataset into out_dir; returns the trial count");

  m.def("make_windows",
        [](const std::string& dataset_dir, const std::string& band, int knn, int bandwidth,
           double threshold, const std::string& dimension, double window_seconds,
           bool baseline) {
          const Dataset dataset = read_dataset(dataset_dir);
          const WindowSet ws =
              make_windows(dataset, options_from_kwargs(band, knn, bandwidth, threshold,
                                                        dimension, window_seconds, baseline));
          const auto m = ws.windows.size();
          const int n = ws.n_channels;
          const int k = ws.window_samples;
          py::array_t<float> x({static_cast<py::ssize_t>(m), static_cast<py::ssize_t>(n),
                                static_cast<py::ssize_t>(k)});
          py::array_t<int> y(static_cast<py::ssize_t>(m));
          float* xp = x.mutable_data();
          int* yp = y.mutable_data();
          for (std::size_t i = 0; i < m; ++i) {
            yp[i] = ws.windows[i].label;
            for (int ch = 0; ch < n; ++ch) {
              for (int t = 0; t < k; ++t) {
                xp[(i * static_cast<std::size_t>(n) + ch) * static_cast<std::size_t>(k) + t] =
                    ws.windows[i].x(ch, t);
              }
            }
          }
          py::dict meta;
          meta["n_channels"] = n;
          meta["window_samples"] = k;
          meta["fs"] = ws.fs;
          meta["threshold_used"] = ws.threshold_used;
          meta["bandwidth_used"] = ws.bandwidth_used;
          return py::make_tuple(x, y, meta);
        },
        py::arg("dataset_dir"), py::arg("band") = "wide", py::arg("knn") = 4,
        py::arg("bandwidth") = 0, py::arg("threshold") = 0.0,
        py::arg("dimension") = "valence", py::arg("window_seconds") = 1.0,
        py::arg("baseline") = true,
        "Run the preprocessing pipeline; returns (x, y, meta)");

  m.def("fit_cv",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y, int epochs,
           int batch, double lr, int folds, int repeats, std::uint64_t seed) {
          const auto windows = windows_from_arrays(x, y);
          Hyper hyper;
          hyper.epochs = epochs;
          hyper.batch = batch;
          hyper.optimizer.lr = lr;
          hyper.seed = seed;
          CvPlan plan = kfold_split(static_cast<int>(windows.size()), folds, seed);
          plan.repeats = repeats;
          const FitResult result =
              fit(config_for_shape(static_cast<int>(x.shape(1)),
                                   static_cast<int>(x.shape(2))),
                  windows, hyper, plan);
          py::dict d;
          d["mean_accuracy"] = result.mean_accuracy;
          d["sd_accuracy"] = result.sd_accuracy;
          d["mean_f1"] = result.mean_f1;
          d["sd_f1"] = result.sd_f1;
          py::list fold_rows;
          for (const auto& f : result.folds) {
            py::dict row = metrics_dict(f.metrics);
            row["repeat"] = f.repeat;
            row["fold"] = f.fold;
            row["final_train_loss"] = f.final_train_loss;
            fold_rows.append(row);
          }
          d["folds"] = fold_rows;
          return d;
        },
        py::arg("x"), py::arg("y"), py::arg("epochs") = 50, py::arg("batch") = 300,
        py::arg("lr") = 1e-3, py::arg("folds") = 10, py::arg("repeats") = 1,
        py::arg("seed") = 1, "Cross-validated training on (m, channels, samples) windows");

  m.def("train_full",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y,
           const std::string& checkpoint_path, int epochs, int batch, double lr,
           std::uint64_t seed) {
          const auto windows = windows_from_arrays(x, y);
          StannModel model(config_for_shape(static_cast<int>(x.shape(1)),
                                            static_cast<int>(x.shape(2))),
                           seed);
          AdamState opt;
          opt.hyper.lr = lr;
          Rng shuffle_rng(seed + 0x5eed);
          std::vector<int> all(windows.size());
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
          const double loss = train_model(model, windows, all, epochs, batch, opt, shuffle_rng);
          write_checkpoint(model, &opt, checkpoint_path);
          return loss;
        },
        py::arg("x"), py::arg("y"), py::arg("checkpoint_path"), py::arg("epochs") = 50,
        py::arg("batch") = 300, py::arg("lr") = 1e-3, py::arg("seed") = 1,
        "Train on every window and save a checkpoint; returns the final epoch loss");

  m.def("evaluate",
        [](const std::string& checkpoint_path,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y) {
          const auto windows = windows_from_arrays(x, y);
          StannModel model = read_checkpoint(checkpoint_path);
          if (model.config().n_channels != static_cast<int>(x.shape(1)) ||
              model.config().timesteps != static_cast<int>(x.shape(2))) {
            throw DataError("checkpoint window shape does not match the data");
          }
          std::vector<int> idx(windows.size());
          for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
          return metrics_dict(
              evaluate_metrics(predict_indices(model, windows, idx), gather_labels(windows, idx)));
        },
        py::arg("checkpoint_path"), py::arg("x"), py::arg("y"),
        "Evaluate a checkpoint on (m, channels, samples) windows");

  m.def("finetune",
        [](const std::string& checkpoint_path,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& y,
           char scheme, const std::string& budget, double alpha, double lr,
           std::uint64_t seed, const std::string& save_path) {
          const auto windows = windows_from_arrays(x, y);
          StannModel model = read_checkpoint(checkpoint_path);
          const BudgetSpec spec = parse_budget(budget);
          const BudgetSplit split = select_budget(windows, spec, seed);
          FinetuneConfig config = finetune_config_for(spec);
          config.alpha = alpha;
          config.base_lr = lr;
          const FinetuneResult result =
              finetune(model, freeze_preset(scheme), windows, split, config, seed);
          if (!save_path.empty()) write_checkpoint(model, nullptr, save_path);
          py::dict d = metrics_dict(result.test_metrics);
          d["final_loss"] = result.final_loss;
          d["epochs_run"] = result.epochs_run;
          d["retrainable_params"] = result.retrainable_params;
          d["calibration_windows"] = split.calibration.size();
          d["test_windows"] = split.test.size();
          return d;
        },
        py::arg("checkpoint_path"), py::arg("x"), py::arg("y"), py::arg("scheme") = 'a',
        py::arg("budget") = "10pct", py::arg("alpha") = 0.1, py::arg("lr") = 1e-3,
        py::arg("seed") = 1, py::arg("save_path") = "",
        "Fine-tune a checkpoint under a freeze preset and calibration budget");

  m.def("parameter_table", [](int n_channels, int timesteps) {
          StannModel model(config_for_shape(n_channels, timesteps), 1);
          py::list rows;
          for (const auto& r : model.parameter_table()) {
            py::dict row;
            row["name"] = r.name;
            row["kind"] = r.kind;
            row["output_shape"] = r.output_shape;
            row["params"] = r.table_params;
            row["trainable_params"] = r.trainable_params;
            rows.append(row);
          }
          return rows;
        },
        py::arg("n_channels") = 32, py::arg("timesteps") = 128,
        "Layer-by-layer inventory of the network for the given window shape");
}
