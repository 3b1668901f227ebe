// Command line front end: preprocessing, training, transfer and inspection
// over the dataset container format. Exit codes: 0 success, 2 bad arguments,
// 3 bad data, 4 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stann/errors.hpp"
#include "stann/graph.hpp"
#include "stann/io.hpp"
#include "stann/model.hpp"
#include "stann/pipeline.hpp"
#include "stann/synthetic.hpp"
#include "stann/train.hpp"
#include "stann/transfer.hpp"

namespace {

using nlohmann::ordered_json;
using namespace stann;

// Json config file overriding a subcommand's defaults. Values apply only to
// options the user did not pass explicitly, so the precedence is
// defaults < config file < command line. Unknown keys are rejected.
class ConfigFile {
 public:
  explicit ConfigFile(CLI::App* sub) : sub_(sub) {
    sub->add_option("--config", path_,
                    "Json config file overriding defaults (explicit flags win)");
  }

  template <typename T>
  void key(const std::string& name, const std::string& flag, T* target) {
    entries_[name] = {flag, [target](const ordered_json& v) { *target = v.get<T>(); }};
  }

  void apply() const {
    if (path_.empty()) return;
    std::ifstream in(path_);
    if (!in) throw ArgumentError("config: cannot open " + path_);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
    } catch (const std::exception& e) {
      throw ArgumentError("config: bad json in " + path_ + ": " + e.what());
    }
    if (!j.is_object()) throw ArgumentError("config: expected a json object in " + path_);
    for (const auto& [name, value] : j.items()) {
      const auto it = entries_.find(name);
      if (it == entries_.end()) {
        throw ArgumentError("config: unknown key '" + name + "' in " + path_);
      }
      const CLI::Option* opt = sub_->get_option_no_throw(it->second.flag);
      if (opt != nullptr && opt->count() > 0) continue;
      try {
        it->second.set(value);
      } catch (const std::exception& e) {
        throw ArgumentError("config: bad value for '" + name + "': " + e.what());
      }
    }
  }

 private:
  struct Entry {
    std::string flag;
    std::function<void(const ordered_json&)> set;
  };
  CLI::App* sub_;
  std::string path_;
  std::map<std::string, Entry> entries_;
};

void add_pipeline_flags(CLI::App* sub, ConfigFile& cfg, PipelineOptions& p) {
  sub->add_option("--band", p.band, "Passband: theta, alpha, beta, gamma, wide or none")
      ->check(CLI::IsMember({"theta", "alpha", "beta", "gamma", "wide", "none"}));
  sub->add_option("--knn", p.knn, "Graph neighbours per sensor; 0 disables smoothing")
      ->check(CLI::Range(0, 4096));
  sub->add_option("--bandwidth", p.bandwidth,
                  "Retained graph frequencies; 0 means half the sensor count")
      ->check(CLI::Range(0, 4096));
  sub->add_option("--threshold", p.threshold,
                  "Rating cut for the high class; 0 means the scale midpoint");
  sub->add_option("--dimension", p.dimension, "Rating dimension to binarize");
  sub->add_option("--window-seconds", p.window_seconds, "Window length in seconds");
  sub->add_flag("--baseline,!--no-baseline", p.baseline, "Pretrial mean subtraction");
  cfg.key("band", "--band", &p.band);
  cfg.key("knn", "--knn", &p.knn);
  cfg.key("bandwidth", "--bandwidth", &p.bandwidth);
  cfg.key("threshold", "--threshold", &p.threshold);
  cfg.key("dimension", "--dimension", &p.dimension);
  cfg.key("window_seconds", "--window-seconds", &p.window_seconds);
  cfg.key("baseline", "--baseline", &p.baseline);
}

ordered_json pipeline_provenance(const std::string& command, const std::string& input,
                                 const PipelineOptions& p, const WindowSet* ws) {
  ordered_json j;
  j["command"] = command;
  if (!input.empty()) j["input"] = input;
  j["band"] = p.band;
  j["knn"] = p.knn;
  j["bandwidth"] = ws != nullptr ? ws->bandwidth_used : p.bandwidth;
  j["threshold"] = ws != nullptr ? ws->threshold_used : p.threshold;
  j["dimension"] = p.dimension;
  j["window_seconds"] = p.window_seconds;
  j["baseline"] = p.baseline;
  if (ws != nullptr) {
    j["window_samples"] = ws->window_samples;
    j["n_channels"] = ws->n_channels;
    j["n_windows"] = ws->windows.size();
  }
  return j;
}

void emit_report(const ordered_json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream f(out);
    if (!f) throw DataError("cannot write " + out);
    f << j.dump(2) << "\n";
    std::cout << "wrote " << out << "\n";
  }
}

StannConfig config_for(const Dataset& dataset, const WindowSet& ws) {
  StannConfig config;
  config.n_channels = ws.n_channels;
  config.timesteps = ws.window_samples;
  config.sensor_labels = dataset.sensor_labels;
  config.validate();
  return config;
}

ordered_json metrics_json(const Metrics& m) {
  return ordered_json{{"accuracy", m.accuracy}, {"f1", m.f1}, {"tp", m.tp},
                      {"fp", m.fp},             {"tn", m.tn}, {"fn", m.fn}};
}

FreezeScheme scheme_from_arg(const std::string& arg) {
  if (arg.size() == 1 && arg[0] >= 'a' && arg[0] <= 'e') return freeze_preset(arg[0]);
  std::ifstream in(arg);
  if (!in) {
    throw ArgumentError("scheme: expected a..e or a readable json file, got '" + arg + "'");
  }
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ArgumentError("scheme: bad json in " + arg + ": " + e.what());
  }
  FreezeScheme scheme;
  if (j.is_array()) {
    scheme.name = std::filesystem::path(arg).stem().string();
    scheme.frozen = j.get<std::vector<std::string>>();
  } else {
    scheme.name = j.value("name", std::filesystem::path(arg).stem().string());
    scheme.frozen = j.at("frozen").get<std::vector<std::string>>();
  }
  return scheme;
}

void setup_graph(CLI::App& app) {
  auto* sub = app.add_subcommand("graph", "Report the k-NN sensor graph of a montage");
  struct Args {
    std::string montage;
    int knn = 4;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--montage", a->montage, "Montage csv (label,x,y,z)")->required();
  sub->add_option("--knn", a->knn, "Neighbours per sensor")->check(CLI::Range(1, 4096));
  sub->add_option("--out", a->out, "Report destination (default stdout)");
  cfg->key("knn", "--knn", &a->knn);
  sub->callback([a, cfg] {
    cfg->apply();
    const Montage montage = Montage::from_csv(a->montage);
    const SensorGraph graph = build_knn_adjacency(montage, a->knn);
    long edges = 0;
    for (int i = 0; i < graph.n; ++i) {
      for (int j = i + 1; j < graph.n; ++j) {
        if (graph.adjacency(i, j) != 0.0) ++edges;
      }
    }
    ordered_json j;
    j["command"] = "graph";
    j["montage"] = a->montage;
    j["sensors"] = graph.n;
    j["knn"] = a->knn;
    j["edges"] = edges;
    j["default_bandwidth"] = default_bandwidth(graph.n);
    j["labels"] = montage.labels();
    const Eigen::VectorXd degrees = graph.adjacency.rowwise().sum();
    j["degrees"] = std::vector<double>(degrees.data(), degrees.data() + graph.n);
    j["eigenvalues"] =
        std::vector<double>(graph.eigenvalues.data(), graph.eigenvalues.data() + graph.n);
    ordered_json adj = ordered_json::array();
    for (int i = 0; i < graph.n; ++i) {
      const Eigen::VectorXd row = graph.adjacency.row(i);
      adj.push_back(std::vector<double>(row.data(), row.data() + graph.n));
    }
    j["adjacency"] = adj;
    emit_report(j, a->out);
  });
}

void setup_smooth(CLI::App& app) {
  auto* sub = app.add_subcommand("smooth", "Graph-smooth every trial of a dataset");
  struct Args {
    std::string in;
    std::string out;
    int knn = 4;
    int bandwidth = 0;
  };
  auto a = std::make_shared<Args>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--in", a->in, "Input dataset directory")->required();
  sub->add_option("--out", a->out, "Output dataset directory")->required();
  sub->add_option("--knn", a->knn, "Neighbours per sensor")->check(CLI::Range(1, 4096));
  sub->add_option("--bandwidth", a->bandwidth,
                  "Retained graph frequencies; 0 means half the sensor count")
      ->check(CLI::Range(0, 4096));
  cfg->key("knn", "--knn", &a->knn);
  cfg->key("bandwidth", "--bandwidth", &a->bandwidth);
  sub->callback([a, cfg] {
    cfg->apply();
    Dataset dataset = read_dataset(a->in);
    const Montage montage = dataset_montage(dataset);
    const SensorGraph graph = build_knn_adjacency(montage, a->knn);
    const int bw = a->bandwidth > 0 ? a->bandwidth : default_bandwidth(graph.n);
    for (TrialRecording& trial : dataset.trials) {
      trial.data = lowpass_smooth(trial.data.cast<double>(), graph, bw).cast<float>();
      trial.pretrial =
          lowpass_smooth(trial.pretrial.cast<double>(), graph, bw).cast<float>();
    }
    write_dataset(dataset, a->out);
    std::cout << "smoothed " << dataset.trials.size() << " trials (knn " << a->knn
              << ", bandwidth " << bw << ") into " << a->out << "\n";
  });
}

void setup_segment(CLI::App& app) {
  auto* sub = app.add_subcommand("segment", "Window a dataset and report label balance");
  struct Args {
    std::string in;
    std::string out;
    PipelineOptions pipe;
  };
  auto a = std::make_shared<Args>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--in", a->in, "Input dataset directory")->required();
  sub->add_option("--out", a->out, "Report destination (default stdout)");
  add_pipeline_flags(sub, *cfg, a->pipe);
  sub->callback([a, cfg] {
    cfg->apply();
    const Dataset dataset = read_dataset(a->in);
    const WindowSet ws = make_windows(dataset, a->pipe);
    long high = 0;
    for (const auto& w : ws.windows) high += w.label;
    ordered_json j = pipeline_provenance("segment", a->in, a->pipe, &ws);
    j["windows_high"] = high;
    j["windows_low"] = static_cast<long>(ws.windows.size()) - high;
    j["fs"] = ws.fs;
    emit_report(j, a->out);
  });
}

void setup_synth(CLI::App& app) {
  auto* sub = app.add_subcommand("synth", "Generate the synthetic two-class dataset");
  struct Args {
    std::string out;
    SyntheticSpec spec;
    std::uint64_t seed = 1;
  };
  auto a = std::make_shared<Args>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--out", a->out, "Output dataset directory")->required();
  sub->add_option("--channels", a->spec.n_channels, "Sensors on the ring montage")
      ->check(CLI::Range(2, 4096));
  sub->add_option("--fs", a->spec.fs, "Sampling rate in Hz");
  sub->add_option("--trials", a->spec.n_trials, "Trial count, split between classes");
  sub->add_option("--trial-seconds", a->spec.trial_seconds, "Trial length");
  sub->add_option("--pretrial-seconds", a->spec.pretrial_seconds, "Pretrial length");
  sub->add_option("--tone-hz", a->spec.tone_hz, "Class tone frequency");
  sub->add_option("--effect", a->spec.class_effect, "Tone amplitude at the focus sensor");
  sub->add_option("--noise-sd", a->spec.noise_sd, "Pink noise scale");
  sub->add_option("--scale-max", a->spec.scale_max, "Rating scale upper bound");
  sub->add_option("--seed", a->seed, "Generator seed");
  cfg->key("channels", "--channels", &a->spec.n_channels);
  cfg->key("fs", "--fs", &a->spec.fs);
  cfg->key("trials", "--trials", &a->spec.n_trials);
  cfg->key("trial_seconds", "--trial-seconds", &a->spec.trial_seconds);
  cfg->key("pretrial_seconds", "--pretrial-seconds", &a->spec.pretrial_seconds);
  cfg->key("tone_hz", "--tone-hz", &a->spec.tone_hz);
  cfg->key("effect", "--effect", &a->spec.class_effect);
  cfg->key("noise_sd", "--noise-sd", &a->spec.noise_sd);
  cfg->key("scale_max", "--scale-max", &a->spec.scale_max);
  cfg->key("seed", "--seed", &a->seed);
  sub->callback([a, cfg] {
    cfg->apply();
    const Dataset dataset = generate_synthetic(a->spec, a->seed);
    write_dataset(dataset, a->out);
    std::cout << "wrote " << dataset.trials.size() << " trials (" << a->spec.n_channels
              << " channels at " << a->spec.fs << " Hz) into " << a->out << "\n";
  });
}

void setup_train(CLI::App& app) {
  auto* sub = app.add_subcommand("train", "Cross-validated training on a dataset");
  struct Args {
    std::string in;
    std::string out;
    std::string checkpoint;
    PipelineOptions pipe;
    Hyper hyper;
    int folds = 10;
    int repeats = 1;
  };
  auto a = std::make_shared<Args>();
  a->hyper.seed = 1;
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--in", a->in, "Input dataset directory")->required();
  sub->add_option("--out", a->out, "Results directory")->required();
  sub->add_option("--checkpoint", a->checkpoint,
                  "Also train on all windows and save the model here");
  sub->add_option("--epochs", a->hyper.epochs, "Training epochs")->check(CLI::Range(0, 100000));
  sub->add_option("--batch", a->hyper.batch, "Mini-batch size")->check(CLI::Range(1, 100000));
  sub->add_option("--lr", a->hyper.optimizer.lr, "Adam step size");
  sub->add_option("--seed", a->hyper.seed, "Run seed");
  sub->add_option("--folds", a->folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  sub->add_option("--repeats", a->repeats, "Reshuffled repetitions")->check(CLI::Range(1, 100));
  add_pipeline_flags(sub, *cfg, a->pipe);
  cfg->key("epochs", "--epochs", &a->hyper.epochs);
  cfg->key("batch", "--batch", &a->hyper.batch);
  cfg->key("lr", "--lr", &a->hyper.optimizer.lr);
  cfg->key("seed", "--seed", &a->hyper.seed);
  cfg->key("folds", "--folds", &a->folds);
  cfg->key("repeats", "--repeats", &a->repeats);
  sub->callback([a, cfg] {
    cfg->apply();
    const Dataset dataset = read_dataset(a->in);
    const WindowSet ws = make_windows(dataset, a->pipe);
    const StannConfig config = config_for(dataset, ws);
    a->hyper.band = a->pipe.band;
    a->hyper.knn = a->pipe.knn;
    a->hyper.bandwidth = ws.bandwidth_used;

    CvPlan plan = kfold_split(static_cast<int>(ws.windows.size()), a->folds, a->hyper.seed);
    plan.repeats = a->repeats;
    const FitResult result = fit(config, ws.windows, a->hyper, plan);

    ordered_json prov = pipeline_provenance("train", a->in, a->pipe, &ws);
    prov["epochs"] = a->hyper.epochs;
    prov["batch"] = a->hyper.batch;
    prov["lr"] = a->hyper.optimizer.lr;
    prov["seed"] = a->hyper.seed;
    prov["folds"] = a->folds;
    prov["repeats"] = a->repeats;

    std::filesystem::create_directories(a->out);
    write_fold_csv(result, std::filesystem::path(a->out) / "folds.csv");
    write_summary_json(result, prov.dump(), std::filesystem::path(a->out) / "summary.json");
    std::cout << "mean accuracy " << result.mean_accuracy << " (sd " << result.sd_accuracy
              << "), mean f1 " << result.mean_f1 << " (sd " << result.sd_f1 << ") over "
              << result.folds.size() << " folds\n";
    std::cout << "wrote " << (std::filesystem::path(a->out) / "folds.csv").string() << " and "
              << (std::filesystem::path(a->out) / "summary.json").string() << "\n";

    if (!a->checkpoint.empty()) {
      StannModel model(config, a->hyper.seed);
      AdamState opt;
      opt.hyper = a->hyper.optimizer;
      Rng shuffle_rng(a->hyper.seed + 0x5eed);
      std::vector<int> all(ws.windows.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      train_model(model, ws.windows, all, a->hyper.epochs, a->hyper.batch, opt, shuffle_rng);
      write_checkpoint(model, &opt, a->checkpoint);
      std::cout << "wrote " << a->checkpoint << "\n";
    }
  });
}

void setup_eval(CLI::App& app) {
  auto* sub = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  struct Args {
    std::string checkpoint;
    std::string in;
    std::string out;
    PipelineOptions pipe;
  };
  auto a = std::make_shared<Args>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--checkpoint", a->checkpoint, "Model checkpoint")->required();
  sub->add_option("--in", a->in, "Input dataset directory")->required();
  sub->add_option("--out", a->out, "Report destination (default stdout)");
  add_pipeline_flags(sub, *cfg, a->pipe);
  sub->callback([a, cfg] {
    cfg->apply();
    StannModel model = read_checkpoint(a->checkpoint);
    const Dataset dataset = read_dataset(a->in);
    const WindowSet ws = make_windows(dataset, a->pipe);
    if (model.config().n_channels != ws.n_channels ||
        model.config().timesteps != ws.window_samples) {
      throw DataError("eval: checkpoint expects " +
                      std::to_string(model.config().n_channels) + "x" +
                      std::to_string(model.config().timesteps) + " windows, dataset yields " +
                      std::to_string(ws.n_channels) + "x" +
                      std::to_string(ws.window_samples));
    }
    const std::vector<int> preds = predict(model, ws.windows);
    std::vector<int> labels;
    for (const auto& w : ws.windows) labels.push_back(w.label);
    const Metrics m = evaluate_metrics(preds, labels);

    ordered_json j = metrics_json(m);
    j["windows"] = ws.windows.size();
    j["config"] = pipeline_provenance("eval", a->in, a->pipe, &ws);
    j["config"]["checkpoint"] = a->checkpoint;
    emit_report(j, a->out);
  });
}

void setup_transfer(CLI::App& app) {
  auto* sub = app.add_subcommand("transfer", "Fine-tune a checkpoint on a target dataset");
  struct Args {
    std::string checkpoint;
    std::string in;
    std::string out;
    std::string csv;
    std::string save_checkpoint;
    std::string scheme = "a";
    std::string budget = "10pct";
    double alpha = 0.1;
    double base_lr = 1e-3;
    std::uint64_t seed = 1;
    bool use_sgd = false;
    PipelineOptions pipe;
  };
  auto a = std::make_shared<Args>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--checkpoint", a->checkpoint, "Source model checkpoint")->required();
  sub->add_option("--in", a->in, "Target dataset directory")->required();
  sub->add_option("--out", a->out, "Report destination (default stdout)");
  sub->add_option("--csv", a->csv, "Also write the result as a one-row csv here");
  sub->add_option("--save-checkpoint", a->save_checkpoint, "Save the tuned model here");
  sub->add_option("--scheme", a->scheme, "Freeze scheme: a..e or a json file");
  sub->add_option("--budget", a->budget, "Calibration budget: 1trial, 10pct, 20pct or 90pct");
  sub->add_option("--alpha", a->alpha, "Update blend toward the tuned parameters")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--lr", a->base_lr, "Base optimizer step size");
  sub->add_option("--seed", a->seed, "Run seed");
  sub->add_flag("--sgd", a->use_sgd, "Plain descent instead of Adam");
  add_pipeline_flags(sub, *cfg, a->pipe);
  cfg->key("scheme", "--scheme", &a->scheme);
  cfg->key("budget", "--budget", &a->budget);
  cfg->key("alpha", "--alpha", &a->alpha);
  cfg->key("lr", "--lr", &a->base_lr);
  cfg->key("seed", "--seed", &a->seed);
  cfg->key("sgd", "--sgd", &a->use_sgd);
  sub->callback([a, cfg] {
    cfg->apply();
    StannModel model = read_checkpoint(a->checkpoint);
    const Dataset dataset = read_dataset(a->in);
    const WindowSet ws = make_windows(dataset, a->pipe);
    if (model.config().n_channels != ws.n_channels ||
        model.config().timesteps != ws.window_samples) {
      throw DataError("transfer: checkpoint expects " +
                      std::to_string(model.config().n_channels) + "x" +
                      std::to_string(model.config().timesteps) + " windows, dataset yields " +
                      std::to_string(ws.n_channels) + "x" +
                      std::to_string(ws.window_samples));
    }
    const FreezeScheme scheme = scheme_from_arg(a->scheme);
    const BudgetSpec budget = parse_budget(a->budget);
    const BudgetSplit split = select_budget(ws.windows, budget, a->seed);
    FinetuneConfig config = finetune_config_for(budget);
    config.alpha = a->alpha;
    config.base_lr = a->base_lr;
    config.use_sgd = a->use_sgd;
    const FinetuneResult result = finetune(model, scheme, ws.windows, split, config, a->seed);

    ordered_json j = metrics_json(result.test_metrics);
    j["scheme"] = scheme.name;
    j["budget"] = budget.name();
    j["calibration_windows"] = split.calibration.size();
    j["test_windows"] = split.test.size();
    j["epochs_run"] = result.epochs_run;
    j["retrainable_params"] = result.retrainable_params;
    j["config"] = pipeline_provenance("transfer", a->in, a->pipe, &ws);
    j["config"]["checkpoint"] = a->checkpoint;
    j["config"]["alpha"] = a->alpha;
    j["config"]["lr"] = a->base_lr;
    j["config"]["seed"] = a->seed;
    j["config"]["epochs"] = config.epochs;
    j["config"]["patience"] = config.patience;
    emit_report(j, a->out);

    if (!a->csv.empty()) {
      write_tl_csv({{scheme.name, budget.name(), a->seed, result.test_metrics.accuracy,
                     result.test_metrics.f1}},
                   a->csv);
      std::cout << "wrote " << a->csv << "\n";
    }
    if (!a->save_checkpoint.empty()) {
      write_checkpoint(model, nullptr, a->save_checkpoint);
      std::cout << "wrote " << a->save_checkpoint << "\n";
    }
  });
}

struct InspectArgs {
  std::string checkpoint;
  std::string in;
  std::string out;
  int column = 0;
  int kernel = 0;
  PipelineOptions pipe;
};

void setup_topo(CLI::App& app) {
  auto* sub = app.add_subcommand("topo", "Render a kernel activation topomap as svg");
  auto a = std::make_shared<InspectArgs>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--checkpoint", a->checkpoint, "Model checkpoint")->required();
  sub->add_option("--in", a->in, "Input dataset directory")->required();
  sub->add_option("--out", a->out, "Output svg path")->required();
  sub->add_option("--column", a->column, "Convolutional column index (0..2)");
  sub->add_option("--kernel", a->kernel, "Kernel index within the column's last stage");
  add_pipeline_flags(sub, *cfg, a->pipe);
  cfg->key("column", "--column", &a->column);
  cfg->key("kernel", "--kernel", &a->kernel);
  sub->callback([a, cfg] {
    cfg->apply();
    StannModel model = read_checkpoint(a->checkpoint);
    const Dataset dataset = read_dataset(a->in);
    const WindowSet ws = make_windows(dataset, a->pipe);
    const Eigen::VectorXd map = extract_kernel_map(model, ws.windows, a->column, a->kernel);
    emit_topomap(dataset_montage(dataset), map, a->out);
    std::cout << "wrote " << a->out << "\n";
  });
}

void setup_embed(CLI::App& app) {
  auto* sub = app.add_subcommand("embed", "Export fusion-layer embeddings as csv");
  auto a = std::make_shared<InspectArgs>();
  auto cfg = std::make_shared<ConfigFile>(sub);
  sub->add_option("--checkpoint", a->checkpoint, "Model checkpoint")->required();
  sub->add_option("--in", a->in, "Input dataset directory")->required();
  sub->add_option("--out", a->out, "Output csv path")->required();
  add_pipeline_flags(sub, *cfg, a->pipe);
  sub->callback([a, cfg] {
    cfg->apply();
    StannModel model = read_checkpoint(a->checkpoint);
    const Dataset dataset = read_dataset(a->in);
    const WindowSet ws = make_windows(dataset, a->pipe);
    export_embeddings(model, ws.windows, a->out);
    std::cout << "wrote " << a->out << "\n";
  });
}

void setup_checkpoint(CLI::App& app) {
  auto* sub = app.add_subcommand("checkpoint", "Checkpoint utilities");
  sub->require_subcommand(1);
  auto* inspect = sub->add_subcommand("inspect", "Print a checkpoint summary");
  auto path = std::make_shared<std::string>();
  inspect->add_option("path", *path, "Checkpoint file")->required();
  inspect->callback([path] { std::cout << checkpoint_summary(*path); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-smoothed preprocessing and hybrid attention networks "
               "for multi-channel physiological recordings"};
  app.require_subcommand(1);
  setup_graph(app);
  setup_smooth(app);
  setup_segment(app);
  setup_synth(app);
  setup_train(app);
  setup_eval(app);
  setup_transfer(app);
  setup_topo(app);
  setup_embed(app);
  setup_checkpoint(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const stann::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const stann::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const stann::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
