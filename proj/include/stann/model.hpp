#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stann/nn/gradcheck.hpp"
#include "stann/nn/layers.hpp"
#include "stann/nn/optimizer.hpp"
#include "stann/signal.hpp"

namespace stann {

struct ConvStageSpec {
  int filters = 0;
  int kernel_h = 0;
  int kernel_w = 0;
};

struct SteColumnSpec {
  std::array<ConvStageSpec, 3> stages;
};

// Model hyperparameters. Defaults reproduce the full-size network: three
// convolutional columns (25/50/25, 30/60/30 and 40/80/40 filters) merged by a
// single 1x1 filter, a two-layer bidirectional LSTM branch of width 80 with
// attention pooling, and a 128-wide fusion layer over both branches.
struct StannConfig {
  int n_channels = 32;
  int timesteps = 128;
  std::array<SteColumnSpec, 3> columns{
      SteColumnSpec{{{{25, 5, 5}, {50, 3, 3}, {25, 3, 3}}}},
      SteColumnSpec{{{{30, 5, 5}, {60, 3, 3}, {30, 3, 3}}}},
      SteColumnSpec{{{{40, 3, 3}, {80, 1, 1}, {40, 1, 1}}}},
  };
  int ran_hidden = 80;
  double ste_dropout1 = 0.5;
  double ste_dropout2 = 0.4;
  double ran_dropout1 = 0.3;
  double ran_dropout2 = 0.2;
  int dense_width = 128;
  std::vector<std::string> sensor_labels;  // optional, recorded in checkpoints

  void validate() const;  // throws ArgumentError on impossible shapes
  int pooled_height() const { return n_channels / 4; }
  int pooled_width() const { return timesteps / 4; }
  int flat_width() const { return pooled_height() * pooled_width(); }
  int merged_channels() const;  // sum of stage-3 filters across columns
  int fusion_width() const { return flat_width() + 2 * ran_hidden; }
};

struct ParamTableRow {
  std::string name;  // IN1, C1_1..C3_3, P1_*, P2_*, Con1, C4, IN2, RAN1, ...
  std::string kind;
  std::array<int, 3> output_shape{0, 0, 0};  // height, width, channels
  long table_params = 0;      // batch norm counted as 4 values per channel
  long trainable_params = 0;  // batch norm counted as 2 values per channel
};

// A named group of parameters that is frozen or retrained as a unit.
struct Block {
  std::string id;
  bool trainable = true;
  std::vector<ParamRef> params;
  std::vector<ParamRef> buffers;  // batch norm running statistics

  long param_count() const;
};

// One training batch in both input layouts: in1 stacks windows as
// batch x channels x timesteps x 1 images; in2 carries the same windows as a
// timestep-major sequence of (channels x batch) slices.
struct ModelBatch {
  Tensor4 in1;
  SeqBatch in2;
};

class StannModel {
 public:
  StannModel(const StannConfig& config, std::uint64_t seed);
  ~StannModel();
  StannModel(StannModel&& other) noexcept;
  StannModel& operator=(StannModel&& other) noexcept;

  const StannConfig& config() const;
  std::uint64_t seed() const;

  Mode mode() const;
  void set_mode(Mode mode);

  const std::vector<Block>& blocks() const;
  const Block& block(const std::string& id) const;
  std::vector<std::string> block_ids() const;
  void set_trainable(const std::string& id, bool trainable);
  bool is_trainable(const std::string& id) const;
  long param_count() const;
  long trainable_param_count() const;

  // Class probabilities, batch x 2.
  Eigen::MatrixXd forward(const ModelBatch& batch);
  // Mean loss over the batch; leaves fresh gradients in every block.
  double loss_and_grad(const ModelBatch& batch, const std::vector<int>& labels);
  double loss_only(const ModelBatch& batch, const std::vector<int>& labels);
  void zero_grads();
  // Backward pass plus one optimizer step over the trainable blocks.
  double train_step(const ModelBatch& batch, const std::vector<int>& labels,
                    AdamState& opt);
  double train_step_sgd(const ModelBatch& batch, const std::vector<int>& labels, double lr);

  // Fusion hidden activations (dense_width x batch) in the current mode.
  Eigen::MatrixXd embeddings(const ModelBatch& batch);
  // Final per-column convolutional activations for kernel inspection,
  // batch x n/4 x k/4 x filters, computed in eval mode.
  Tensor4 column_activation(const Tensor4& in1, int column);

  std::vector<ParamTableRow> parameter_table() const;

  // Dropout stream; persisted in checkpoints.
  Rng& rng();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Batch assembly from labeled windows.
ModelBatch make_batch(const std::vector<LabeledWindow>& windows,
                      const std::vector<int>& indices);
std::vector<int> gather_labels(const std::vector<LabeledWindow>& windows,
                               const std::vector<int>& indices);

// Argmax predictions over all windows, processed in eval mode.
std::vector<int> predict(StannModel& model, const std::vector<LabeledWindow>& windows,
                         int eval_batch = 256);

}  // namespace stann
