#include "stann/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stann/errors.hpp"

namespace stann {

namespace {

double glorot_limit(double fan_in, double fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

// Fresh weights pass through float so a model survives the 32-bit checkpoint
// payload bit-exactly.
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void init_uniform(double* data, std::size_t n, double limit, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) data[i] = f32(rng.uniform(-limit, limit));
}

void init_matrix(Eigen::MatrixXd& m, int rows, int cols, double limit, Rng& rng) {
  m.resize(rows, cols);
  init_uniform(m.data(), static_cast<std::size_t>(m.size()), limit, rng);
}

struct ConvBnLayer {
  Tensor4 kernel;
  Eigen::VectorXd bias, gamma, beta;
  Tensor4 dkernel;
  Eigen::VectorXd dbias, dgamma, dbeta;
  BatchNormState bn;
  bool trainable = true;

  Tensor4 x_in, pre_relu;
  BatchNormCache bn_cache;

  void init(int kh, int kw, int cin, int cout, Rng& rng) {
    kernel = Tensor4(kh, kw, cin, cout);
    init_uniform(kernel.data(), kernel.size(),
                 glorot_limit(static_cast<double>(kh) * kw * cin,
                              static_cast<double>(kh) * kw * cout),
                 rng);
    bias = Eigen::VectorXd::Zero(cout);
    gamma = Eigen::VectorXd::Ones(cout);
    beta = Eigen::VectorXd::Zero(cout);
    dkernel = Tensor4(kh, kw, cin, cout);
    dbias = Eigen::VectorXd::Zero(cout);
    dgamma = Eigen::VectorXd::Zero(cout);
    dbeta = Eigen::VectorXd::Zero(cout);
    bn.running_mean = Eigen::VectorXd::Zero(cout);
    bn.running_var = Eigen::VectorXd::Ones(cout);
  }

  Tensor4 forward(const Tensor4& x, Mode mode) {
    x_in = x;
    const Tensor4 conv = conv2d_same(x, kernel, bias);
    // Frozen blocks keep their statistics, like an inference-mode layer.
    const Mode bn_mode = trainable ? mode : Mode::Eval;
    pre_relu = batchnorm(conv, gamma, beta, bn, bn_mode, &bn_cache);
    return relu(pre_relu);
  }

  Tensor4 backward(const Tensor4& dy, bool need_dx) {
    Tensor4 d_pre;
    relu_backward(pre_relu, dy, d_pre);
    Tensor4 d_conv;
    batchnorm_backward(bn_cache, gamma, d_pre, d_conv, dgamma, dbeta);
    Tensor4 dx;
    conv2d_same_backward(x_in, kernel, d_conv, need_dx ? &dx : nullptr, dkernel, dbias);
    return dx;
  }
};

struct MergeConv {
  Tensor4 kernel;
  Eigen::VectorXd bias;
  Tensor4 dkernel;
  Eigen::VectorXd dbias;
  Tensor4 x_in, pre_relu;

  void init(int cin, Rng& rng) {
    kernel = Tensor4(1, 1, cin, 1);
    init_uniform(kernel.data(), kernel.size(), glorot_limit(cin, 1), rng);
    bias = Eigen::VectorXd::Zero(1);
    dkernel = Tensor4(1, 1, cin, 1);
    dbias = Eigen::VectorXd::Zero(1);
  }

  Tensor4 forward(const Tensor4& x) {
    x_in = x;
    pre_relu = conv2d_same(x, kernel, bias);
    return relu(pre_relu);
  }

  Tensor4 backward(const Tensor4& dy) {
    Tensor4 d_pre;
    relu_backward(pre_relu, dy, d_pre);
    Tensor4 dx;
    conv2d_same_backward(x_in, kernel, d_pre, &dx, dkernel, dbias);
    return dx;
  }
};

struct SteColumn {
  ConvBnLayer c1, c2, c3;
  Tensor4 mask1, mask2;
  int a1_h = 0, a1_w = 0, a2_h = 0, a2_w = 0;

  void init(const SteColumnSpec& spec, int in_channels, Rng& rng) {
    c1.init(spec.stages[0].kernel_h, spec.stages[0].kernel_w, in_channels,
            spec.stages[0].filters, rng);
    c2.init(spec.stages[1].kernel_h, spec.stages[1].kernel_w, spec.stages[0].filters,
            spec.stages[1].filters, rng);
    c3.init(spec.stages[2].kernel_h, spec.stages[2].kernel_w, spec.stages[1].filters,
            spec.stages[2].filters, rng);
  }

  Tensor4 forward(const Tensor4& x, Mode mode, Rng& rng, double drop1, double drop2) {
    Tensor4 a1 = c1.forward(x, mode);
    a1_h = a1.dim1();
    a1_w = a1.dim2();
    const Tensor4 p1 = avgpool2d(a1);
    const Tensor4 q1 = dropout(p1, drop1, mode, rng, &mask1);
    Tensor4 a2 = c2.forward(q1, mode);
    a2_h = a2.dim1();
    a2_w = a2.dim2();
    const Tensor4 p2 = avgpool2d(a2);
    const Tensor4 q2 = dropout(p2, drop2, mode, rng, &mask2);
    return c3.forward(q2, mode);
  }

  void backward(const Tensor4& dy) {
    Tensor4 dq2 = c3.backward(dy, true);
    for (std::size_t i = 0; i < dq2.size(); ++i) dq2.data()[i] *= mask2.data()[i];
    Tensor4 da2;
    avgpool2d_backward(dq2, a2_h, a2_w, da2);
    Tensor4 dq1 = c2.backward(da2, true);
    for (std::size_t i = 0; i < dq1.size(); ++i) dq1.data()[i] *= mask1.data()[i];
    Tensor4 da1;
    avgpool2d_backward(dq1, a1_h, a1_w, da1);
    c1.backward(da1, false);
  }
};

void size_lstm_grads(LstmParams& g, int hidden, int input) {
  g.w_forget = Eigen::MatrixXd::Zero(hidden, hidden + input);
  g.w_input = Eigen::MatrixXd::Zero(hidden, hidden + input);
  g.w_cell = Eigen::MatrixXd::Zero(hidden, hidden + input);
  g.w_output = Eigen::MatrixXd::Zero(hidden, hidden + input);
  g.b_forget = Eigen::VectorXd::Zero(hidden);
  g.b_input = Eigen::VectorXd::Zero(hidden);
  g.b_cell = Eigen::VectorXd::Zero(hidden);
  g.b_output = Eigen::VectorXd::Zero(hidden);
}

struct RanBranch {
  LstmParams l1f, l1b, l2f, l2b;
  LstmParams dl1f, dl1b, dl2f, dl2b;
  AttentionParams att;
  Eigen::VectorXd datt_w;
  double datt_b = 0.0;

  BilstmCache bc1, bc2;
  SeqBatch h1d, h2d, mask1, mask2;
  AttentionCache ac;

  static void init_lstm(LstmParams& p, int hidden, int input, Rng& rng) {
    const double limit = glorot_limit(hidden + input, hidden);
    init_matrix(p.w_forget, hidden, hidden + input, limit, rng);
    init_matrix(p.w_input, hidden, hidden + input, limit, rng);
    init_matrix(p.w_cell, hidden, hidden + input, limit, rng);
    init_matrix(p.w_output, hidden, hidden + input, limit, rng);
    p.b_forget = Eigen::VectorXd::Ones(hidden);  // conventional forget-gate bias
    p.b_input = Eigen::VectorXd::Zero(hidden);
    p.b_cell = Eigen::VectorXd::Zero(hidden);
    p.b_output = Eigen::VectorXd::Zero(hidden);
  }

  void init(int hidden, int input, Rng& rng) {
    init_lstm(l1f, hidden, input, rng);
    init_lstm(l1b, hidden, input, rng);
    init_lstm(l2f, hidden, 2 * hidden, rng);
    init_lstm(l2b, hidden, 2 * hidden, rng);
    size_lstm_grads(dl1f, hidden, input);
    size_lstm_grads(dl1b, hidden, input);
    size_lstm_grads(dl2f, hidden, 2 * hidden);
    size_lstm_grads(dl2b, hidden, 2 * hidden);
    att.w.resize(2 * hidden);
    init_uniform(att.w.data(), static_cast<std::size_t>(att.w.size()),
                 glorot_limit(2.0 * hidden, 1.0), rng);
    att.b = 0.0;
    datt_w = Eigen::VectorXd::Zero(2 * hidden);
  }

  Eigen::MatrixXd forward(const SeqBatch& x, Mode mode, Rng& rng, double drop1,
                          double drop2) {
    const SeqBatch h1 = bilstm_forward(x, l1f, l1b, &bc1);
    h1d = dropout(h1, drop1, mode, rng, &mask1);
    const SeqBatch h2 = bilstm_forward(h1d, l2f, l2b, &bc2);
    h2d = dropout(h2, drop2, mode, rng, &mask2);
    return attention_pool(h2d, att, &ac);
  }

  void backward(const Eigen::MatrixXd& dv) {
    SeqBatch dh2d;
    attention_pool_backward(h2d, att, ac, dv, datt_w, datt_b, dh2d);
    for (std::size_t t = 0; t < dh2d.size(); ++t) {
      dh2d[t] = dh2d[t].cwiseProduct(mask2[t]);
    }
    SeqBatch dh1d;
    bilstm_backward(l2f, l2b, bc2, dh2d, dl2f, dl2b, dh1d);
    for (std::size_t t = 0; t < dh1d.size(); ++t) {
      dh1d[t] = dh1d[t].cwiseProduct(mask1[t]);
    }
    SeqBatch dx_unused;
    bilstm_backward(l1f, l1b, bc1, dh1d, dl1f, dl1b, dx_unused);
  }
};

struct Head {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;
  Eigen::MatrixXd dw1, dw2;
  Eigen::VectorXd db1, db2;
  Eigen::MatrixXd fused, pre1, act1;

  void init(int fusion, int width, Rng& rng) {
    init_matrix(w1, width, fusion, glorot_limit(fusion, width), rng);
    b1 = Eigen::VectorXd::Zero(width);
    init_matrix(w2, 2, width, glorot_limit(width, 2), rng);
    b2 = Eigen::VectorXd::Zero(2);
    dw1 = Eigen::MatrixXd::Zero(width, fusion);
    db1 = Eigen::VectorXd::Zero(width);
    dw2 = Eigen::MatrixXd::Zero(2, width);
    db2 = Eigen::VectorXd::Zero(2);
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& f) {
    fused = f;
    pre1 = dense(f, w1, b1);
    act1 = relu(pre1);
    return dense(act1, w2, b2);
  }

  Eigen::MatrixXd backward(const Eigen::MatrixXd& dlogits) {
    Eigen::MatrixXd dact1;
    dense_backward(act1, w2, dlogits, dact1, dw2, db2);
    const Eigen::MatrixXd dpre1 = relu_backward(pre1, dact1);
    Eigen::MatrixXd dfused;
    dense_backward(fused, w1, dpre1, dfused, dw1, db1);
    return dfused;
  }
};

}  // namespace

int StannConfig::merged_channels() const {
  int total = 0;
  for (const auto& col : columns) total += col.stages[2].filters;
  return total;
}

void StannConfig::validate() const {
  if (n_channels < 4 || n_channels % 4 != 0) {
    throw ArgumentError("model: channel count must be a positive multiple of 4");
  }
  if (timesteps < 4 || timesteps % 4 != 0) {
    throw ArgumentError("model: timestep count must be a positive multiple of 4");
  }
  for (const auto& col : columns) {
    for (const auto& st : col.stages) {
      if (st.filters < 1) throw ArgumentError("model: stage filter count must be positive");
      if (st.kernel_h < 1 || st.kernel_h % 2 == 0 || st.kernel_w < 1 || st.kernel_w % 2 == 0) {
        throw ArgumentError("model: kernel sides must be odd and positive");
      }
    }
  }
  if (ran_hidden < 1) throw ArgumentError("model: recurrent width must be positive");
  if (dense_width < 1) throw ArgumentError("model: fusion width must be positive");
  for (double rate : {ste_dropout1, ste_dropout2, ran_dropout1, ran_dropout2}) {
    if (rate < 0.0 || rate >= 1.0) throw ArgumentError("model: dropout rate must be in [0, 1)");
  }
  if (!sensor_labels.empty() &&
      static_cast<int>(sensor_labels.size()) != n_channels) {
    throw ArgumentError("model: sensor label count must match the channel count");
  }
}

long Block::param_count() const {
  long total = 0;
  for (const auto& p : params) total += p.size;
  return total;
}

struct StannModel::Impl {
  StannConfig config;
  std::uint64_t seed = 0;
  Rng rng;
  Mode mode = Mode::Train;

  std::array<SteColumn, 3> columns;
  MergeConv merge;
  RanBranch ran;
  Head head;
  std::vector<Block> blocks;

  Impl(const StannConfig& cfg, std::uint64_t sd) : config(cfg), seed(sd), rng(sd) {
    config.validate();
    for (int c = 0; c < 3; ++c) columns[static_cast<std::size_t>(c)].init(config.columns[static_cast<std::size_t>(c)], 1, rng);
    merge.init(config.merged_channels(), rng);
    ran.init(config.ran_hidden, config.n_channels, rng);
    head.init(config.fusion_width(), config.dense_width, rng);
    build_blocks();
  }

  static ParamRef make_ref(std::string name, std::vector<int> shape, double* v, double* g) {
    long size = 1;
    for (int s : shape) size *= s;
    return ParamRef{std::move(name), std::move(shape), v, g, size};
  }

  static void push_vec(Block& b, const std::string& name, Eigen::VectorXd& v,
                       Eigen::VectorXd& g) {
    b.params.push_back(make_ref(name, {static_cast<int>(v.size())}, v.data(), g.data()));
  }

  static void push_mat(Block& b, const std::string& name, Eigen::MatrixXd& v,
                       Eigen::MatrixXd& g) {
    b.params.push_back(make_ref(name, {static_cast<int>(v.rows()), static_cast<int>(v.cols())},
                                v.data(), g.data()));
  }

  static void push_lstm(Block& b, const std::string& prefix, LstmParams& p, LstmParams& g) {
    push_mat(b, prefix + ".w_forget", p.w_forget, g.w_forget);
    push_mat(b, prefix + ".w_input", p.w_input, g.w_input);
    push_mat(b, prefix + ".w_cell", p.w_cell, g.w_cell);
    push_mat(b, prefix + ".w_output", p.w_output, g.w_output);
    push_vec(b, prefix + ".b_forget", p.b_forget, g.b_forget);
    push_vec(b, prefix + ".b_input", p.b_input, g.b_input);
    push_vec(b, prefix + ".b_cell", p.b_cell, g.b_cell);
    push_vec(b, prefix + ".b_output", p.b_output, g.b_output);
  }

  void build_blocks() {
    blocks.clear();
    for (int c = 0; c < 3; ++c) {
      std::array<ConvBnLayer*, 3> stages = {&columns[static_cast<std::size_t>(c)].c1,
                                            &columns[static_cast<std::size_t>(c)].c2,
                                            &columns[static_cast<std::size_t>(c)].c3};
      for (int s = 0; s < 3; ++s) {
        ConvBnLayer& l = *stages[static_cast<std::size_t>(s)];
        Block b;
        b.id = "ste" + std::to_string(c + 1) + ".c" + std::to_string(s + 1);
        b.params.push_back(make_ref(
            "kernel", {l.kernel.dim0(), l.kernel.dim1(), l.kernel.dim2(), l.kernel.dim3()},
            l.kernel.data(), l.dkernel.data()));
        push_vec(b, "bias", l.bias, l.dbias);
        push_vec(b, "gamma", l.gamma, l.dgamma);
        push_vec(b, "beta", l.beta, l.dbeta);
        b.buffers.push_back(make_ref("running_mean",
                                     {static_cast<int>(l.bn.running_mean.size())},
                                     l.bn.running_mean.data(), nullptr));
        b.buffers.push_back(make_ref("running_var",
                                     {static_cast<int>(l.bn.running_var.size())},
                                     l.bn.running_var.data(), nullptr));
        blocks.push_back(std::move(b));
      }
    }
    {
      Block b;
      b.id = "ste.merge";
      b.params.push_back(make_ref(
          "kernel",
          {merge.kernel.dim0(), merge.kernel.dim1(), merge.kernel.dim2(), merge.kernel.dim3()},
          merge.kernel.data(), merge.dkernel.data()));
      push_vec(b, "bias", merge.bias, merge.dbias);
      blocks.push_back(std::move(b));
    }
    {
      Block b;
      b.id = "ran.bilstm1";
      push_lstm(b, "fwd", ran.l1f, ran.dl1f);
      push_lstm(b, "bwd", ran.l1b, ran.dl1b);
      blocks.push_back(std::move(b));
    }
    {
      Block b;
      b.id = "ran.bilstm2";
      push_lstm(b, "fwd", ran.l2f, ran.dl2f);
      push_lstm(b, "bwd", ran.l2b, ran.dl2b);
      blocks.push_back(std::move(b));
    }
    {
      Block b;
      b.id = "ran.attention";
      push_vec(b, "w", ran.att.w, ran.datt_w);
      b.params.push_back(make_ref("b", {1}, &ran.att.b, &ran.datt_b));
      blocks.push_back(std::move(b));
    }
    {
      Block b;
      b.id = "head.dense1";
      push_mat(b, "w", head.w1, head.dw1);
      push_vec(b, "b", head.b1, head.db1);
      blocks.push_back(std::move(b));
    }
    {
      Block b;
      b.id = "head.dense2";
      push_mat(b, "w", head.w2, head.dw2);
      push_vec(b, "b", head.b2, head.db2);
      blocks.push_back(std::move(b));
    }
  }

  Block& find_block(const std::string& id) {
    for (auto& b : blocks) {
      if (b.id == id) return b;
    }
    throw ArgumentError("model: unknown block '" + id + "'");
  }

  void check_batch(const ModelBatch& batch) const {
    const int n = config.n_channels;
    const int k = config.timesteps;
    if (batch.in1.dim0() < 1 || batch.in1.dim1() != n || batch.in1.dim2() != k ||
        batch.in1.dim3() != 1) {
      throw ArgumentError("model: image input must be batch x " + std::to_string(n) + " x " +
                          std::to_string(k) + " x 1");
    }
    if (static_cast<int>(batch.in2.size()) != k) {
      throw ArgumentError("model: sequence input must have " + std::to_string(k) + " steps");
    }
    for (const auto& step : batch.in2) {
      if (step.rows() != n || step.cols() != batch.in1.dim0()) {
        throw ArgumentError("model: sequence steps must be channels x batch");
      }
    }
  }

  Eigen::MatrixXd forward_logits(const ModelBatch& batch) {
    check_batch(batch);
    const int b = batch.in1.dim0();
    const int h = config.pooled_height();
    const int w = config.pooled_width();

    std::array<Tensor4, 3> outs;
    for (int c = 0; c < 3; ++c) {
      outs[static_cast<std::size_t>(c)] = columns[static_cast<std::size_t>(c)].forward(
          batch.in1, mode, rng, config.ste_dropout1, config.ste_dropout2);
    }

    Tensor4 cat(b, h, w, config.merged_channels());
    int offset = 0;
    for (int c = 0; c < 3; ++c) {
      const Tensor4& col = outs[static_cast<std::size_t>(c)];
      const int f = col.dim3();
      for (int bi = 0; bi < b; ++bi) {
        for (int i = 0; i < h; ++i) {
          for (int j = 0; j < w; ++j) {
            for (int ch = 0; ch < f; ++ch) cat(bi, i, j, offset + ch) = col(bi, i, j, ch);
          }
        }
      }
      offset += f;
    }

    const Tensor4 merged = merge.forward(cat);
    Eigen::MatrixXd flat(h * w, b);
    for (int bi = 0; bi < b; ++bi) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) flat(i * w + j, bi) = merged(bi, i, j, 0);
      }
    }

    const Eigen::MatrixXd v =
        ran.forward(batch.in2, mode, rng, config.ran_dropout1, config.ran_dropout2);

    Eigen::MatrixXd fused(flat.rows() + v.rows(), b);
    fused << flat, v;
    return head.forward(fused);
  }

  void backward_from(const Eigen::MatrixXd& dlogits) {
    const int b = static_cast<int>(dlogits.cols());
    const int h = config.pooled_height();
    const int w = config.pooled_width();

    const Eigen::MatrixXd dfused = head.backward(dlogits);
    const Eigen::MatrixXd dflat = dfused.topRows(config.flat_width());
    const Eigen::MatrixXd dv = dfused.bottomRows(2 * config.ran_hidden);

    ran.backward(dv);

    Tensor4 dmerged(b, h, w, 1);
    for (int bi = 0; bi < b; ++bi) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) dmerged(bi, i, j, 0) = dflat(i * w + j, bi);
      }
    }
    const Tensor4 dcat = merge.backward(dmerged);

    int offset = 0;
    for (int c = 0; c < 3; ++c) {
      const int f = config.columns[static_cast<std::size_t>(c)].stages[2].filters;
      Tensor4 dcol(b, h, w, f);
      for (int bi = 0; bi < b; ++bi) {
        for (int i = 0; i < h; ++i) {
          for (int j = 0; j < w; ++j) {
            for (int ch = 0; ch < f; ++ch) dcol(bi, i, j, ch) = dcat(bi, i, j, offset + ch);
          }
        }
      }
      columns[static_cast<std::size_t>(c)].backward(dcol);
      offset += f;
    }
  }
};

StannModel::StannModel(const StannConfig& config, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(config, seed)) {}

StannModel::~StannModel() = default;
StannModel::StannModel(StannModel&& other) noexcept = default;
StannModel& StannModel::operator=(StannModel&& other) noexcept = default;

const StannConfig& StannModel::config() const { return impl_->config; }
std::uint64_t StannModel::seed() const { return impl_->seed; }
Mode StannModel::mode() const { return impl_->mode; }
void StannModel::set_mode(Mode mode) { impl_->mode = mode; }

const std::vector<Block>& StannModel::blocks() const { return impl_->blocks; }

const Block& StannModel::block(const std::string& id) const { return impl_->find_block(id); }

std::vector<std::string> StannModel::block_ids() const {
  std::vector<std::string> ids;
  ids.reserve(impl_->blocks.size());
  for (const auto& b : impl_->blocks) ids.push_back(b.id);
  return ids;
}

void StannModel::set_trainable(const std::string& id, bool trainable) {
  Block& b = impl_->find_block(id);
  b.trainable = trainable;
  for (int c = 0; c < 3; ++c) {
    SteColumn& col = impl_->columns[static_cast<std::size_t>(c)];
    const std::string prefix = "ste" + std::to_string(c + 1);
    if (id == prefix + ".c1") col.c1.trainable = trainable;
    if (id == prefix + ".c2") col.c2.trainable = trainable;
    if (id == prefix + ".c3") col.c3.trainable = trainable;
  }
}

bool StannModel::is_trainable(const std::string& id) const {
  return impl_->find_block(id).trainable;
}

long StannModel::param_count() const {
  long total = 0;
  for (const auto& b : impl_->blocks) total += b.param_count();
  return total;
}

long StannModel::trainable_param_count() const {
  long total = 0;
  for (const auto& b : impl_->blocks) {
    if (b.trainable) total += b.param_count();
  }
  return total;
}

Eigen::MatrixXd StannModel::forward(const ModelBatch& batch) {
  const Eigen::MatrixXd logits = impl_->forward_logits(batch);
  const Eigen::RowVectorXd max = logits.colwise().maxCoeff();
  Eigen::MatrixXd probs = (logits.rowwise() - max).array().exp();
  const Eigen::RowVectorXd sums = probs.colwise().sum();
  probs.array().rowwise() /= sums.array();
  return probs.transpose();
}

double StannModel::loss_and_grad(const ModelBatch& batch, const std::vector<int>& labels) {
  const Eigen::MatrixXd logits = impl_->forward_logits(batch);
  const SoftmaxXentResult sm = softmax_xent(logits, labels);
  impl_->backward_from(sm.dlogits);
  return sm.loss;
}

double StannModel::loss_only(const ModelBatch& batch, const std::vector<int>& labels) {
  const Eigen::MatrixXd logits = impl_->forward_logits(batch);
  return softmax_xent(logits, labels).loss;
}

void StannModel::zero_grads() {
  for (auto& b : impl_->blocks) {
    for (auto& p : b.params) std::fill(p.grad, p.grad + p.size, 0.0);
  }
}

double StannModel::train_step(const ModelBatch& batch, const std::vector<int>& labels,
                              AdamState& opt) {
  set_mode(Mode::Train);
  const double loss = loss_and_grad(batch, labels);
  if (!std::isfinite(loss)) {
    throw NumericError("train step: loss is not finite after " + std::to_string(opt.t) +
                       " completed steps");
  }
  ++opt.t;
  // Parameters, batch-norm buffers and moments are kept on the float grid at
  // step boundaries (storage is 32-bit, arithmetic 64-bit), so a checkpoint
  // written between steps reproduces the in-memory state exactly.
  for (auto& b : impl_->blocks) {
    if (!b.trainable) continue;
    for (auto& p : b.params) {
      AdamSlot& slot = opt.slot(b.id + "/" + p.name, p.size);
      adam_update(Eigen::Map<Eigen::VectorXd>(p.value, p.size),
                  Eigen::Map<const Eigen::VectorXd>(p.grad, p.size), slot, opt.hyper, opt.t);
      for (long i = 0; i < p.size; ++i) p.value[i] = f32(p.value[i]);
      for (long i = 0; i < p.size; ++i) slot.m(i) = f32(slot.m(i));
      for (long i = 0; i < p.size; ++i) slot.v(i) = f32(slot.v(i));
    }
    for (auto& p : b.buffers) {
      for (long i = 0; i < p.size; ++i) p.value[i] = f32(p.value[i]);
    }
  }
  return loss;
}

double StannModel::train_step_sgd(const ModelBatch& batch, const std::vector<int>& labels,
                                  double lr) {
  set_mode(Mode::Train);
  const double loss = loss_and_grad(batch, labels);
  if (!std::isfinite(loss)) throw NumericError("train step: loss is not finite");
  for (auto& b : impl_->blocks) {
    if (!b.trainable) continue;
    for (auto& p : b.params) {
      sgd_update(Eigen::Map<Eigen::VectorXd>(p.value, p.size),
                 Eigen::Map<const Eigen::VectorXd>(p.grad, p.size), lr);
      for (long i = 0; i < p.size; ++i) p.value[i] = f32(p.value[i]);
    }
    for (auto& p : b.buffers) {
      for (long i = 0; i < p.size; ++i) p.value[i] = f32(p.value[i]);
    }
  }
  return loss;
}

Eigen::MatrixXd StannModel::embeddings(const ModelBatch& batch) {
  const Mode saved = impl_->mode;
  impl_->mode = Mode::Eval;
  impl_->forward_logits(batch);
  impl_->mode = saved;
  return impl_->head.act1;
}

Tensor4 StannModel::column_activation(const Tensor4& in1, int column) {
  if (column < 0 || column > 2) throw ArgumentError("model: column index must be 0, 1 or 2");
  if (in1.dim1() != impl_->config.n_channels || in1.dim2() != impl_->config.timesteps ||
      in1.dim3() != 1) {
    throw ArgumentError("model: image input shape mismatch");
  }
  return impl_->columns[static_cast<std::size_t>(column)].forward(
      in1, Mode::Eval, impl_->rng, impl_->config.ste_dropout1, impl_->config.ste_dropout2);
}

std::vector<ParamTableRow> StannModel::parameter_table() const {
  const StannConfig& c = impl_->config;
  const int n = c.n_channels, k = c.timesteps;
  std::vector<ParamTableRow> rows;

  auto kernel_kind = [](const ConvStageSpec& s) {
    return "Conv2D(" + std::to_string(s.kernel_h) + "x" + std::to_string(s.kernel_w) + ")+BN";
  };
  auto conv_params = [](const ConvStageSpec& s, int cin, int bn_values) {
    return static_cast<long>(s.kernel_h) * s.kernel_w * cin * s.filters + s.filters +
           static_cast<long>(bn_values) * s.filters;
  };

  rows.push_back({"IN1", "Input", {n, k, 1}, 0, 0});
  const std::array<std::array<int, 3>, 4> dims = {{{n, k, 0}, {n / 2, k / 2, 0}, {n / 4, k / 4, 0}, {0, 0, 0}}};
  for (int stage = 0; stage < 3; ++stage) {
    const int h = dims[static_cast<std::size_t>(stage)][0];
    const int w = dims[static_cast<std::size_t>(stage)][1];
    for (int col = 0; col < 3; ++col) {
      const ConvStageSpec& s = c.columns[static_cast<std::size_t>(col)].stages[static_cast<std::size_t>(stage)];
      const int cin = stage == 0 ? 1 : c.columns[static_cast<std::size_t>(col)].stages[static_cast<std::size_t>(stage - 1)].filters;
      rows.push_back({"C" + std::to_string(stage + 1) + "_" + std::to_string(col + 1),
                      kernel_kind(s),
                      {h, w, s.filters},
                      conv_params(s, cin, 4),
                      conv_params(s, cin, 2)});
    }
    if (stage < 2) {
      const int ph = dims[static_cast<std::size_t>(stage) + 1][0];
      const int pw = dims[static_cast<std::size_t>(stage) + 1][1];
      for (int col = 0; col < 3; ++col) {
        const int f = c.columns[static_cast<std::size_t>(col)].stages[static_cast<std::size_t>(stage)].filters;
        rows.push_back({"P" + std::to_string(stage + 1) + "_" + std::to_string(col + 1),
                        "AvgPool2D(2x2)",
                        {ph, pw, f},
                        0,
                        0});
      }
    }
  }
  rows.push_back({"Con1", "Concat", {n / 4, k / 4, c.merged_channels()}, 0, 0});
  rows.push_back({"C4", "Conv2D(1x1)", {n / 4, k / 4, 1},
                  static_cast<long>(c.merged_channels()) + 1,
                  static_cast<long>(c.merged_channels()) + 1});

  const int hidden = c.ran_hidden;
  auto lstm_params = [hidden](int input) {
    return 2L * 4L * (static_cast<long>(hidden) * (hidden + input) + hidden);
  };
  rows.push_back({"IN2", "Input", {k, n, 0}, 0, 0});
  rows.push_back({"RAN1", "BiLSTM", {k, 2 * hidden, 0}, lstm_params(n), lstm_params(n)});
  rows.push_back({"RAN2", "BiLSTM", {k, 2 * hidden, 0}, lstm_params(2 * hidden), lstm_params(2 * hidden)});
  rows.push_back({"ATT", "Attention", {2 * hidden, 0, 0}, 2L * hidden + 1, 2L * hidden + 1});
  rows.push_back({"FC1", "Dense", {c.dense_width, 0, 0},
                  static_cast<long>(c.dense_width) * c.fusion_width() + c.dense_width,
                  static_cast<long>(c.dense_width) * c.fusion_width() + c.dense_width});
  rows.push_back({"FC2", "Dense", {2, 0, 0}, 2L * c.dense_width + 2, 2L * c.dense_width + 2});
  return rows;
}

Rng& StannModel::rng() { return impl_->rng; }

ModelBatch make_batch(const std::vector<LabeledWindow>& windows,
                      const std::vector<int>& indices) {
  if (indices.empty()) throw ArgumentError("batch: no window indices given");
  const Eigen::Index n = windows.at(static_cast<std::size_t>(indices[0])).x.rows();
  const Eigen::Index k = windows.at(static_cast<std::size_t>(indices[0])).x.cols();
  const int b = static_cast<int>(indices.size());

  ModelBatch batch;
  batch.in1 = Tensor4(b, static_cast<int>(n), static_cast<int>(k), 1);
  batch.in2.assign(static_cast<std::size_t>(k), Eigen::MatrixXd(n, b));
  for (int bi = 0; bi < b; ++bi) {
    const auto& x = windows.at(static_cast<std::size_t>(indices[static_cast<std::size_t>(bi)])).x;
    if (x.rows() != n || x.cols() != k) {
      throw DataError("batch: windows have inconsistent shapes");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index t = 0; t < k; ++t) {
        const double v = static_cast<double>(x(i, t));
        batch.in1(bi, static_cast<int>(i), static_cast<int>(t), 0) = v;
        batch.in2[static_cast<std::size_t>(t)](i, bi) = v;
      }
    }
  }
  return batch;
}

std::vector<int> gather_labels(const std::vector<LabeledWindow>& windows,
                               const std::vector<int>& indices) {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (int idx : indices) labels.push_back(windows.at(static_cast<std::size_t>(idx)).label);
  return labels;
}

std::vector<int> predict(StannModel& model, const std::vector<LabeledWindow>& windows,
                         int eval_batch) {
  if (eval_batch < 1) throw ArgumentError("predict: batch size must be positive");
  model.set_mode(Mode::Eval);
  std::vector<int> predictions;
  predictions.reserve(windows.size());
  for (std::size_t start = 0; start < windows.size();
       start += static_cast<std::size_t>(eval_batch)) {
    const std::size_t stop = std::min(windows.size(), start + static_cast<std::size_t>(eval_batch));
    std::vector<int> indices;
    for (std::size_t i = start; i < stop; ++i) indices.push_back(static_cast<int>(i));
    const Eigen::MatrixXd probs = model.forward(make_batch(windows, indices));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      predictions.push_back(probs(r, 1) > probs(r, 0) ? 1 : 0);
    }
  }
  return predictions;
}

}  // namespace stann
