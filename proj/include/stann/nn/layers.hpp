#pragma once

#include <vector>

#include <Eigen/Core>

#include "stann/nn/tensor.hpp"
#include "stann/rng.hpp"

namespace stann {

enum class Mode { Train, Eval };

// ---------- convolution ----------

// Same-padded 2-D convolution with stride 1. Kernel dims are
// (kh, kw, in_channels, out_channels); kh and kw must be odd.
Tensor4 conv2d_same(const Tensor4& x, const Tensor4& kernel, const Eigen::VectorXd& bias);

// dx may be null when the input gradient is not needed.
void conv2d_same_backward(const Tensor4& x, const Tensor4& kernel, const Tensor4& dy,
                          Tensor4* dx, Tensor4& dkernel, Eigen::VectorXd& dbias);

// ---------- batch normalization ----------

struct BatchNormState {
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

struct BatchNormCache {
  Mode mode = Mode::Train;
  Eigen::VectorXd inv_std;  // per channel
  Tensor4 xhat;             // normalized input (train mode only)
};

// Per-channel batch normalization over (batch, height, width). Train mode
// uses batch statistics and refreshes the running estimates; eval mode uses
// the running estimates only.
Tensor4 batchnorm(const Tensor4& x, const Eigen::VectorXd& gamma,
                  const Eigen::VectorXd& beta, BatchNormState& state, Mode mode,
                  BatchNormCache* cache = nullptr, double eps = 1e-5,
                  double momentum = 0.1);

void batchnorm_backward(const BatchNormCache& cache, const Eigen::VectorXd& gamma,
                        const Tensor4& dy, Tensor4& dx, Eigen::VectorXd& dgamma,
                        Eigen::VectorXd& dbeta);

// ---------- pointwise and pooling ----------

Tensor4 relu(const Tensor4& x);
void relu_backward(const Tensor4& x, const Tensor4& dy, Tensor4& dx);
Eigen::MatrixXd relu(const Eigen::MatrixXd& x);
Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy);

// 2x2 average pooling with stride 2; odd trailing rows/columns are dropped.
Tensor4 avgpool2d(const Tensor4& x);
void avgpool2d_backward(const Tensor4& dy, int in_h, int in_w, Tensor4& dx);

// Inverted dropout. Train mode zeroes activations with probability `rate`
// and rescales the survivors by 1/(1-rate); eval mode is the identity.
Tensor4 dropout(const Tensor4& x, double rate, Mode mode, Rng& rng, Tensor4* mask);
SeqBatch dropout(const SeqBatch& x, double rate, Mode mode, Rng& rng, SeqBatch* mask);

// ---------- dense ----------

// y = w x + b with x (in x batch), w (out x in).
Eigen::MatrixXd dense(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                      const Eigen::VectorXd& b);
void dense_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                    const Eigen::MatrixXd& dy, Eigen::MatrixXd& dx, Eigen::MatrixXd& dw,
                    Eigen::VectorXd& db);

// ---------- recurrent ----------

// Gate weights act on [previous hidden; input], one matrix and bias per gate.
struct LstmParams {
  Eigen::MatrixXd w_forget, w_input, w_cell, w_output;  // hidden x (hidden + input)
  Eigen::VectorXd b_forget, b_input, b_cell, b_output;

  int hidden() const { return static_cast<int>(w_forget.rows()); }
  int input() const { return static_cast<int>(w_forget.cols() - w_forget.rows()); }
};

// Single cell update for one timestep.
void lstm_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, const LstmParams& p, Eigen::VectorXd& h,
               Eigen::VectorXd& c);

struct LstmCache {
  std::vector<Eigen::MatrixXd> z;       // [h_prev; x], (hidden+input) x batch
  std::vector<Eigen::MatrixXd> f, i, g, o;
  std::vector<Eigen::MatrixXd> c, tanh_c;
};

// Unidirectional pass over a T-step sequence; zero initial state.
SeqBatch lstm_forward(const SeqBatch& x, const LstmParams& p, LstmCache* cache);
void lstm_backward(const LstmParams& p, const LstmCache& cache, const SeqBatch& dh_out,
                   LstmParams& grads, SeqBatch& dx);

struct BilstmCache {
  LstmCache fwd, bwd;
};

// Concatenates the forward pass with the time-reversed backward pass, so
// each step carries [h_fwd_t; h_bwd_t] (2*hidden rows).
SeqBatch bilstm_forward(const SeqBatch& x, const LstmParams& fwd, const LstmParams& bwd,
                        BilstmCache* cache);
void bilstm_backward(const LstmParams& fwd, const LstmParams& bwd, const BilstmCache& cache,
                     const SeqBatch& dh_out, LstmParams& dfwd, LstmParams& dbwd,
                     SeqBatch& dx);

// ---------- attention pooling ----------

struct AttentionParams {
  Eigen::VectorXd w;
  double b = 0.0;
};

struct AttentionCache {
  Eigen::MatrixXd alpha;  // T x batch softmax weights
};

// Scores each step with w.h + b, softmaxes over time per sample, and returns
// the weighted sum of the step vectors (features x batch).
Eigen::MatrixXd attention_pool(const SeqBatch& h, const AttentionParams& p,
                               AttentionCache* cache);
void attention_pool_backward(const SeqBatch& h, const AttentionParams& p,
                             const AttentionCache& cache, const Eigen::MatrixXd& dv,
                             Eigen::VectorXd& dw, double& db, SeqBatch& dh);

// ---------- loss ----------

struct SoftmaxXentResult {
  double loss = 0.0;          // mean negative log-likelihood
  Eigen::MatrixXd probs;      // 2 x batch
  Eigen::MatrixXd dlogits;    // 2 x batch, (probs - onehot)/batch
};

// Two-class softmax cross entropy on logits (2 x batch), log-sum-exp stable.
SoftmaxXentResult softmax_xent(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

}  // namespace stann
