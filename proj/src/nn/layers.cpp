#include "stann/nn/layers.hpp"

#include <cmath>

#include "stann/errors.hpp"

namespace stann {

namespace {

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

}  // namespace

// ---------- convolution ----------

Tensor4 conv2d_same(const Tensor4& x, const Tensor4& kernel, const Eigen::VectorXd& bias) {
  const int kh = kernel.dim0(), kw = kernel.dim1();
  const int cin = kernel.dim2(), cout = kernel.dim3();
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ArgumentError("conv: kernel sides must be odd for same padding");
  }
  if (x.dim3() != cin) throw ArgumentError("conv: input channel mismatch");
  if (bias.size() != cout) throw ArgumentError("conv: bias size mismatch");

  const int nb = x.dim0(), h = x.dim1(), w = x.dim2();
  const int ph = kh / 2, pw = kw / 2;
  Tensor4 y(nb, h, w, cout);
  for (int b = 0; b < nb; ++b) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double* out = &y(b, i, j, 0);
        for (int co = 0; co < cout; ++co) out[co] = bias(co);
        for (int u = 0; u < kh; ++u) {
          const int ii = i + u - ph;
          if (ii < 0 || ii >= h) continue;
          for (int v = 0; v < kw; ++v) {
            const int jj = j + v - pw;
            if (jj < 0 || jj >= w) continue;
            const double* in = &x(b, ii, jj, 0);
            const double* kk = &kernel(u, v, 0, 0);
            for (int ci = 0; ci < cin; ++ci) {
              const double xv = in[ci];
              const double* krow = kk + ci * cout;
              for (int co = 0; co < cout; ++co) out[co] += xv * krow[co];
            }
          }
        }
      }
    }
  }
  return y;
}

void conv2d_same_backward(const Tensor4& x, const Tensor4& kernel, const Tensor4& dy,
                          Tensor4* dx, Tensor4& dkernel, Eigen::VectorXd& dbias) {
  const int kh = kernel.dim0(), kw = kernel.dim1();
  const int cin = kernel.dim2(), cout = kernel.dim3();
  const int nb = x.dim0(), h = x.dim1(), w = x.dim2();
  const int ph = kh / 2, pw = kw / 2;

  // Reuse existing buffers so gradient views stay pointer-stable.
  if (dx != nullptr) {
    if (!dx->same_shape(x)) *dx = Tensor4(nb, h, w, cin);
    else dx->set_zero();
  }
  if (!dkernel.same_shape(kernel)) dkernel = Tensor4(kh, kw, cin, cout);
  else dkernel.set_zero();
  dbias = Eigen::VectorXd::Zero(cout);

  for (int b = 0; b < nb; ++b) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double* g = &dy(b, i, j, 0);
        for (int co = 0; co < cout; ++co) dbias(co) += g[co];
        for (int u = 0; u < kh; ++u) {
          const int ii = i + u - ph;
          if (ii < 0 || ii >= h) continue;
          for (int v = 0; v < kw; ++v) {
            const int jj = j + v - pw;
            if (jj < 0 || jj >= w) continue;
            const double* in = &x(b, ii, jj, 0);
            double* dk = &dkernel(u, v, 0, 0);
            for (int ci = 0; ci < cin; ++ci) {
              const double xv = in[ci];
              double* dkrow = dk + ci * cout;
              double acc = 0.0;
              const double* krow = &kernel(u, v, ci, 0);
              for (int co = 0; co < cout; ++co) {
                dkrow[co] += xv * g[co];
                acc += krow[co] * g[co];
              }
              if (dx != nullptr) (*dx)(b, ii, jj, ci) += acc;
            }
          }
        }
      }
    }
  }
}

// ---------- batch normalization ----------

Tensor4 batchnorm(const Tensor4& x, const Eigen::VectorXd& gamma,
                  const Eigen::VectorXd& beta, BatchNormState& state, Mode mode,
                  BatchNormCache* cache, double eps, double momentum) {
  const int channels = x.dim3();
  if (gamma.size() != channels || beta.size() != channels) {
    throw ArgumentError("batchnorm: parameter size mismatch");
  }
  if (state.running_mean.size() != channels) {
    state.running_mean = Eigen::VectorXd::Zero(channels);
    state.running_var = Eigen::VectorXd::Ones(channels);
  }
  const std::size_t per_channel = x.size() / static_cast<std::size_t>(channels);
  if (per_channel == 0) throw ArgumentError("batchnorm: empty input");

  Eigen::VectorXd mean(channels), var(channels);
  if (mode == Mode::Train) {
    mean.setZero();
    var.setZero();
    const double* p = x.data();
    for (std::size_t idx = 0; idx < x.size(); idx += channels) {
      for (int c = 0; c < channels; ++c) mean(c) += p[idx + c];
    }
    mean /= static_cast<double>(per_channel);
    for (std::size_t idx = 0; idx < x.size(); idx += channels) {
      for (int c = 0; c < channels; ++c) {
        const double d = p[idx + c] - mean(c);
        var(c) += d * d;
      }
    }
    var /= static_cast<double>(per_channel);
    state.running_mean = (1.0 - momentum) * state.running_mean + momentum * mean;
    state.running_var = (1.0 - momentum) * state.running_var + momentum * var;
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  const Eigen::VectorXd inv_std = (var.array() + eps).rsqrt();
  Tensor4 y(x.dim0(), x.dim1(), x.dim2(), channels);
  Tensor4 xhat(x.dim0(), x.dim1(), x.dim2(), channels);
  const double* p = x.data();
  double* py = y.data();
  double* ph = xhat.data();
  for (std::size_t idx = 0; idx < x.size(); idx += channels) {
    for (int c = 0; c < channels; ++c) {
      const double xh = (p[idx + c] - mean(c)) * inv_std(c);
      ph[idx + c] = xh;
      py[idx + c] = gamma(c) * xh + beta(c);
    }
  }
  if (cache != nullptr) {
    cache->mode = mode;
    cache->inv_std = inv_std;
    cache->xhat = std::move(xhat);
  }
  return y;
}

void batchnorm_backward(const BatchNormCache& cache, const Eigen::VectorXd& gamma,
                        const Tensor4& dy, Tensor4& dx, Eigen::VectorXd& dgamma,
                        Eigen::VectorXd& dbeta) {
  const int channels = static_cast<int>(gamma.size());
  const std::size_t per_channel = dy.size() / static_cast<std::size_t>(channels);
  dx = Tensor4(dy.dim0(), dy.dim1(), dy.dim2(), dy.dim3());
  dgamma = Eigen::VectorXd::Zero(channels);
  dbeta = Eigen::VectorXd::Zero(channels);

  const double* pdy = dy.data();
  const double* ph = cache.xhat.data();
  for (std::size_t idx = 0; idx < dy.size(); idx += channels) {
    for (int c = 0; c < channels; ++c) {
      dgamma(c) += pdy[idx + c] * ph[idx + c];
      dbeta(c) += pdy[idx + c];
    }
  }

  double* pdx = dx.data();
  if (cache.mode == Mode::Eval) {
    // Running statistics are constants, so the map is affine per channel.
    for (std::size_t idx = 0; idx < dy.size(); idx += channels) {
      for (int c = 0; c < channels; ++c) {
        pdx[idx + c] = pdy[idx + c] * gamma(c) * cache.inv_std(c);
      }
    }
    return;
  }

  const double m = static_cast<double>(per_channel);
  for (std::size_t idx = 0; idx < dy.size(); idx += channels) {
    for (int c = 0; c < channels; ++c) {
      pdx[idx + c] = (gamma(c) * cache.inv_std(c) / m) *
                     (m * pdy[idx + c] - dbeta(c) - ph[idx + c] * dgamma(c));
    }
  }
}

// ---------- pointwise and pooling ----------

Tensor4 relu(const Tensor4& x) {
  Tensor4 y = x;
  double* p = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
  return y;
}

void relu_backward(const Tensor4& x, const Tensor4& dy, Tensor4& dx) {
  dx = dy;
  const double* px = x.data();
  double* pd = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (px[i] <= 0.0) pd[i] = 0.0;
  }
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy) {
  return (x.array() > 0.0).select(dy, 0.0);
}

Tensor4 avgpool2d(const Tensor4& x) {
  const int nb = x.dim0(), h = x.dim1() / 2, w = x.dim2() / 2, c = x.dim3();
  if (h == 0 || w == 0) throw ArgumentError("pool: input smaller than the 2x2 window");
  Tensor4 y(nb, h, w, c);
  for (int b = 0; b < nb; ++b) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        for (int ch = 0; ch < c; ++ch) {
          y(b, i, j, ch) = 0.25 * (x(b, 2 * i, 2 * j, ch) + x(b, 2 * i, 2 * j + 1, ch) +
                                   x(b, 2 * i + 1, 2 * j, ch) + x(b, 2 * i + 1, 2 * j + 1, ch));
        }
      }
    }
  }
  return y;
}

void avgpool2d_backward(const Tensor4& dy, int in_h, int in_w, Tensor4& dx) {
  const int nb = dy.dim0(), h = dy.dim1(), w = dy.dim2(), c = dy.dim3();
  dx = Tensor4(nb, in_h, in_w, c);
  for (int b = 0; b < nb; ++b) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        for (int ch = 0; ch < c; ++ch) {
          const double g = 0.25 * dy(b, i, j, ch);
          dx(b, 2 * i, 2 * j, ch) = g;
          dx(b, 2 * i, 2 * j + 1, ch) = g;
          dx(b, 2 * i + 1, 2 * j, ch) = g;
          dx(b, 2 * i + 1, 2 * j + 1, ch) = g;
        }
      }
    }
  }
}

Tensor4 dropout(const Tensor4& x, double rate, Mode mode, Rng& rng, Tensor4* mask) {
  if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout: rate must be in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) {
    if (mask != nullptr) {
      *mask = Tensor4(x.dim0(), x.dim1(), x.dim2(), x.dim3());
      std::fill(mask->data(), mask->data() + mask->size(), 1.0);
    }
    return x;
  }
  const double scale = 1.0 / (1.0 - rate);
  Tensor4 y(x.dim0(), x.dim1(), x.dim2(), x.dim3());
  Tensor4 local(x.dim0(), x.dim1(), x.dim2(), x.dim3());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng.uniform() < rate ? 0.0 : scale;
    local.data()[i] = m;
    y.data()[i] = x.data()[i] * m;
  }
  if (mask != nullptr) *mask = std::move(local);
  return y;
}

SeqBatch dropout(const SeqBatch& x, double rate, Mode mode, Rng& rng, SeqBatch* mask) {
  if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout: rate must be in [0, 1)");
  SeqBatch y(x.size());
  if (mask != nullptr) mask->assign(x.size(), Eigen::MatrixXd());
  const bool off = (mode == Mode::Eval || rate == 0.0);
  const double scale = off ? 1.0 : 1.0 / (1.0 - rate);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (off) {
      y[t] = x[t];
      if (mask != nullptr) (*mask)[t] = Eigen::MatrixXd::Ones(x[t].rows(), x[t].cols());
      continue;
    }
    Eigen::MatrixXd m(x[t].rows(), x[t].cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        m(r, c) = rng.uniform() < rate ? 0.0 : scale;
      }
    }
    y[t] = x[t].cwiseProduct(m);
    if (mask != nullptr) (*mask)[t] = std::move(m);
  }
  return y;
}

// ---------- dense ----------

Eigen::MatrixXd dense(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                      const Eigen::VectorXd& b) {
  if (w.cols() != x.rows() || w.rows() != b.size()) {
    throw ArgumentError("dense: shape mismatch");
  }
  return (w * x).colwise() + b;
}

void dense_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                    const Eigen::MatrixXd& dy, Eigen::MatrixXd& dx, Eigen::MatrixXd& dw,
                    Eigen::VectorXd& db) {
  dw = dy * x.transpose();
  db = dy.rowwise().sum();
  dx = w.transpose() * dy;
}

// ---------- recurrent ----------

void lstm_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, const LstmParams& p, Eigen::VectorXd& h,
               Eigen::VectorXd& c) {
  const int hidden = p.hidden();
  if (h_prev.size() != hidden || c_prev.size() != hidden || x.size() != p.input()) {
    throw ArgumentError("lstm step: state/input size mismatch");
  }
  Eigen::VectorXd z(hidden + x.size());
  z << h_prev, x;
  const Eigen::VectorXd f = sigmoid(p.w_forget * z + p.b_forget);
  const Eigen::VectorXd i = sigmoid(p.w_input * z + p.b_input);
  const Eigen::VectorXd g = (p.w_cell * z + p.b_cell).array().tanh();
  const Eigen::VectorXd o = sigmoid(p.w_output * z + p.b_output);
  c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  h = o.cwiseProduct(c.array().tanh().matrix());
}

SeqBatch lstm_forward(const SeqBatch& x, const LstmParams& p, LstmCache* cache) {
  if (x.empty()) throw ArgumentError("lstm: empty sequence");
  const int hidden = p.hidden();
  const Eigen::Index batch = x[0].cols();
  if (x[0].rows() != p.input()) throw ArgumentError("lstm: input feature mismatch");

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hidden, batch);
  SeqBatch out(x.size());
  if (cache != nullptr) {
    const std::size_t T = x.size();
    cache->z.resize(T);
    cache->f.resize(T);
    cache->i.resize(T);
    cache->g.resize(T);
    cache->o.resize(T);
    cache->c.resize(T);
    cache->tanh_c.resize(T);
  }
  for (std::size_t t = 0; t < x.size(); ++t) {
    Eigen::MatrixXd z(hidden + p.input(), batch);
    z << h, x[t];
    Eigen::MatrixXd f = sigmoid((p.w_forget * z).colwise() + p.b_forget);
    Eigen::MatrixXd i = sigmoid((p.w_input * z).colwise() + p.b_input);
    Eigen::MatrixXd g = ((p.w_cell * z).colwise() + p.b_cell).array().tanh();
    Eigen::MatrixXd o = sigmoid((p.w_output * z).colwise() + p.b_output);
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    Eigen::MatrixXd tanh_c = c.array().tanh();
    h = o.cwiseProduct(tanh_c);
    out[t] = h;
    if (cache != nullptr) {
      cache->z[t] = std::move(z);
      cache->f[t] = std::move(f);
      cache->i[t] = std::move(i);
      cache->g[t] = std::move(g);
      cache->o[t] = std::move(o);
      cache->c[t] = c;
      cache->tanh_c[t] = std::move(tanh_c);
    }
  }
  return out;
}

void lstm_backward(const LstmParams& p, const LstmCache& cache, const SeqBatch& dh_out,
                   LstmParams& grads, SeqBatch& dx) {
  const int hidden = p.hidden();
  const int input = p.input();
  const std::size_t T = cache.z.size();
  const Eigen::Index batch = cache.z[0].cols();

  grads.w_forget = Eigen::MatrixXd::Zero(hidden, hidden + input);
  grads.w_input = Eigen::MatrixXd::Zero(hidden, hidden + input);
  grads.w_cell = Eigen::MatrixXd::Zero(hidden, hidden + input);
  grads.w_output = Eigen::MatrixXd::Zero(hidden, hidden + input);
  grads.b_forget = Eigen::VectorXd::Zero(hidden);
  grads.b_input = Eigen::VectorXd::Zero(hidden);
  grads.b_cell = Eigen::VectorXd::Zero(hidden);
  grads.b_output = Eigen::VectorXd::Zero(hidden);
  dx.assign(T, Eigen::MatrixXd());

  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(hidden, batch);
  for (std::size_t ti = T; ti-- > 0;) {
    const Eigen::MatrixXd& f = cache.f[ti];
    const Eigen::MatrixXd& i = cache.i[ti];
    const Eigen::MatrixXd& g = cache.g[ti];
    const Eigen::MatrixXd& o = cache.o[ti];
    const Eigen::MatrixXd& tanh_c = cache.tanh_c[ti];

    const Eigen::MatrixXd dh = dh_out[ti] + dh_next;
    const Eigen::MatrixXd dc =
        dc_next.array() + dh.array() * o.array() * (1.0 - tanh_c.array().square());
    const Eigen::MatrixXd da_o =
        (dh.array() * tanh_c.array() * o.array() * (1.0 - o.array())).matrix();
    Eigen::MatrixXd c_prev;
    if (ti == 0) {
      c_prev = Eigen::MatrixXd::Zero(hidden, batch);
    } else {
      c_prev = cache.c[ti - 1];
    }
    const Eigen::MatrixXd da_f =
        (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    const Eigen::MatrixXd da_i =
        (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    const Eigen::MatrixXd da_g = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();

    const Eigen::MatrixXd& z = cache.z[ti];
    grads.w_forget += da_f * z.transpose();
    grads.w_input += da_i * z.transpose();
    grads.w_cell += da_g * z.transpose();
    grads.w_output += da_o * z.transpose();
    grads.b_forget += da_f.rowwise().sum();
    grads.b_input += da_i.rowwise().sum();
    grads.b_cell += da_g.rowwise().sum();
    grads.b_output += da_o.rowwise().sum();

    const Eigen::MatrixXd dz = p.w_forget.transpose() * da_f + p.w_input.transpose() * da_i +
                               p.w_cell.transpose() * da_g + p.w_output.transpose() * da_o;
    dh_next = dz.topRows(hidden);
    dx[ti] = dz.bottomRows(input);
    dc_next = dc.cwiseProduct(f);
  }
}

SeqBatch bilstm_forward(const SeqBatch& x, const LstmParams& fwd, const LstmParams& bwd,
                        BilstmCache* cache) {
  const std::size_t T = x.size();
  SeqBatch reversed(T);
  for (std::size_t t = 0; t < T; ++t) reversed[t] = x[T - 1 - t];

  SeqBatch hf = lstm_forward(x, fwd, cache != nullptr ? &cache->fwd : nullptr);
  SeqBatch hb = lstm_forward(reversed, bwd, cache != nullptr ? &cache->bwd : nullptr);

  SeqBatch out(T);
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd both(hf[t].rows() * 2, hf[t].cols());
    both << hf[t], hb[T - 1 - t];
    out[t] = std::move(both);
  }
  return out;
}

void bilstm_backward(const LstmParams& fwd, const LstmParams& bwd, const BilstmCache& cache,
                     const SeqBatch& dh_out, LstmParams& dfwd, LstmParams& dbwd,
                     SeqBatch& dx) {
  const std::size_t T = dh_out.size();
  const int hidden = fwd.hidden();
  SeqBatch dh_f(T), dh_b(T);
  for (std::size_t t = 0; t < T; ++t) {
    dh_f[t] = dh_out[t].topRows(hidden);
    // The backward stream saw time reversed, so route gradients accordingly.
    dh_b[T - 1 - t] = dh_out[t].bottomRows(hidden);
  }
  SeqBatch dx_f, dx_b;
  lstm_backward(fwd, cache.fwd, dh_f, dfwd, dx_f);
  lstm_backward(bwd, cache.bwd, dh_b, dbwd, dx_b);
  dx.assign(T, Eigen::MatrixXd());
  for (std::size_t t = 0; t < T; ++t) {
    dx[t] = dx_f[t] + dx_b[T - 1 - t];
  }
}

// ---------- attention pooling ----------

Eigen::MatrixXd attention_pool(const SeqBatch& h, const AttentionParams& p,
                               AttentionCache* cache) {
  if (h.empty()) throw ArgumentError("attention: empty sequence");
  const Eigen::Index features = h[0].rows();
  const Eigen::Index batch = h[0].cols();
  if (p.w.size() != features) throw ArgumentError("attention: weight size mismatch");

  const std::size_t T = h.size();
  Eigen::MatrixXd scores(static_cast<Eigen::Index>(T), batch);
  for (std::size_t t = 0; t < T; ++t) {
    scores.row(static_cast<Eigen::Index>(t)) =
        (p.w.transpose() * h[t]).array() + p.b;
  }
  const Eigen::RowVectorXd max = scores.colwise().maxCoeff();
  Eigen::MatrixXd alpha = (scores.rowwise() - max).array().exp();
  const Eigen::RowVectorXd sums = alpha.colwise().sum();
  alpha.array().rowwise() /= sums.array();

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(features, batch);
  for (std::size_t t = 0; t < T; ++t) {
    v += h[t] * alpha.row(static_cast<Eigen::Index>(t)).asDiagonal();
  }
  if (cache != nullptr) cache->alpha = std::move(alpha);
  return v;
}

void attention_pool_backward(const SeqBatch& h, const AttentionParams& p,
                             const AttentionCache& cache, const Eigen::MatrixXd& dv,
                             Eigen::VectorXd& dw, double& db, SeqBatch& dh) {
  const std::size_t T = h.size();
  const Eigen::MatrixXd& alpha = cache.alpha;

  Eigen::MatrixXd dalpha(alpha.rows(), alpha.cols());
  for (std::size_t t = 0; t < T; ++t) {
    dalpha.row(static_cast<Eigen::Index>(t)) =
        (h[t].array() * dv.array()).colwise().sum();
  }
  const Eigen::RowVectorXd inner = (alpha.array() * dalpha.array()).colwise().sum();
  const Eigen::MatrixXd ds = alpha.array() * (dalpha.rowwise() - inner).array();

  dw = Eigen::VectorXd::Zero(p.w.size());
  db = 0.0;
  dh.assign(T, Eigen::MatrixXd());
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = ds.row(static_cast<Eigen::Index>(t));
    dh[t] = dv * alpha.row(static_cast<Eigen::Index>(t)).asDiagonal();
    dh[t].noalias() += p.w * row;
    dw.noalias() += h[t] * row.transpose();
    db += row.sum();
  }
}

// ---------- loss ----------

SoftmaxXentResult softmax_xent(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (logits.rows() != 2) throw ArgumentError("softmax loss: expected 2 classes");
  const Eigen::Index batch = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch || batch == 0) {
    throw ArgumentError("softmax loss: label/batch size mismatch");
  }

  SoftmaxXentResult r;
  const Eigen::RowVectorXd max = logits.colwise().maxCoeff();
  Eigen::MatrixXd shifted = logits.rowwise() - max;
  r.probs = shifted.array().exp();
  const Eigen::RowVectorXd sums = r.probs.colwise().sum();
  r.probs.array().rowwise() /= sums.array();

  double total = 0.0;
  r.dlogits = r.probs;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y != 0 && y != 1) throw ArgumentError("softmax loss: labels must be 0 or 1");
    total -= shifted(y, b) - std::log(sums(b));
    r.dlogits(y, b) -= 1.0;
  }
  r.loss = total / static_cast<double>(batch);
  r.dlogits /= static_cast<double>(batch);
  return r;
}

}  // namespace stann
