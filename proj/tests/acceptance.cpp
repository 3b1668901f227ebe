// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Each criterion is a self-contained property check with its own runtime
// budget, printed as [PASS]/[FAIL] with a short result summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stann/errors.hpp"
#include "stann/graph.hpp"
#include "stann/io.hpp"
#include "stann/model.hpp"
#include "stann/montage.hpp"
#include "stann/nn/gradcheck.hpp"
#include "stann/nn/layers.hpp"
#include "stann/pipeline.hpp"
#include "stann/rng.hpp"
#include "stann/synthetic.hpp"
#include "stann/train.hpp"
#include "stann/transfer.hpp"
#include "support/oracles.hpp"

using namespace stann;
namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ helpers

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
  void note(const std::string& what) {
    if (detail.tellp() > 0) detail << "; ";
    detail << what;
  }
};

ParamRef flat_ref(const char* name, double* value, double* grad, long n) {
  ParamRef r;
  r.name = name;
  r.shape = {static_cast<int>(n)};
  r.value = value;
  r.grad = grad;
  r.size = n;
  return r;
}

double dot(const Tensor4& a, const Tensor4& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double dot(const SeqBatch& a, const SeqBatch& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += (a[t].array() * b[t].array()).sum();
  return s;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs_diff(const SeqBatch& a, const SeqBatch& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    m = std::max(m, (a[t] - b[t]).cwiseAbs().maxCoeff());
  }
  return m;
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

std::vector<double> all_model_values(const StannModel& model) {
  std::vector<double> vals;
  for (const auto& b : model.blocks()) {
    for (const auto& p : b.params) vals.insert(vals.end(), p.value, p.value + p.size);
    for (const auto& p : b.buffers) vals.insert(vals.end(), p.value, p.value + p.size);
  }
  return vals;
}

std::vector<double> block_values(const StannModel& model, const std::string& id) {
  std::vector<double> vals;
  for (const auto& p : model.block(id).params) vals.insert(vals.end(), p.value, p.value + p.size);
  for (const auto& p : model.block(id).buffers)
    vals.insert(vals.end(), p.value, p.value + p.size);
  return vals;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stann_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small network for the synthetic corpora: 8 channels x 32 samples.
StannConfig surrogate_config() {
  StannConfig c;
  c.n_channels = 8;
  c.timesteps = 32;
  c.columns = {
      SteColumnSpec{{{{6, 5, 5}, {12, 3, 3}, {6, 3, 3}}}},
      SteColumnSpec{{{{8, 5, 5}, {16, 3, 3}, {8, 3, 3}}}},
      SteColumnSpec{{{{10, 3, 3}, {20, 1, 1}, {10, 1, 1}}}},
  };
  c.ran_hidden = 12;
  c.dense_width = 24;
  return c;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ------------------------------------------------------- criterion 1: table

void criterion_table_parity(Outcome& out) {
  StannConfig config;  // full size: 32 channels x 128 timesteps
  StannModel model(config, 1);
  const auto rows = model.parameter_table();

  std::map<std::string, ParamTableRow> by_name;
  for (const auto& r : rows) by_name[r.name] = r;

  const std::map<std::string, long> params = {
      {"C1_1", 750},   {"C1_2", 900},   {"C1_3", 560},   {"C2_1", 11500},
      {"C2_2", 16500}, {"C2_3", 3600},  {"C3_1", 11375}, {"C3_2", 16350},
      {"C3_3", 3400},  {"C4", 96},      {"RAN1", 72320}, {"RAN2", 154240},
      {"ATT", 161},    {"FC1", 53376},  {"FC2", 258},
  };
  for (const auto& [name, want] : params) {
    if (by_name.count(name) != 1) {
      out.require(false, "missing row " + name);
      continue;
    }
    out.require(by_name[name].table_params == want,
                name + " lists " + std::to_string(by_name[name].table_params) + " not " +
                    std::to_string(want));
  }

  const std::map<std::string, std::array<int, 3>> shapes = {
      {"IN1", {32, 128, 1}},  {"C1_1", {32, 128, 25}}, {"C1_2", {32, 128, 30}},
      {"C1_3", {32, 128, 40}},{"P1_1", {16, 64, 25}},  {"P1_2", {16, 64, 30}},
      {"P1_3", {16, 64, 40}}, {"C2_1", {16, 64, 50}},  {"C2_2", {16, 64, 60}},
      {"C2_3", {16, 64, 80}}, {"P2_1", {8, 32, 50}},   {"P2_2", {8, 32, 60}},
      {"P2_3", {8, 32, 80}},  {"C3_1", {8, 32, 25}},   {"C3_2", {8, 32, 30}},
      {"C3_3", {8, 32, 40}},  {"Con1", {8, 32, 95}},   {"C4", {8, 32, 1}},
      {"IN2", {128, 32, 0}},  {"RAN1", {128, 160, 0}}, {"RAN2", {128, 160, 0}},
      {"ATT", {160, 0, 0}},   {"FC1", {128, 0, 0}},    {"FC2", {2, 0, 0}},
  };
  for (const auto& [name, want] : shapes) {
    if (by_name.count(name) != 1) {
      out.require(false, "missing row " + name);
      continue;
    }
    const auto got = by_name[name].output_shape;
    out.require(got == want, name + " shape {" + std::to_string(got[0]) + "," +
                                 std::to_string(got[1]) + "," + std::to_string(got[2]) + "}");
  }
  if (out.ok) out.note("all 15 parameter counts and 24 output shapes match");
}

// ---------------------------------------------------- criterion 2: spectra

void criterion_spectral_suite(Outcome& out) {
  Rng rng(2024);
  int worst_graph = -1;
  double worst = 0.0;
  for (int trial = 0; trial < 1000 && out.ok; ++trial) {
    const int n = 6 + static_cast<int>(rng.below(19));
    std::vector<Sensor> sensors;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
      p.normalize();
      sensors.push_back({"S" + std::to_string(i), p.x(), p.y(), p.z()});
    }
    const int k = 1 + static_cast<int>(rng.below(std::min(6, n - 1)));
    const SensorGraph graph = build_knn_adjacency(Montage(sensors), k);

    const double asym = (graph.adjacency - graph.adjacency.transpose()).cwiseAbs().maxCoeff();
    out.require(asym == 0.0, "graph " + std::to_string(trial) + ": asymmetric adjacency");

    const Eigen::MatrixXd vtv = graph.eigenvectors.transpose() * graph.eigenvectors;
    const double ortho =
        (vtv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    out.require(ortho <= 1e-8, "graph " + std::to_string(trial) + ": VtV off by " + fmt(ortho, 12));

    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = rng.uniform(-2.0, 2.0);
    }
    const double parseval = std::abs(gft(x, graph).norm() - x.norm());
    out.require(parseval <= 1e-8, "graph " + std::to_string(trial) + ": Parseval gap " +
                                      fmt(parseval, 12));

    const double identity_gap = (lowpass_smooth(x, graph, n) - x).cwiseAbs().maxCoeff();
    out.require(identity_gap <= 1e-10,
                "graph " + std::to_string(trial) + ": full band not identity");

    const int bw = default_bandwidth(n);
    const Eigen::MatrixXd xs = lowpass_smooth(x, graph, bw);
    const double idem = (lowpass_smooth(xs, graph, bw) - xs).cwiseAbs().maxCoeff();
    out.require(idem <= 1e-10, "graph " + std::to_string(trial) + ": not idempotent");

    for (int col = 0; col < 2; ++col) {
      const double rough_before = x.col(col).dot(graph.laplacian * x.col(col));
      const double rough_after = xs.col(col).dot(graph.laplacian * xs.col(col));
      out.require(rough_after <= rough_before + 1e-10 * std::max(1.0, rough_before),
                  "graph " + std::to_string(trial) + ": smoothing raised the quadratic form");
      if (rough_before - rough_after > worst) {
        worst = rough_before - rough_after;
        worst_graph = trial;
      }
    }
  }
  (void)worst_graph;
  if (out.ok) out.note("1000 random graphs clean");
}

// ----------------------------------------------------- criterion 3: oracles

void criterion_oracles(Outcome& out) {
  Rng rng(31);

  double worst_step = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const int hidden = 1 + static_cast<int>(rng.below(6));
    const int input = 1 + static_cast<int>(rng.below(6));
    const LstmParams p = oracle::rand_lstm(hidden, input, rng);
    const Eigen::VectorXd x = oracle::rand_vector(input, rng);
    const Eigen::VectorXd h0 = oracle::rand_vector(hidden, rng);
    const Eigen::VectorXd c0 = oracle::rand_vector(hidden, rng);
    Eigen::VectorXd h, c, ho, co;
    lstm_step(x, h0, c0, p, h, c);
    oracle::lstm_step(x, h0, c0, p, ho, co);
    worst_step = std::max(worst_step, (h - ho).cwiseAbs().maxCoeff());
    worst_step = std::max(worst_step, (c - co).cwiseAbs().maxCoeff());
  }
  out.require(worst_step <= 1e-10, "lstm_step drift " + fmt(worst_step, 14));

  double worst_bi = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int hidden = 1 + static_cast<int>(rng.below(4));
    const int input = 1 + static_cast<int>(rng.below(4));
    const int steps = 1 + static_cast<int>(rng.below(5));
    const int batch = 1 + static_cast<int>(rng.below(3));
    const LstmParams fwd = oracle::rand_lstm(hidden, input, rng);
    const LstmParams bwd = oracle::rand_lstm(hidden, input, rng);
    const SeqBatch x = oracle::rand_seq(steps, input, batch, rng);
    worst_bi = std::max(
        worst_bi, max_abs_diff(bilstm_forward(x, fwd, bwd, nullptr),
                               oracle::bilstm_forward(x, fwd, bwd)));
  }
  out.require(worst_bi <= 1e-10, "bilstm drift " + fmt(worst_bi, 14));

  double worst_att = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int features = 1 + static_cast<int>(rng.below(6));
    const int steps = 1 + static_cast<int>(rng.below(6));
    const int batch = 1 + static_cast<int>(rng.below(4));
    const SeqBatch h = oracle::rand_seq(steps, features, batch, rng, 2.0);
    AttentionParams p;
    p.w = oracle::rand_vector(features, rng);
    p.b = rng.uniform(-1.0, 1.0);
    worst_att = std::max(worst_att,
                         (attention_pool(h, p, nullptr) - oracle::attention_pool(h, p.w, p.b))
                             .cwiseAbs()
                             .maxCoeff());
  }
  out.require(worst_att <= 1e-10, "attention drift " + fmt(worst_att, 14));

  double worst_conv = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int nb = 1 + static_cast<int>(rng.below(3));
    const int h = 1 + static_cast<int>(rng.below(6));
    const int w = 1 + static_cast<int>(rng.below(6));
    const int cin = 1 + static_cast<int>(rng.below(4));
    const int cout = 1 + static_cast<int>(rng.below(4));
    const int kh = 1 + 2 * static_cast<int>(rng.below(3));
    const int kw = 1 + 2 * static_cast<int>(rng.below(3));
    Tensor4 x(nb, h, w, cin), k(kh, kw, cin, cout);
    oracle::fill(x, rng);
    oracle::fill(k, rng);
    const Eigen::VectorXd bias = oracle::rand_vector(cout, rng);
    worst_conv = std::max(
        worst_conv, max_abs_diff(conv2d_same(x, k, bias), oracle::conv2d_same(x, k, bias)));
  }
  out.require(worst_conv <= 1e-10, "conv drift " + fmt(worst_conv, 14));

  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<int> preds(static_cast<std::size_t>(n)), labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      preds[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
    }
    const Metrics got = evaluate_metrics(preds, labels);
    const Metrics want = oracle::metrics(preds, labels);
    out.require(got.tp == want.tp && got.fp == want.fp && got.tn == want.tn &&
                    got.fn == want.fn,
                "metrics counts disagree on instance " + std::to_string(trial));
    out.require(std::abs(got.accuracy - want.accuracy) <= 1e-10 &&
                    std::abs(got.f1 - want.f1) <= 1e-10,
                "metrics values disagree on instance " + std::to_string(trial));
  }
  if (out.ok) {
    out.note("520 instances within 1e-10 (worst " +
             fmt(std::max({worst_step, worst_bi, worst_att, worst_conv}), 14) + ")");
  }
}

// --------------------------------------------------- criterion 4: gradients

StannConfig gradcheck_config() {
  StannConfig c;
  c.n_channels = 4;
  c.timesteps = 16;
  c.columns = {
      SteColumnSpec{{{{3, 3, 3}, {4, 3, 3}, {3, 3, 3}}}},
      SteColumnSpec{{{{2, 5, 5}, {3, 3, 3}, {2, 3, 3}}}},
      SteColumnSpec{{{{3, 3, 3}, {4, 1, 1}, {2, 1, 1}}}},
  };
  c.ran_hidden = 4;
  c.dense_width = 6;
  return c;
}

void criterion_gradients(Outcome& out) {
  // Whole network, eval mode so the loss replays exactly.
  const StannConfig c = gradcheck_config();
  Rng data_rng(17);
  std::vector<LabeledWindow> windows;
  for (int i = 0; i < 6; ++i) {
    LabeledWindow w;
    w.label = i % 2;
    w.x.resize(c.n_channels, c.timesteps);
    for (int ch = 0; ch < c.n_channels; ++ch) {
      for (int t = 0; t < c.timesteps; ++t) {
        w.x(ch, t) = static_cast<float>(data_rng.uniform(-1.0, 1.0));
      }
    }
    windows.push_back(std::move(w));
  }
  std::vector<int> idx = {0, 1, 2, 3, 4, 5};
  const ModelBatch batch = make_batch(windows, idx);
  const std::vector<int> labels = gather_labels(windows, idx);

  StannModel model(c, 51);
  model.set_mode(Mode::Eval);
  std::vector<ParamRef> params;
  for (const auto& b : model.blocks()) {
    for (const auto& p : b.params) params.push_back(p);
  }
  Rng probe(19);
  const auto res = grad_check([&]() { return model.loss_only(batch, labels); },
                              [&]() {
                                model.zero_grads();
                                model.loss_and_grad(batch, labels);
                              },
                              params, 1e-5, 300, probe);
  out.require(res.max_rel_error < 1e-4,
              "network rel error " + fmt(res.max_rel_error, 8) + " at " + res.worst);

  // Individual kernels, each against central differences below 1e-6.
  double worst_kernel = 0.0;
  const auto track = [&](const char* name, const GradCheckResult& r) {
    worst_kernel = std::max(worst_kernel, r.max_rel_error);
    out.require(r.max_rel_error < 1e-6,
                std::string(name) + " rel error " + fmt(r.max_rel_error, 10));
  };

  {
    Rng rng(29);
    Tensor4 x(2, 4, 5, 3), k(3, 3, 3, 4), proj(2, 4, 5, 4);
    oracle::fill(x, rng);
    oracle::fill(k, rng, -0.5, 0.5);
    oracle::fill(proj, rng);
    Eigen::VectorXd bias = oracle::rand_vector(4, rng, 0.2);
    Tensor4 dx(2, 4, 5, 3), dk(3, 3, 3, 4);
    Eigen::VectorXd db = Eigen::VectorXd::Zero(4);
    std::vector<ParamRef> refs = {
        flat_ref("x", x.data(), dx.data(), static_cast<long>(x.size())),
        flat_ref("k", k.data(), dk.data(), static_cast<long>(k.size())),
        flat_ref("b", bias.data(), db.data(), bias.size()),
    };
    Rng p2(5);
    track("conv", grad_check([&]() { return dot(conv2d_same(x, k, bias), proj); },
                             [&]() { conv2d_same_backward(x, k, proj, &dx, dk, db); }, refs,
                             1e-3, 80, p2));
  }
  {
    Rng rng(47);
    const int channels = 4;
    Tensor4 x(3, 2, 2, channels), proj(3, 2, 2, channels);
    oracle::fill(x, rng, -2.0, 2.0);
    oracle::fill(proj, rng);
    Eigen::VectorXd gamma = oracle::rand_vector(channels, rng, 1.0);
    Eigen::VectorXd beta = oracle::rand_vector(channels, rng, 1.0);
    BatchNormState base;
    base.running_mean = Eigen::VectorXd::Zero(channels);
    base.running_var = Eigen::VectorXd::Ones(channels);
    std::vector<double> gx(x.size(), 0.0), gg(channels, 0.0), gb(channels, 0.0);
    std::vector<ParamRef> refs = {
        flat_ref("x", x.data(), gx.data(), static_cast<long>(x.size())),
        flat_ref("gamma", gamma.data(), gg.data(), channels),
        flat_ref("beta", beta.data(), gb.data(), channels),
    };
    Rng p2(13);
    track("batchnorm",
          grad_check(
              [&]() {
                BatchNormState s = base;
                return dot(batchnorm(x, gamma, beta, s, Mode::Train), proj);
              },
              [&]() {
                BatchNormState s = base;
                BatchNormCache cache;
                batchnorm(x, gamma, beta, s, Mode::Train, &cache);
                Tensor4 dx;
                Eigen::VectorXd dgamma, dbeta;
                batchnorm_backward(cache, gamma, proj, dx, dgamma, dbeta);
                std::memcpy(gx.data(), dx.data(), sizeof(double) * dx.size());
                std::memcpy(gg.data(), dgamma.data(), sizeof(double) * gg.size());
                std::memcpy(gb.data(), dbeta.data(), sizeof(double) * gb.size());
              },
              refs, 1e-5, 60, p2));
  }
  {
    Rng rng(53);
    const int in = 7, ncol = 4, batch_n = 5;
    Eigen::MatrixXd x = oracle::rand_matrix(in, batch_n, rng);
    Eigen::MatrixXd w = oracle::rand_matrix(ncol, in, rng);
    Eigen::VectorXd b = oracle::rand_vector(ncol, rng);
    const Eigen::MatrixXd proj = oracle::rand_matrix(ncol, batch_n, rng);
    std::vector<double> gx(static_cast<std::size_t>(in) * batch_n),
        gw(static_cast<std::size_t>(ncol) * in), gb(static_cast<std::size_t>(ncol));
    std::vector<ParamRef> refs = {
        flat_ref("x", x.data(), gx.data(), static_cast<long>(gx.size())),
        flat_ref("w", w.data(), gw.data(), static_cast<long>(gw.size())),
        flat_ref("b", b.data(), gb.data(), static_cast<long>(gb.size())),
    };
    Rng p2(3);
    track("dense", grad_check([&]() { return (dense(x, w, b).array() * proj.array()).sum(); },
                              [&]() {
                                Eigen::MatrixXd dx, dw;
                                Eigen::VectorXd db;
                                dense_backward(x, w, proj, dx, dw, db);
                                std::memcpy(gx.data(), dx.data(), sizeof(double) * gx.size());
                                std::memcpy(gw.data(), dw.data(), sizeof(double) * gw.size());
                                std::memcpy(gb.data(), db.data(), sizeof(double) * gb.size());
                              },
                              refs, 1e-6, 60, p2));
  }
  {
    Rng rng(73);
    const int hidden = 3, input = 4, steps = 5, batch_n = 2;
    LstmParams fwd = oracle::rand_lstm(hidden, input, rng);
    LstmParams bwd = oracle::rand_lstm(hidden, input, rng);
    SeqBatch x = oracle::rand_seq(steps, input, batch_n, rng);
    const SeqBatch proj = oracle::rand_seq(steps, 2 * hidden, batch_n, rng);
    const long wsz = hidden * (hidden + input);
    std::vector<double> g_fwf(static_cast<std::size_t>(wsz)),
        g_fwc(static_cast<std::size_t>(wsz)), g_bwo(static_cast<std::size_t>(wsz)),
        g_fbf(static_cast<std::size_t>(hidden));
    std::vector<std::vector<double>> gx(
        steps, std::vector<double>(static_cast<std::size_t>(input) * batch_n));
    std::vector<ParamRef> refs = {
        flat_ref("fwd.w_forget", fwd.w_forget.data(), g_fwf.data(), wsz),
        flat_ref("fwd.w_cell", fwd.w_cell.data(), g_fwc.data(), wsz),
        flat_ref("bwd.w_output", bwd.w_output.data(), g_bwo.data(), wsz),
        flat_ref("fwd.b_forget", fwd.b_forget.data(), g_fbf.data(), hidden),
    };
    for (int t = 0; t < steps; ++t) {
      refs.push_back(flat_ref("x", x[static_cast<std::size_t>(t)].data(),
                              gx[static_cast<std::size_t>(t)].data(),
                              static_cast<long>(gx[static_cast<std::size_t>(t)].size())));
    }
    Rng p2(7);
    track("bilstm",
          grad_check([&]() { return dot(bilstm_forward(x, fwd, bwd, nullptr), proj); },
                     [&]() {
                       BilstmCache cache;
                       bilstm_forward(x, fwd, bwd, &cache);
                       LstmParams dfwd, dbwd;
                       SeqBatch dx;
                       bilstm_backward(fwd, bwd, cache, proj, dfwd, dbwd, dx);
                       std::memcpy(g_fwf.data(), dfwd.w_forget.data(),
                                   sizeof(double) * static_cast<std::size_t>(wsz));
                       std::memcpy(g_fwc.data(), dfwd.w_cell.data(),
                                   sizeof(double) * static_cast<std::size_t>(wsz));
                       std::memcpy(g_bwo.data(), dbwd.w_output.data(),
                                   sizeof(double) * static_cast<std::size_t>(wsz));
                       std::memcpy(g_fbf.data(), dfwd.b_forget.data(),
                                   sizeof(double) * static_cast<std::size_t>(hidden));
                       for (int t = 0; t < steps; ++t) {
                         std::memcpy(gx[static_cast<std::size_t>(t)].data(),
                                     dx[static_cast<std::size_t>(t)].data(),
                                     sizeof(double) * gx[static_cast<std::size_t>(t)].size());
                       }
                     },
                     refs, 1e-5, 120, p2));
  }
  {
    Rng rng(83);
    const int features = 5, steps = 4, batch_n = 3;
    SeqBatch h = oracle::rand_seq(steps, features, batch_n, rng);
    AttentionParams p;
    p.w = oracle::rand_vector(features, rng);
    p.b = 0.3;
    const Eigen::MatrixXd proj = oracle::rand_matrix(features, batch_n, rng);
    std::vector<double> gw(static_cast<std::size_t>(features)), gb(1);
    std::vector<std::vector<double>> gh(
        steps, std::vector<double>(static_cast<std::size_t>(features) * batch_n));
    std::vector<ParamRef> refs = {
        flat_ref("w", p.w.data(), gw.data(), features),
        flat_ref("b", &p.b, gb.data(), 1),
    };
    for (int t = 0; t < steps; ++t) {
      refs.push_back(flat_ref("h", h[static_cast<std::size_t>(t)].data(),
                              gh[static_cast<std::size_t>(t)].data(),
                              static_cast<long>(gh[static_cast<std::size_t>(t)].size())));
    }
    Rng p2(11);
    track("attention",
          grad_check([&]() { return (attention_pool(h, p, nullptr).array() * proj.array()).sum(); },
                     [&]() {
                       AttentionCache cache;
                       attention_pool(h, p, &cache);
                       Eigen::VectorXd dw;
                       double db = 0.0;
                       SeqBatch dh;
                       attention_pool_backward(h, p, cache, proj, dw, db, dh);
                       std::memcpy(gw.data(), dw.data(), sizeof(double) * gw.size());
                       gb[0] = db;
                       for (int t = 0; t < steps; ++t) {
                         std::memcpy(gh[static_cast<std::size_t>(t)].data(),
                                     dh[static_cast<std::size_t>(t)].data(),
                                     sizeof(double) * gh[static_cast<std::size_t>(t)].size());
                       }
                     },
                     refs, 1e-5, 80, p2));
  }
  if (out.ok) {
    out.note("network " + fmt(res.max_rel_error, 8) + ", kernels " + fmt(worst_kernel, 10));
  }
}

// ---------------------------------------------- criterion 5: learning curve

FitResult quick_fit(const std::vector<LabeledWindow>& windows, int folds, int epochs,
                    std::uint64_t seed) {
  Hyper hyper;
  hyper.epochs = epochs;
  hyper.batch = 60;
  hyper.optimizer.lr = 2e-3;
  hyper.seed = seed;
  const CvPlan plan = kfold_split(static_cast<int>(windows.size()), folds, seed);
  return fit(surrogate_config(), windows, hyper, plan);
}

void criterion_learning(Outcome& out) {
  SyntheticSpec spec;  // defaults: 8 channels, 40 trials, class_effect 2.0
  const Dataset dataset = generate_synthetic(spec, 7);

  PipelineOptions pipe;
  pipe.band = "theta";
  const WindowSet ws = make_windows(dataset, pipe);

  const FitResult real = quick_fit(ws.windows, 10, 8, 5);
  out.require(real.mean_accuracy >= 0.95,
              "separable accuracy " + fmt(real.mean_accuracy) + " < 0.95");

  std::vector<LabeledWindow> shuffled = ws.windows;
  std::vector<int> labels;
  for (const auto& w : shuffled) labels.push_back(w.label);
  Rng mix(99);
  mix.shuffle(labels);
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];

  const FitResult control = quick_fit(shuffled, 10, 8, 5);
  out.require(std::abs(control.mean_accuracy - 0.5) <= 0.05,
              "shuffled control " + fmt(control.mean_accuracy) + " outside 0.5 +/- 0.05");
  out.note("separable " + fmt(real.mean_accuracy) + ", shuffled " +
           fmt(control.mean_accuracy));
}

// --------------------------------------------- criterion 6: smoothing gain

void criterion_smoothing_benefit(Outcome& out) {
  std::vector<double> diffs, with_s, without_s;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticSpec spec;
    spec.n_trials = 24;
    spec.class_effect = 0.2;  // weak signal, so the SNR change is visible
    spec.noise_sd = 1.0;      // spatially white
    spec.focus_sigma = 3.0;   // broad bump: class signal is spatially coherent
    const Dataset dataset = generate_synthetic(spec, 1000 + seed);

    PipelineOptions smooth_pipe;
    smooth_pipe.band = "theta";
    smooth_pipe.knn = 4;
    PipelineOptions raw_pipe = smooth_pipe;
    raw_pipe.knn = 0;

    const double acc_smooth =
        quick_fit(make_windows(dataset, smooth_pipe).windows, 4, 20, seed).mean_accuracy;
    const double acc_raw =
        quick_fit(make_windows(dataset, raw_pipe).windows, 4, 20, seed).mean_accuracy;
    with_s.push_back(acc_smooth);
    without_s.push_back(acc_raw);
    diffs.push_back(acc_smooth - acc_raw);
  }
  const double mean_diff = mean_of(diffs);
  const double sd_diff = sd_of(diffs);
  out.require(mean_diff >= -sd_diff, "smoothing gain " + fmt(mean_diff) + " below -sd " +
                                         fmt(sd_diff));
  out.note("smoothed " + fmt(mean_of(with_s)) + " vs raw " + fmt(mean_of(without_s)) +
           " (gain " + fmt(mean_diff) + ", sd " + fmt(sd_diff) + ", 10 seeds)");
}

// ------------------------------------------------- criterion 7: transfer

void criterion_transfer(Outcome& out) {
  const StannConfig tiny = gradcheck_config();

  // Update blend identities on a tiny model and one fixed batch.
  Rng data_rng(3);
  std::vector<LabeledWindow> toy;
  for (int i = 0; i < 8; ++i) {
    LabeledWindow w;
    w.label = i % 2;
    w.trial_id = "t" + std::to_string(i / 2);
    w.x.resize(tiny.n_channels, tiny.timesteps);
    for (int ch = 0; ch < tiny.n_channels; ++ch) {
      for (int t = 0; t < tiny.timesteps; ++t) {
        w.x(ch, t) = static_cast<float>(data_rng.uniform(-1.0, 1.0)) +
                     (ch == 0 ? (w.label == 1 ? 1.5f : -1.5f) : 0.0f);
      }
    }
    toy.push_back(std::move(w));
  }
  const std::vector<int> idx = {0, 1, 2, 3, 4, 5, 6, 7};
  const ModelBatch batch = make_batch(toy, idx);
  const std::vector<int> labels = gather_labels(toy, idx);

  {  // effective step rate alpha * lr, within 1e-12 of the two-point blend
    const double alpha = 0.3, lr = 1e-2;
    StannModel twin(tiny, 21);
    twin.set_mode(Mode::Train);
    twin.loss_and_grad(batch, labels);
    std::vector<double> want;
    for (const auto& b : twin.blocks()) {
      for (const auto& p : b.params) {
        for (long i = 0; i < p.size; ++i) {
          const double blended =
              (1.0 - alpha) * p.value[i] + alpha * (p.value[i] - lr * p.grad[i]);
          want.push_back(static_cast<double>(static_cast<float>(blended)));
        }
      }
    }
    StannModel model(tiny, 21);
    model.train_step_sgd(batch, labels, alpha * lr);
    std::vector<double> got;
    for (const auto& b : model.blocks()) {
      for (const auto& p : b.params) got.insert(got.end(), p.value, p.value + p.size);
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) gap = std::max(gap, std::abs(got[i] - want[i]));
    out.require(gap <= 1e-12, "blend identity off by " + fmt(gap, 15));
  }
  {  // alpha = 0 leaves parameters bitwise untouched
    StannModel model(tiny, 23);
    BudgetSplit split;
    split.calibration = {0, 1, 2, 3, 4, 5};
    split.test = {6, 7};
    FinetuneConfig cfg;
    cfg.alpha = 0.0;
    cfg.epochs = 2;
    cfg.batch = 8;
    cfg.use_sgd = true;
    finetune(model, freeze_preset('a'), toy, split, cfg, 1);
    std::vector<double> after;
    for (const auto& b : model.blocks()) {
      for (const auto& p : b.params) after.insert(after.end(), p.value, p.value + p.size);
    }
    std::vector<double> params_before;
    {
      StannModel fresh(tiny, 23);
      for (const auto& b : fresh.blocks()) {
        for (const auto& p : b.params) {
          params_before.insert(params_before.end(), p.value, p.value + p.size);
        }
      }
    }
    out.require(after == params_before, "alpha=0 moved parameters");
  }
  {  // alpha = 1 with plain descent equals one plain step per chunk
    BudgetSplit split;
    split.calibration = {0, 1, 2, 3, 4, 5};
    split.test = {6, 7};
    FinetuneConfig cfg;
    cfg.alpha = 1.0;
    cfg.base_lr = 5e-3;
    cfg.epochs = 1;
    cfg.batch = 3;
    cfg.use_sgd = true;
    StannModel tuned(tiny, 29);
    finetune(tuned, FreezeScheme{"none", {}}, toy, split, cfg, 13);

    StannModel manual(tiny, 29);
    manual.set_mode(Mode::Train);
    Rng shuffle(13);
    std::vector<int> order = split.calibration;
    shuffle.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += 3) {
      const std::vector<int> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(start + 3));
      manual.train_step_sgd(make_batch(toy, chunk), gather_labels(toy, chunk), cfg.base_lr);
    }
    out.require(all_model_values(tuned) == all_model_values(manual),
                "alpha=1 differs from a plain step");
  }
  {  // frozen blocks stay bitwise identical through fine-tuning
    StannModel model(tiny, 31);
    const auto scheme = freeze_preset('e');
    const auto frozen_before = block_values(model, "ste.merge");
    const auto lstm_before = block_values(model, "ran.bilstm1");
    BudgetSplit split;
    split.calibration = {0, 1, 2, 3, 4, 5};
    split.test = {6, 7};
    FinetuneConfig cfg;
    cfg.alpha = 0.5;
    cfg.epochs = 3;
    cfg.batch = 4;
    finetune(model, scheme, toy, split, cfg, 17);
    out.require(block_values(model, "ste.merge") == frozen_before &&
                    block_values(model, "ran.bilstm1") == lstm_before,
                "frozen blocks changed during fine-tuning");
  }

  // Fine-tuning a pretrained model beats training from scratch on small
  // calibration budgets, paired over 10 seeds.
  SyntheticSpec source_spec;
  source_spec.n_trials = 20;
  source_spec.class_effect = 0.8;
  SyntheticSpec target_spec = source_spec;
  PipelineOptions pipe;
  pipe.band = "theta";

  const WindowSet source = make_windows(generate_synthetic(source_spec, 400), pipe);
  const WindowSet target = make_windows(generate_synthetic(target_spec, 500), pipe);

  const StannConfig net = surrogate_config();
  StannModel pretrained(net, 11);
  {
    AdamState opt;
    opt.hyper.lr = 2e-3;
    Rng shuffle(11);
    std::vector<int> all(source.windows.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    train_model(pretrained, source.windows, all, 8, 60, opt, shuffle);
  }
  const fs::path dir = fresh_dir("transfer");
  const fs::path ck = dir / "pretrained.ckpt";
  write_checkpoint(pretrained, nullptr, ck);

  for (const std::string& budget_name : {"10pct", "20pct"}) {
    const BudgetSpec budget = parse_budget(budget_name);
    std::vector<double> tl, scratch, diff;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const BudgetSplit split = select_budget(target.windows, budget, seed);

      StannModel tuned = read_checkpoint(ck);
      FinetuneConfig cfg = finetune_config_for(budget);
      const FinetuneResult res =
          finetune(tuned, freeze_preset('a'), target.windows, split, cfg, seed);

      StannModel fresh(net, 7000 + seed);
      AdamState opt;
      Rng shuffle(7000 + seed);
      train_model(fresh, target.windows, split.calibration, cfg.epochs, cfg.batch, opt,
                  shuffle);
      const Metrics scratch_m = evaluate_metrics(
          predict_indices(fresh, target.windows, split.test),
          gather_labels(target.windows, split.test));

      tl.push_back(res.test_metrics.accuracy);
      scratch.push_back(scratch_m.accuracy);
      diff.push_back(res.test_metrics.accuracy - scratch_m.accuracy);
    }
    const double mean_diff = mean_of(diff);
    const double sd_diff = sd_of(diff);
    out.require(mean_diff >= -sd_diff,
                budget_name + ": fine-tuned " + fmt(mean_of(tl)) + " vs scratch " +
                    fmt(mean_of(scratch)) + " (gain " + fmt(mean_diff) + ", sd " +
                    fmt(sd_diff) + ")");
    out.note(budget_name + " fine-tuned " + fmt(mean_of(tl)) + " vs scratch " +
             fmt(mean_of(scratch)));
  }
}

// ------------------------------------------------- criterion 8: protocol

void criterion_protocol(Outcome& out) {
  SyntheticSpec spec;
  spec.fs = 128.0;
  spec.trial_seconds = 60.0;
  spec.pretrial_seconds = 3.0;
  spec.n_trials = 4;
  spec.tone_hz = 6.0;
  const Dataset nine = generate_synthetic(spec, 42);

  PipelineOptions pipe;  // defaults: wide band, 1-second windows
  const WindowSet ws = make_windows(nine, pipe);
  out.require(ws.window_samples == 128, "window is " + std::to_string(ws.window_samples));
  out.require(static_cast<int>(ws.windows.size()) == 60 * spec.n_trials,
              std::to_string(ws.windows.size()) + " windows from " +
                  std::to_string(spec.n_trials) + " one-minute trials");
  out.require(ws.threshold_used == 5.0, "9-point threshold " + fmt(ws.threshold_used, 1));

  SyntheticSpec five = spec;
  five.scale_max = 5;
  five.n_trials = 2;
  const WindowSet ws5 = make_windows(generate_synthetic(five, 43), pipe);
  out.require(ws5.threshold_used == 3.0, "5-point threshold " + fmt(ws5.threshold_used, 1));

  const Hyper hyper;
  out.require(hyper.epochs == 50 && hyper.batch == 300, "training defaults changed");
  const FinetuneConfig ft;
  out.require(ft.alpha == 0.1, "blend default changed");
  out.require(finetune_config_for(parse_budget("1trial")).epochs == 1 &&
                  finetune_config_for(parse_budget("1trial")).patience == 0,
              "1trial schedule");
  out.require(finetune_config_for(parse_budget("10pct")).epochs == 20 &&
                  finetune_config_for(parse_budget("20pct")).epochs == 20,
              "fractional schedule");
  out.require(finetune_config_for(parse_budget("90pct")).epochs == 20 &&
                  finetune_config_for(parse_budget("90pct")).patience == 10,
              "90pct schedule");

  // The run configuration is echoed into the summary file.
  nlohmann::ordered_json prov;
  prov["band"] = pipe.band;
  prov["knn"] = pipe.knn;
  prov["bandwidth"] = ws.bandwidth_used;
  prov["threshold"] = ws.threshold_used;
  prov["window_samples"] = ws.window_samples;
  prov["epochs"] = hyper.epochs;
  prov["batch"] = hyper.batch;
  prov["alpha"] = ft.alpha;
  prov["finetune_epochs"] = {
      {"1trial", finetune_config_for(parse_budget("1trial")).epochs},
      {"10pct", finetune_config_for(parse_budget("10pct")).epochs},
      {"20pct", finetune_config_for(parse_budget("20pct")).epochs},
      {"90pct", finetune_config_for(parse_budget("90pct")).epochs},
  };

  FitResult result;
  FoldMetrics fm;
  fm.metrics.accuracy = 1.0;
  fm.metrics.f1 = 1.0;
  result.folds.push_back(fm);
  result.mean_accuracy = result.mean_f1 = 1.0;

  const fs::path dir = fresh_dir("protocol");
  write_summary_json(result, prov.dump(), dir / "summary.json");
  const auto echoed = nlohmann::ordered_json::parse(slurp(dir / "summary.json"));
  const auto& cfg = echoed.at("config");
  out.require(cfg.at("window_samples").get<int>() == 128 &&
                  cfg.at("threshold").get<double>() == 5.0 &&
                  cfg.at("epochs").get<int>() == 50 && cfg.at("batch").get<int>() == 300 &&
                  cfg.at("alpha").get<double>() == 0.1 &&
                  cfg.at("finetune_epochs").at("90pct").get<int>() == 20,
              "provenance echo mangled");
  if (out.ok) {
    out.note("window 128, 60 windows/trial, thresholds 5 and 3, batch 300, epochs 50, "
             "alpha 0.1, schedule 1/20/20/20");
  }
}

// ----------------------------------------------- criterion 9: persistence

void criterion_persistence(Outcome& out) {
  const fs::path dir = fresh_dir("persistence");

  SyntheticSpec spec;
  spec.n_trials = 4;
  const Dataset dataset = generate_synthetic(spec, 77);
  const fs::path d1 = dir / "ds1";
  const fs::path d2 = dir / "ds2";
  write_dataset(dataset, d1);
  const Dataset loaded = read_dataset(d1);
  write_dataset(loaded, d2);

  out.require(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"),
              "manifest changed across a round trip");
  out.require(slurp(d1 / "montage.csv") == slurp(d2 / "montage.csv"),
              "montage changed across a round trip");
  for (std::size_t i = 0; i < dataset.trials.size(); ++i) {
    std::ostringstream name;
    name << "payloads/trial_" << std::setfill('0') << std::setw(4) << i << ".f32";
    out.require(slurp(d1 / name.str()) == slurp(d2 / name.str()),
                "payload " + name.str() + " changed across a round trip");
  }
  bool trials_equal = loaded.trials.size() == dataset.trials.size();
  for (std::size_t i = 0; trials_equal && i < dataset.trials.size(); ++i) {
    trials_equal = loaded.trials[i].data == dataset.trials[i].data &&
                   loaded.trials[i].pretrial == dataset.trials[i].pretrial &&
                   loaded.trials[i].ratings == dataset.trials[i].ratings;
  }
  out.require(trials_equal, "trial payloads drifted in memory");

  // Checkpoint round trip and one-step resume equality.
  const StannConfig c = gradcheck_config();
  Rng data_rng(5);
  std::vector<LabeledWindow> windows;
  for (int i = 0; i < 8; ++i) {
    LabeledWindow w;
    w.label = i % 2;
    w.x.resize(c.n_channels, c.timesteps);
    for (int ch = 0; ch < c.n_channels; ++ch) {
      for (int t = 0; t < c.timesteps; ++t) {
        w.x(ch, t) = static_cast<float>(data_rng.uniform(-1.0, 1.0)) +
                     (ch == 0 ? (w.label == 1 ? 1.0f : -1.0f) : 0.0f);
      }
    }
    windows.push_back(std::move(w));
  }
  const std::vector<int> first = {0, 1, 2, 3};
  const std::vector<int> second = {4, 5, 6, 7};

  StannModel model(c, 303);
  AdamState opt;
  model.train_step(make_batch(windows, first), gather_labels(windows, first), opt);
  const fs::path ck = dir / "step1.ckpt";
  write_checkpoint(model, &opt, ck);

  AdamState opt_copy;
  StannModel copy = read_checkpoint(ck, &opt_copy);
  const fs::path ck2 = dir / "step1_resaved.ckpt";
  write_checkpoint(copy, &opt_copy, ck2);
  out.require(slurp(ck) == slurp(ck2), "checkpoint bytes changed across a round trip");

  model.train_step(make_batch(windows, second), gather_labels(windows, second), opt);
  copy.train_step(make_batch(windows, second), gather_labels(windows, second), opt_copy);
  out.require(all_model_values(model) == all_model_values(copy),
              "resumed step diverged from the uninterrupted run");
  out.require(model.rng().save_state() == copy.rng().save_state(),
              "dropout stream diverged after resume");
  if (out.ok) out.note("container, checkpoint and resume all bit-exact");
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* label;
    double budget_seconds;
    std::function<void(Outcome&)> run;
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<Criterion> criteria = {
      {1, "layer inventory parity", 1.0, criterion_table_parity},
      {2, "spectral graph suite", 30.0, criterion_spectral_suite},
      {3, "kernel oracle equivalence", 60.0, criterion_oracles},
      {4, "gradient integrity", 120.0, criterion_gradients},
      {5, "learning surrogate", 900.0, criterion_learning},
      {6, "smoothing benefit", 900.0, criterion_smoothing_benefit},
      {7, "transfer suite", 900.0, criterion_transfer},
      {8, "protocol constants", 60.0, criterion_protocol},
      {9, "persistence round trips", 60.0, criterion_persistence},
  };

  bool all_ok = true;
  for (const auto& criterion : criteria) {
    if (!only.empty() && only.count(criterion.id) == 0) continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > criterion.budget_seconds) {
      out.require(false, "took " + fmt(elapsed, 1) + " s, budget " +
                             fmt(criterion.budget_seconds, 0) + " s");
    }
    all_ok = all_ok && out.ok;
    std::cout << (out.ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id << ": "
              << criterion.label << " (" << fmt(elapsed, 1) << " s)";
    const std::string detail = out.detail.str();
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << "\n";
  }
  std::cout << (all_ok ? "acceptance: all criteria passed" : "acceptance: FAILURES above")
            << "\n";
  return all_ok ? 0 : 1;
}
