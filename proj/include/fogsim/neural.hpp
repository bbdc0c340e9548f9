#pragma once

// Hand-rolled neural kernels shared by the forecasters and the DQN: dense
// layers, a vanilla RNN cell, an LSTM cell, backpropagation through time,
// SGD/Adam, and goal-driven training. Everything is double precision and
// deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/matrix.hpp"
#include "fogsim/popularity.hpp"
#include "fogsim/rng.hpp"

namespace fogsim {

enum class Activation { identity, tanh, sigmoid, relu };

inline double activate(Activation act, double x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

// Derivative expressed through the activation output.
inline double activation_grad(Activation act, double y) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// Flat view over one parameter tensor and its gradient buffer. The finite
// difference oracle and the optimizers both walk these.
struct ParamView {
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t count = 0;
};

class SgdOptimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}

  void step(const std::vector<ParamView>& params) {
    for (const auto& p : params)
      for (std::size_t k = 0; k < p.count; ++k) p.value[k] -= lr_ * p.grad[k];
  }

 private:
  double lr_;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamView>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].count, 0.0);
        v_[i].assign(params[i].count, 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      for (std::size_t k = 0; k < p.count; ++k) {
        const double g = p.grad[k];
        m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
        v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
        p.value[k] -= lr_ * (m_[i][k] / bc1) / (std::sqrt(v_[i][k] / bc2) + eps_);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Vec> m_, v_;
};

// --- multi-layer perceptron --------------------------------------------

struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::identity;
};

class Mlp {
 public:
  Mlp() = default;

  Mlp(const MlpSpec& spec, std::uint64_t seed) : spec_(spec) {
    if (spec.layer_sizes.size() < 2) throw ShapeError("Mlp: need at least input and output sizes");
    for (int n : spec.layer_sizes)
      if (n < 1) throw ShapeError("Mlp: layer sizes must be >= 1");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
      Layer layer;
      layer.w = Mat(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
      layer.gw = Mat(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
      layer.b.assign(spec.layer_sizes[l + 1], 0.0);
      layer.gb.assign(spec.layer_sizes[l + 1], 0.0);
      init_uniform_fan_in(layer.w, spec.layer_sizes[l], rng);
      layers_.push_back(std::move(layer));
    }
  }

  int input_dim() const { return spec_.layer_sizes.front(); }
  int output_dim() const { return spec_.layer_sizes.back(); }

  struct Workspace {
    std::vector<Vec> acts;  // acts[0] = input, acts[l+1] = output of layer l
    Vec delta, delta_next;
  };

  const Vec& forward(const Vec& x, Workspace& ws) const {
    if (static_cast<int>(x.size()) != input_dim()) throw ShapeError("Mlp: input size mismatch");
    ws.acts.resize(layers_.size() + 1);
    ws.acts[0] = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Activation act =
          (l + 1 == layers_.size()) ? spec_.output_activation : spec_.hidden_activation;
      Vec& out = ws.acts[l + 1];
      out.assign(layers_[l].b.begin(), layers_[l].b.end());
      mat_vec_add(layers_[l].w, ws.acts[l], out);
      for (double& v : out) v = activate(act, v);
    }
    return ws.acts.back();
  }

  Vec forward(const Vec& x) const {
    Workspace ws;
    return forward(x, ws);
  }

  // Accumulates parameter gradients for one sample; dloss_dout is dL/dy at
  // the (post-activation) output. Call zero_grads() before a new batch.
  void backward(Workspace& ws, const Vec& dloss_dout) {
    ws.delta = dloss_dout;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
      const Activation act =
          (l + 1 == static_cast<int>(layers_.size())) ? spec_.output_activation
                                                      : spec_.hidden_activation;
      const Vec& out = ws.acts[l + 1];
      for (std::size_t k = 0; k < ws.delta.size(); ++k)
        ws.delta[k] *= activation_grad(act, out[k]);
      outer_add(layers_[l].gw, ws.delta, ws.acts[l]);
      for (std::size_t k = 0; k < ws.delta.size(); ++k) layers_[l].gb[k] += ws.delta[k];
      if (l > 0) {
        ws.delta_next.assign(layers_[l].w.cols, 0.0);
        mat_t_vec_add(layers_[l].w, ws.delta, ws.delta_next);
        std::swap(ws.delta, ws.delta_next);
      }
    }
  }

  void zero_grads() {
    for (auto& l : layers_) {
      l.gw.zero();
      std::fill(l.gb.begin(), l.gb.end(), 0.0);
    }
  }

  std::vector<ParamView> params() {
    std::vector<ParamView> out;
    for (auto& l : layers_) {
      out.push_back({l.w.a.data(), l.gw.a.data(), l.w.size()});
      out.push_back({l.b.data(), l.gb.data(), l.b.size()});
    }
    return out;
  }

  const MlpSpec& spec() const { return spec_; }

 private:
  struct Layer {
    Mat w, gw;
    Vec b, gb;
  };

  MlpSpec spec_;
  std::vector<Layer> layers_;
};

// Mean squared error over a batch of (input, target) rows with gradients
// accumulated into the network. Targets may be shorter than the output when
// only the leading entries carry loss (unused here, kept exact-size).
inline double mlp_mse_gradients(Mlp& net, const std::vector<std::pair<Vec, Vec>>& batch) {
  if (batch.empty()) throw ParamError("mlp_mse_gradients: empty batch");
  net.zero_grads();
  Mlp::Workspace ws;
  Vec dout;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& [x, y] : batch) {
    const Vec& pred = net.forward(x, ws);
    dout.assign(pred.size(), 0.0);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double err = pred[k] - y[k];
      loss += err * err * scale;
      dout[k] = 2.0 * err * scale;
    }
    net.backward(ws, dout);
  }
  return loss;
}

// --- recurrent cells ----------------------------------------------------

class RnnCell {
 public:
  struct StepRec {
    Vec x, h_prev, h;
    double hidden_out(int k) const { return h[k]; }
  };

  RnnCell() = default;

  RnnCell(int input_dim, int hidden, Rng& rng)
      : input_dim_(input_dim), hidden_(hidden),
        wx_(hidden, input_dim), wh_(hidden, hidden),
        gwx_(hidden, input_dim), gwh_(hidden, hidden) {
    b_.assign(hidden, 0.0);
    gb_.assign(hidden, 0.0);
    init_uniform_fan_in(wx_, input_dim, rng);
    init_uniform_fan_in(wh_, hidden, rng);
  }

  int hidden() const { return hidden_; }
  int input_dim() const { return input_dim_; }

  void forward_step(const Vec& x, const Vec& h_prev, Vec& h_out, StepRec& rec) const {
    rec.x = x;
    rec.h_prev = h_prev;
    h_out.assign(b_.begin(), b_.end());
    mat_vec_add(wx_, x, h_out);
    mat_vec_add(wh_, h_prev, h_out);
    for (double& v : h_out) v = std::tanh(v);
    rec.h = h_out;
  }

  // dh is dL/dh at this step (consumed); dh_prev receives dL/dh_{t-1}.
  void backward_step(const StepRec& rec, Vec& dh, Vec& /*dc*/, Vec& dh_prev, Vec& /*dc_prev*/) {
    for (int k = 0; k < hidden_; ++k) dh[k] *= 1.0 - rec.h[k] * rec.h[k];
    outer_add(gwx_, dh, rec.x);
    outer_add(gwh_, dh, rec.h_prev);
    for (int k = 0; k < hidden_; ++k) gb_[k] += dh[k];
    dh_prev.assign(hidden_, 0.0);
    mat_t_vec_add(wh_, dh, dh_prev);
  }

  static constexpr bool has_cell_state = false;

  void zero_grads() {
    gwx_.zero();
    gwh_.zero();
    std::fill(gb_.begin(), gb_.end(), 0.0);
  }

  void collect_params(std::vector<ParamView>& out) {
    out.push_back({wx_.a.data(), gwx_.a.data(), wx_.size()});
    out.push_back({wh_.a.data(), gwh_.a.data(), wh_.size()});
    out.push_back({b_.data(), gb_.data(), b_.size()});
  }

 private:
  int input_dim_ = 0, hidden_ = 0;
  Mat wx_, wh_, gwx_, gwh_;
  Vec b_, gb_;
};

class LstmCell {
 public:
  // Gate block order inside the packed 4H rows: input, forget, candidate, output.
  struct StepRec {
    Vec x, h_prev, c_prev;
    Vec i, f, g, o, c, tc;
    double hidden_out(int k) const { return o[k] * tc[k]; }
  };

  LstmCell() = default;

  LstmCell(int input_dim, int hidden, Rng& rng)
      : input_dim_(input_dim), hidden_(hidden),
        wx_(4 * hidden, input_dim), wh_(4 * hidden, hidden),
        gwx_(4 * hidden, input_dim), gwh_(4 * hidden, hidden) {
    b_.assign(4 * hidden, 0.0);
    gb_.assign(4 * hidden, 0.0);
    init_uniform_fan_in(wx_, input_dim, rng);
    init_uniform_fan_in(wh_, hidden, rng);
  }

  int hidden() const { return hidden_; }
  int input_dim() const { return input_dim_; }

  void forward_step(const Vec& x, const Vec& h_prev, const Vec& c_prev, Vec& h_out, Vec& c_out,
                    StepRec& rec) const {
    rec.x = x;
    rec.h_prev = h_prev;
    rec.c_prev = c_prev;

    Vec z(b_.begin(), b_.end());
    mat_vec_add(wx_, x, z);
    mat_vec_add(wh_, h_prev, z);

    const int H = hidden_;
    rec.i.resize(H);
    rec.f.resize(H);
    rec.g.resize(H);
    rec.o.resize(H);
    rec.c.resize(H);
    rec.tc.resize(H);
    h_out.resize(H);
    c_out.resize(H);
    for (int k = 0; k < H; ++k) {
      rec.i[k] = activate(Activation::sigmoid, z[k]);
      rec.f[k] = activate(Activation::sigmoid, z[H + k]);
      rec.g[k] = std::tanh(z[2 * H + k]);
      rec.o[k] = activate(Activation::sigmoid, z[3 * H + k]);
      rec.c[k] = rec.f[k] * c_prev[k] + rec.i[k] * rec.g[k];
      rec.tc[k] = std::tanh(rec.c[k]);
      h_out[k] = rec.o[k] * rec.tc[k];
      c_out[k] = rec.c[k];
    }
  }

  void backward_step(const StepRec& rec, Vec& dh, Vec& dc, Vec& dh_prev, Vec& dc_prev) {
    const int H = hidden_;
    Vec dz(4 * H);
    for (int k = 0; k < H; ++k) {
      const double dtc = dh[k] * rec.o[k];
      const double dck = dc[k] + dtc * (1.0 - rec.tc[k] * rec.tc[k]);
      const double dik = dck * rec.g[k];
      const double dfk = dck * rec.c_prev[k];
      const double dgk = dck * rec.i[k];
      const double dok = dh[k] * rec.tc[k];
      dz[k] = dik * rec.i[k] * (1.0 - rec.i[k]);
      dz[H + k] = dfk * rec.f[k] * (1.0 - rec.f[k]);
      dz[2 * H + k] = dgk * (1.0 - rec.g[k] * rec.g[k]);
      dz[3 * H + k] = dok * rec.o[k] * (1.0 - rec.o[k]);
      dc_prev[k] = dck * rec.f[k];
    }
    outer_add(gwx_, dz, rec.x);
    outer_add(gwh_, dz, rec.h_prev);
    for (int k = 0; k < 4 * H; ++k) gb_[k] += dz[k];
    dh_prev.assign(H, 0.0);
    mat_t_vec_add(wh_, dz, dh_prev);
  }

  static constexpr bool has_cell_state = true;

  void zero_grads() {
    gwx_.zero();
    gwh_.zero();
    std::fill(gb_.begin(), gb_.end(), 0.0);
  }

  void collect_params(std::vector<ParamView>& out) {
    out.push_back({wx_.a.data(), gwx_.a.data(), wx_.size()});
    out.push_back({wh_.a.data(), gwh_.a.data(), wh_.size()});
    out.push_back({b_.data(), gb_.data(), b_.size()});
  }

 private:
  int input_dim_ = 0, hidden_ = 0;
  Mat wx_, wh_, gwx_, gwh_;
  Vec b_, gb_;
};

// --- windowed forecaster --------------------------------------------------

// Recurrent scalar forecaster: runs the cell over a length-W window and maps
// the final hidden state through a linear head.
template <class Cell>
class Forecaster {
 public:
  Forecaster() = default;

  Forecaster(int window, int hidden, std::uint64_t seed, int input_dim = 1) : window_(window) {
    Rng rng(seed);
    cell_ = Cell(input_dim, hidden, rng);
    head_w_.assign(hidden, 0.0);
    ghead_w_.assign(hidden, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& w : head_w_) w = rng.uniform(-bound, bound);
  }

  int window() const { return window_; }
  Cell& cell() { return cell_; }
  const Cell& cell() const { return cell_; }
  bool is_trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  double forward(const std::vector<double>& inputs) const {
    std::vector<typename Cell::StepRec> recs;
    return forward_collect(inputs, recs);
  }

  // Forward pass that keeps the per-step records; shared by BPTT and by the
  // gate-range tests.
  double forward_collect(const std::vector<double>& inputs,
                         std::vector<typename Cell::StepRec>& recs) const {
    if (static_cast<int>(inputs.size()) != window_)
      throw ShapeError("Forecaster: window length mismatch");
    const int H = cell_.hidden();
    recs.resize(window_);
    Vec h(H, 0.0), c(H, 0.0), h_next(H), c_next(H);
    Vec x(cell_.input_dim());
    for (int t = 0; t < window_; ++t) {
      x.assign(cell_.input_dim(), inputs[t]);
      if constexpr (Cell::has_cell_state) {
        cell_.forward_step(x, h, c, h_next, c_next, recs[t]);
        std::swap(c, c_next);
      } else {
        cell_.forward_step(x, h, h_next, recs[t]);
      }
      std::swap(h, h_next);
    }
    double pred = head_b_;
    for (int k = 0; k < H; ++k) pred += head_w_[k] * h[k];
    return pred;
  }

  // Full-batch MSE and gradients via backpropagation through time.
  double bptt_gradients(const std::vector<const WindowedPair*>& batch) {
    if (batch.empty()) throw ParamError("bptt_gradients: empty batch");
    zero_grads();
    const int H = cell_.hidden();
    const double scale = 1.0 / static_cast<double>(batch.size());
    double mse = 0.0;
    std::vector<typename Cell::StepRec> recs;
    Vec dh(H), dc(H), dh_prev(H), dc_prev(H);
    for (const WindowedPair* pair : batch) {
      const double pred = forward_collect(pair->input, recs);
      const double err = pred - pair->label;
      mse += err * err * scale;
      const double dpred = 2.0 * err * scale;

      const auto& last = recs.back();
      for (int k = 0; k < H; ++k) ghead_w_[k] += dpred * last.hidden_out(k);
      ghead_b_ += dpred;
      for (int k = 0; k < H; ++k) dh[k] = dpred * head_w_[k];
      std::fill(dc.begin(), dc.end(), 0.0);

      for (int t = window_ - 1; t >= 0; --t) {
        cell_.backward_step(recs[t], dh, dc, dh_prev, dc_prev);
        std::swap(dh, dh_prev);
        std::swap(dc, dc_prev);
      }
    }
    return mse;
  }

  double batch_mse(const std::vector<const WindowedPair*>& batch) const {
    double mse = 0.0;
    for (const WindowedPair* pair : batch) {
      const double err = forward(pair->input) - pair->label;
      mse += err * err;
    }
    return mse / static_cast<double>(batch.size());
  }

  void zero_grads() {
    cell_.zero_grads();
    std::fill(ghead_w_.begin(), ghead_w_.end(), 0.0);
    ghead_b_ = 0.0;
  }

  std::vector<ParamView> params() {
    std::vector<ParamView> out;
    cell_.collect_params(out);
    out.push_back({head_w_.data(), ghead_w_.data(), head_w_.size()});
    out.push_back({&head_b_, &ghead_b_, 1});
    return out;
  }

 private:
  int window_ = 0;
  Cell cell_;
  Vec head_w_, ghead_w_;
  double head_b_ = 0.0, ghead_b_ = 0.0;
  bool trained_ = false;
};

using RnnForecaster = Forecaster<RnnCell>;
using LstmForecaster = Forecaster<LstmCell>;

// Feedforward baseline with the same interface: the window is flattened into
// one dense input.
class DenseForecaster {
 public:
  DenseForecaster() = default;

  DenseForecaster(int window, int hidden, std::uint64_t seed)
      : window_(window),
        net_(MlpSpec{{window, hidden, 1}, Activation::tanh, Activation::identity}, seed) {}

  int window() const { return window_; }
  bool is_trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  double forward(const std::vector<double>& inputs) const {
    if (static_cast<int>(inputs.size()) != window_)
      throw ShapeError("DenseForecaster: window length mismatch");
    return net_.forward(inputs)[0];
  }

  double bptt_gradients(const std::vector<const WindowedPair*>& batch) {
    if (batch.empty()) throw ParamError("bptt_gradients: empty batch");
    net_.zero_grads();
    Mlp::Workspace ws;
    Vec dout(1);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double mse = 0.0;
    for (const WindowedPair* pair : batch) {
      const double pred = net_.forward(pair->input, ws)[0];
      const double err = pred - pair->label;
      mse += err * err * scale;
      dout[0] = 2.0 * err * scale;
      net_.backward(ws, dout);
    }
    return mse;
  }

  double batch_mse(const std::vector<const WindowedPair*>& batch) const {
    double mse = 0.0;
    for (const WindowedPair* pair : batch) {
      const double err = forward(pair->input) - pair->label;
      mse += err * err;
    }
    return mse / static_cast<double>(batch.size());
  }

  void zero_grads() { net_.zero_grads(); }
  std::vector<ParamView> params() { return net_.params(); }
  Mlp& net() { return net_; }

 private:
  int window_ = 0;
  Mlp net_;
  bool trained_ = false;
};

// --- training -------------------------------------------------------------

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double goal_mse = 0.01;
  int max_epochs = 5000;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
};

struct TrainReport {
  double final_train_mse = 0.0;
  double test_mse = 0.0;
  int epochs_used = 0;
  std::vector<double> loss_history;
};

inline std::vector<const WindowedPair*> dataset_slice(const WindowedDataset& ds, bool train) {
  std::vector<const WindowedPair*> out;
  const int lo = train ? 0 : ds.split_index;
  const int hi = train ? ds.split_index : static_cast<int>(ds.pairs.size());
  out.reserve(hi - lo);
  for (int i = lo; i < hi; ++i) out.push_back(&ds.pairs[i]);
  return out;
}

// Full-batch steps until the training MSE meets the goal or the epoch budget
// runs out. The goal gates on training MSE; the held-out 30% is only reported.
template <class Model>
TrainReport train_to_goal(Model& model, const WindowedDataset& dataset, const TrainConfig& cfg) {
  if (cfg.goal_mse <= 0) throw ParamError("train_to_goal: goal_mse must be > 0");
  if (cfg.max_epochs < 1) throw ParamError("train_to_goal: max_epochs must be >= 1");
  if (cfg.learning_rate <= 0) throw ParamError("train_to_goal: learning_rate must be > 0");
  if (dataset.split_index < 1 || dataset.split_index > static_cast<int>(dataset.pairs.size()))
    throw DatasetError("train_to_goal: dataset split invalid");

  const auto train = dataset_slice(dataset, true);
  const auto test = dataset_slice(dataset, false);

  SgdOptimizer sgd(cfg.learning_rate);
  AdamOptimizer adam(cfg.learning_rate);

  TrainReport report;
  report.loss_history.reserve(cfg.max_epochs);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double mse = model.bptt_gradients(train);
    if (!std::isfinite(mse))
      throw TrainError("train_to_goal: loss diverged at epoch " + std::to_string(epoch));
    report.loss_history.push_back(mse);
    if (mse <= cfg.goal_mse) break;
    if (cfg.optimizer == OptimizerKind::adam)
      adam.step(model.params());
    else
      sgd.step(model.params());
  }
  report.epochs_used = static_cast<int>(report.loss_history.size());
  report.final_train_mse = report.loss_history.back();
  report.test_mse = test.empty() ? 0.0 : model.batch_mse(test);
  model.mark_trained();
  return report;
}

// Next-slot prediction clamped to the popularity range.
template <class Model>
double predict_next(const Model& model, const std::vector<double>& recent_window) {
  return std::clamp(model.forward(recent_window), 0.0, 1.0);
}

}  // namespace fogsim
