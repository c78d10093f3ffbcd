#pragma once

// Score network (tanh MLP with hand-written backpropagation), the denoising
// score-matching loss on the last noise block, and the Adam training loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "holdpp/dynamics.hpp"
#include "holdpp/sde.hpp"

namespace holdpp {

inline constexpr std::size_t kTimeFeatures = 16;

/// sin/cos of 2^k * t / horizon for k = 0..7.
inline void time_features(double t, double horizon, std::span<double> out) {
  const double u = t / horizon;
  double freq = 1.0;
  for (std::size_t k = 0; k < kTimeFeatures / 2; ++k, freq *= 2.0) {
    out[2 * k] = std::sin(freq * u);
    out[2 * k + 1] = std::cos(freq * u);
  }
}

struct TrainConfig {
  double T = 5.0;
  double l_inv = 0.5;
  double alpha = 0.08;
  std::size_t batch = 256;
  std::size_t iters = 20000;
  double lr = 1e-3;
  bool cosine_decay = true;
  double t_eps = 5e-3;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;

  void validate() const {
    if (!(T > 0) || !(l_inv > 0) || !(alpha > 0) || !(lr > 0) || !(t_eps > 0))
      throw std::invalid_argument("training config values must be positive");
    if (!(t_eps < T)) throw std::invalid_argument("t_eps must be smaller than T");
    if (batch == 0) throw std::invalid_argument("batch must be positive");
    if (log_every == 0) throw std::invalid_argument("log interval must be positive");
  }
};

/// Fully connected tanh network. Layer l stores its weights input-major
/// (in x out, row-major) followed by out biases; the last layer is linear.
class ScoreNet {
 public:
  ScoreNet() = default;

  ScoreNet(std::vector<std::size_t> layer_dims, double horizon)
      : dims_(std::move(layer_dims)), horizon_(horizon) {
    if (dims_.size() < 2) throw std::invalid_argument("score net needs at least two layer widths");
    for (auto d : dims_)
      if (d == 0) throw std::invalid_argument("layer widths must be positive");
    if (dims_.front() <= kTimeFeatures)
      throw std::invalid_argument("input width must exceed the time-feature width");
    if (!(horizon_ > 0)) throw std::invalid_argument("horizon must be positive");
    params_.assign(param_count(dims_), 0.0);
  }

  /// Default architecture: [n*h + 16] -> hidden... -> h.
  static ScoreNet make(std::size_t n, std::size_t h, double horizon,
                       const std::vector<std::size_t>& hidden = {128, 128, 128}) {
    std::vector<std::size_t> dims{n * h + kTimeFeatures};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(h);
    return ScoreNet(std::move(dims), horizon);
  }

  static std::size_t param_count(const std::vector<std::size_t>& dims) {
    std::size_t c = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) c += dims[l] * dims[l + 1] + dims[l + 1];
    return c;
  }

  /// Glorot-uniform weights, zero biases.
  void init(std::uint64_t seed) {
    Rng rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const std::size_t in = dims_[l], out = dims_[l + 1];
      const double a = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> u(-a, a);
      for (std::size_t i = 0; i < in * out; ++i) params_[off + i] = u(rng);
      for (std::size_t i = 0; i < out; ++i) params_[off + in * out + i] = 0.0;
      off += in * out + out;
    }
  }

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  double horizon() const { return horizon_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t state_dim() const { return dims_.front() - kTimeFeatures; }
  std::size_t output_dim() const { return dims_.back(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t layer_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += dims_[l] * dims_[l + 1] + dims_[l + 1];
    return off;
  }

  /// Activations of one batched pass, kept for backpropagation.
  struct Tape {
    std::size_t batch = 0;
    std::vector<std::vector<double>> acts;  // acts[0] = input, acts[L] = output
  };

  /// inputs is batch x input_dim, row-major.
  void forward(std::span<const double> inputs, std::size_t batch, Tape& tape) const {
    if (inputs.size() != batch * input_dim()) throw DimensionError("score net input size mismatch");
    const std::size_t layers = dims_.size() - 1;
    tape.batch = batch;
    tape.acts.resize(layers + 1);
    tape.acts[0].assign(inputs.begin(), inputs.end());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = dims_[l], out = dims_[l + 1];
      const double* w = params_.data() + off;
      const double* bias = w + in * out;
      const auto& x = tape.acts[l];
      auto& y = tape.acts[l + 1];
      y.assign(batch * out, 0.0);
      for (std::size_t b = 0; b < batch; ++b) {
        double* yr = y.data() + b * out;
        const double* xr = x.data() + b * in;
        for (std::size_t o = 0; o < out; ++o) yr[o] = bias[o];
        for (std::size_t i = 0; i < in; ++i) {
          const double xi = xr[i];
          const double* wr = w + i * out;
          for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wr[o];
        }
        if (l + 1 < layers)
          for (std::size_t o = 0; o < out; ++o) yr[o] = std::tanh(yr[o]);
      }
      off += in * out + out;
    }
  }

  /// Accumulates d(loss)/d(params) into grads given d(loss)/d(output).
  void backward(const Tape& tape, std::span<const double> grad_out, std::span<double> grads) const {
    const std::size_t layers = dims_.size() - 1;
    const std::size_t batch = tape.batch;
    if (grad_out.size() != batch * output_dim()) throw DimensionError("output gradient size mismatch");
    if (grads.size() != params_.size()) throw DimensionError("gradient buffer size mismatch");
    std::vector<double> delta(grad_out.begin(), grad_out.end());
    std::vector<double> prev;
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = dims_[l], out = dims_[l + 1];
      const std::size_t off = layer_offset(l);
      const double* w = params_.data() + off;
      double* gw = grads.data() + off;
      double* gb = gw + in * out;
      const auto& x = tape.acts[l];
      for (std::size_t b = 0; b < batch; ++b) {
        const double* dr = delta.data() + b * out;
        const double* xr = x.data() + b * in;
        for (std::size_t o = 0; o < out; ++o) gb[o] += dr[o];
        for (std::size_t i = 0; i < in; ++i) {
          const double xi = xr[i];
          double* gwr = gw + i * out;
          for (std::size_t o = 0; o < out; ++o) gwr[o] += xi * dr[o];
        }
      }
      if (l == 0) break;
      prev.assign(batch * in, 0.0);
      for (std::size_t b = 0; b < batch; ++b) {
        const double* dr = delta.data() + b * out;
        const double* xr = x.data() + b * in;
        double* pr = prev.data() + b * in;
        for (std::size_t i = 0; i < in; ++i) {
          const double* wr = w + i * out;
          double s = 0.0;
          for (std::size_t o = 0; o < out; ++o) s += wr[o] * dr[o];
          pr[i] = s * (1.0 - xr[i] * xr[i]);  // x = tanh(.)
        }
      }
      delta.swap(prev);
    }
  }

  /// Writes the network input row for one state at time t.
  void encode(const PhaseState& state, double t, std::span<double> row) const {
    const std::size_t sd = state_dim();
    if (state.flat().size() != sd) throw DimensionError("state size does not match score net input");
    std::copy(state.flat().begin(), state.flat().end(), row.begin());
    time_features(t, horizon_, row.subspan(sd, kTimeFeatures));
  }

  /// Batched evaluation at a common time t; out is states.size() x h.
  void evaluate(std::span<const PhaseState> states, double t, std::span<double> out) const {
    std::vector<double> in(states.size() * input_dim());
    for (std::size_t i = 0; i < states.size(); ++i)
      encode(states[i], t, std::span<double>(in).subspan(i * input_dim(), input_dim()));
    Tape tape;
    forward(in, states.size(), tape);
    const auto& y = tape.acts.back();
    std::copy(y.begin(), y.end(), out.begin());
  }

 private:
  std::vector<std::size_t> dims_;
  double horizon_ = 5.0;
  std::vector<double> params_;
};

inline std::vector<double> net_forward(const ScoreNet& net, const PhaseState& state, double t) {
  std::vector<double> out(net.output_dim());
  net.evaluate(std::span<const PhaseState>(&state, 1), t, out);
  return out;
}

struct LossResult {
  double value = 0.0;
  std::vector<double> grads;
};

/// Per-example inputs of the loss, drawn once so the loss can be re-evaluated
/// on a fixed draw (finite-difference checks).
struct LossDraw {
  std::vector<double> inputs;  // batch x input_dim
  std::vector<double> eps_n;   // batch x h
  std::vector<double> ell;     // batch
};

/// Draws t ~ U(t_eps, T) and x_t for every position in the batch.
inline LossDraw draw_loss_inputs(const ScoreNet& net, const DriftSpec& spec,
                                 std::span<const std::vector<double>> batch_positions,
                                 const TrainConfig& cfg, Rng& rng) {
  if (batch_positions.empty()) throw std::invalid_argument("loss needs a nonempty batch");
  const std::size_t h = batch_positions.front().size();
  if (net.output_dim() != h || net.state_dim() != spec.n * h)
    throw DimensionError("score net shape does not match spec and data dimension");
  const std::size_t bsz = batch_positions.size();
  const auto s0 = initial_cov_factor(spec, cfg.alpha);
  std::uniform_real_distribution<double> time_dist(cfg.t_eps, cfg.T);
  LossDraw draw;
  draw.inputs.resize(bsz * net.input_dim());
  draw.eps_n.resize(bsz * h);
  draw.ell.resize(bsz);
  for (std::size_t b = 0; b < bsz; ++b) {
    if (batch_positions[b].size() != h) throw DimensionError("inconsistent data dimension in batch");
    const double t = time_dist(rng);
    const auto stats = forward_stats(spec, t, s0);
    auto fs = sample_forward(stats, batch_positions[b], rng);
    net.encode(fs.state, t, std::span<double>(draw.inputs).subspan(b * net.input_dim(), net.input_dim()));
    std::copy(fs.eps_n.begin(), fs.eps_n.end(), draw.eps_n.begin() + static_cast<long>(b * h));
    draw.ell[b] = fs.ell_t;
  }
  return draw;
}

/// mean over the batch of ||eps_n + ell_t * s||^2 for network outputs s;
/// fills d(loss)/d(s) when grad_out is non-empty.
inline double denoising_loss(std::span<const double> outputs, const LossDraw& draw,
                             std::span<double> grad_out = {}) {
  const std::size_t bsz = draw.ell.size();
  if (bsz == 0 || outputs.size() != draw.eps_n.size())
    throw DimensionError("loss outputs do not match the draw");
  const std::size_t h = outputs.size() / bsz;
  const double inv_b = 1.0 / static_cast<double>(bsz);
  double total = 0.0;
  for (std::size_t b = 0; b < bsz; ++b)
    for (std::size_t d = 0; d < h; ++d) {
      const std::size_t i = b * h + d;
      const double r = draw.eps_n[i] + draw.ell[b] * outputs[i];
      total += r * r;
      if (!grad_out.empty()) grad_out[i] = 2.0 * r * draw.ell[b] * inv_b;
    }
  return total * inv_b;
}

/// Loss and parameter gradients on a fixed draw. eps_n, ell_t and x_t are
/// constants; gradients flow through the network only.
inline LossResult loss_on_draw(const ScoreNet& net, const LossDraw& draw) {
  ScoreNet::Tape tape;
  net.forward(draw.inputs, draw.ell.size(), tape);
  std::vector<double> grad_out(draw.eps_n.size());
  LossResult res;
  res.value = denoising_loss(tape.acts.back(), draw, grad_out);
  if (!std::isfinite(res.value)) throw std::runtime_error("loss is not finite");
  res.grads.assign(net.params().size(), 0.0);
  net.backward(tape, grad_out, res.grads);
  return res;
}

inline LossResult loss(const ScoreNet& net, const DriftSpec& spec,
                       std::span<const std::vector<double>> batch_positions,
                       const TrainConfig& cfg, Rng& rng) {
  return loss_on_draw(net, draw_loss_inputs(net, spec, batch_positions, cfg, rng));
}

class Adam {
 public:
  explicit Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(size, 0.0), v_(size, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

struct TrainResult {
  ScoreNet net;
  std::vector<double> loss_trace;  // mean loss of each log_every window; the last may be shorter
};

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Adam over cfg.iters minibatches drawn with replacement from the dataset.
/// The learning rate follows a half-cosine from cfg.lr to zero when
/// cfg.cosine_decay is set.
inline TrainResult train(ScoreNet net, const DriftSpec& spec,
                         std::span<const std::vector<double>> dataset, const TrainConfig& cfg,
                         const std::function<void(std::size_t, double)>& on_log = {}) {
  cfg.validate();
  if (cfg.iters > 0 && dataset.empty()) throw std::invalid_argument("training needs data");
  TrainResult result{std::move(net), {}};
  if (cfg.iters == 0) return result;
  const std::size_t h = dataset.front().size();
  for (const auto& p : dataset)
    if (p.size() != h) throw DimensionError("dataset points have inconsistent dimension");

  Rng rng(cfg.seed);
  Adam opt(result.net.params().size());
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<std::vector<double>> batch(cfg.batch);
  double window = 0.0;
  std::size_t in_window = 0;
  for (std::size_t it = 0; it < cfg.iters; ++it) {
    for (auto& p : batch) p = dataset[pick(rng)];
    LossResult lr;
    try {
      lr = loss(result.net, spec, batch, cfg, rng);
    } catch (const std::runtime_error& e) {
      throw TrainingDivergence("training failed at iteration " + std::to_string(it) + ": " + e.what());
    }
    double rate = cfg.lr;
    if (cfg.cosine_decay)
      rate *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(it) /
                                    static_cast<double>(cfg.iters)));
    opt.step(result.net.params(), lr.grads, rate);
    for (double p : result.net.params())
      if (!std::isfinite(p))
        throw TrainingDivergence("parameters became non-finite at iteration " + std::to_string(it));
    window += lr.value;
    if (++in_window == cfg.log_every) {
      result.loss_trace.push_back(window / static_cast<double>(in_window));
      if (on_log) on_log(it + 1, result.loss_trace.back());
      window = 0.0;
      in_window = 0;
    }
  }
  if (in_window > 0) {
    result.loss_trace.push_back(window / static_cast<double>(in_window));
    if (on_log) on_log(cfg.iters, result.loss_trace.back());
  }
  return result;
}

/// Adapts a network to the batched score interface of the sampler.
inline BatchScoreFn network_score(const ScoreNet& net) {
  return [&net](std::span<const PhaseState> states, double t, std::span<double> out) {
    net.evaluate(states, t, out);
  };
}

}  // namespace holdpp
