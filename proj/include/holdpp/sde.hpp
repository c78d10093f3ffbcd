#pragma once

// Closed-form forward sampling and reverse-time Euler-Maruyama generation.
// A state holds n blocks of h values; every n x n operator acts identically
// on each of the h data dimensions.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "holdpp/dynamics.hpp"
#include "holdpp/linalg.hpp"

namespace holdpp {

using Rng = std::mt19937_64;

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

class PhaseState {
 public:
  PhaseState() = default;
  PhaseState(std::size_t n, std::size_t h) : n_(n), h_(h), values_(n * h, 0.0) {}
  PhaseState(std::size_t n, std::size_t h, std::vector<double> values)
      : n_(n), h_(h), values_(std::move(values)) {
    if (values_.size() != n_ * h_) throw DimensionError("phase state length must be n*h");
  }

  std::size_t order() const { return n_; }
  std::size_t dim() const { return h_; }

  /// Block b (0 = position / data, n-1 = last auxiliary).
  std::span<double> block(std::size_t b) { return {values_.data() + b * h_, h_}; }
  std::span<const double> block(std::size_t b) const { return {values_.data() + b * h_, h_}; }

  double& at(std::size_t b, std::size_t d) { return values_[b * h_ + d]; }
  double at(std::size_t b, std::size_t d) const { return values_[b * h_ + d]; }

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }

  bool finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::size_t h_ = 0;
  std::vector<double> values_;
};

/// out_block(b) = sum_c m(b, c) * in_block(c), per data dimension.
inline PhaseState apply_blockwise(const Matrix& m, const PhaseState& in) {
  const std::size_t n = in.order(), h = in.dim();
  if (m.rows() != n || m.cols() != n) throw DimensionError("operator order does not match state");
  PhaseState out(n, h);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < n; ++c) {
      const double w = m(b, c);
      if (w == 0.0) continue;
      for (std::size_t d = 0; d < h; ++d) out.at(b, d) += w * in.at(c, d);
    }
  return out;
}

struct ForwardSample {
  PhaseState state;
  std::vector<double> eps_n;  // last noise block
  double ell_t;               // chol_factor(n-1, n-1)
};

/// x_t = e^{Ft} x0 + (L_t (x) I_h) eps, where x0 carries the data in block 0
/// and zeros elsewhere (auxiliary randomness lives in S0).
inline ForwardSample sample_forward(const ForwardStats& stats, std::span<const double> x0_position,
                                    Rng& rng) {
  const std::size_t n = stats.propagator.rows();
  const std::size_t h = x0_position.size();
  PhaseState eps(n, h);
  for (double& v : eps.flat()) v = standard_normal(rng);

  PhaseState x(n, h);
  for (std::size_t b = 0; b < n; ++b) {
    const double p = stats.propagator(b, 0);
    for (std::size_t d = 0; d < h; ++d) x.at(b, d) = p * x0_position[d];
  }
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c <= b; ++c) {
      const double l = stats.chol_factor(b, c);
      if (l == 0.0) continue;
      for (std::size_t d = 0; d < h; ++d) x.at(b, d) += l * eps.at(c, d);
    }
  auto last = eps.block(n - 1);
  return {std::move(x), std::vector<double>(last.begin(), last.end()),
          stats.chol_factor(n - 1, n - 1)};
}

inline ForwardSample sample_forward(const DriftSpec& spec, std::span<const double> x0_position,
                                    double t, double alpha, Rng& rng) {
  const auto stats = forward_stats(spec, t, initial_cov_factor(spec, alpha));
  return sample_forward(stats, x0_position, rng);
}

/// Drift of the time-reversed SDE, integrated with a positive step while t
/// decreases: -F x + G G^T s, with the score s entering block n only.
/// For n = 1 this is xi x + 2 xi l_inv s.
inline PhaseState reverse_drift(const DriftSpec& spec, const PhaseState& state,
                                std::span<const double> score) {
  if (state.order() != spec.n) throw DimensionError("state order does not match spec");
  if (score.size() != state.dim()) throw DimensionError("score length must equal h");
  const std::size_t n = spec.n, h = state.dim();
  PhaseState out(n, h);
  for (std::size_t b = 0; b < n; ++b) {
    if (b + 1 < n) {
      const double g = spec.gammas[b];
      for (std::size_t d = 0; d < h; ++d) out.at(b, d) -= g * state.at(b + 1, d);
    }
    if (b > 0) {
      const double g = spec.gammas[b - 1];
      for (std::size_t d = 0; d < h; ++d) out.at(b, d) += g * state.at(b - 1, d);
    }
  }
  const double ggt = 2.0 * spec.xi * spec.l_inv;
  for (std::size_t d = 0; d < h; ++d)
    out.at(n - 1, d) += spec.xi * state.at(n - 1, d) + ggt * score[d];
  return out;
}

struct ReverseConfig {
  std::size_t steps = 250;
  double t_end = 5.0;
  double t_eps = 5e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 1) throw std::invalid_argument("reverse integration needs at least one step");
    if (!(t_eps > 0.0) || !(t_eps < t_end))
      throw std::invalid_argument("reverse integration needs 0 < t_eps < t_end");
  }
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Batched score: fills out (states.size() * h, row per state) at time t.
using BatchScoreFn =
    std::function<void(std::span<const PhaseState> states, double t, std::span<double> out)>;
using ScoreFn = std::function<std::vector<double>(const PhaseState& state, double t)>;
/// Called after each step with the step index and the time reached.
using StepObserver =
    std::function<void(std::size_t step, double t, std::span<const PhaseState> states)>;

/// Draws `count` chains from N(0, l_inv I), then integrates the reverse SDE
/// from t_end down to t_eps in uniform Euler-Maruyama steps. Noise enters
/// block n only.
inline std::vector<PhaseState> em_reverse_batch(const DriftSpec& spec, std::size_t h,
                                                std::size_t count, const BatchScoreFn& score_fn,
                                                const ReverseConfig& cfg, Rng& rng,
                                                const StepObserver& observer = {}) {
  cfg.validate();
  spec.validate();
  const std::size_t n = spec.n;
  const double prior_std = std::sqrt(spec.l_inv);
  std::vector<PhaseState> states(count, PhaseState(n, h));
  for (auto& s : states)
    for (double& v : s.flat()) v = prior_std * standard_normal(rng);
  if (observer) observer(0, cfg.t_end, states);

  const double dt = (cfg.t_end - cfg.t_eps) / static_cast<double>(cfg.steps);
  const double noise_scale = std::sqrt(2.0 * spec.xi * spec.l_inv * dt);
  std::vector<double> scores(count * h);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const double t = cfg.t_end - static_cast<double>(step) * dt;
    score_fn(states, t, scores);
    for (std::size_t c = 0; c < count; ++c) {
      auto& x = states[c];
      const auto drift = reverse_drift(spec, x, std::span<const double>(scores).subspan(c * h, h));
      for (std::size_t i = 0; i < n * h; ++i) x.flat()[i] += dt * drift.flat()[i];
      for (std::size_t d = 0; d < h; ++d) x.at(n - 1, d) += noise_scale * standard_normal(rng);
      if (!x.finite())
        throw DivergenceError("reverse integration diverged at step " + std::to_string(step));
    }
    if (observer) observer(step + 1, t - dt, states);
  }
  return states;
}

/// Single-chain form of em_reverse_batch.
inline PhaseState em_reverse(const DriftSpec& spec, std::size_t h, const ScoreFn& score_fn,
                             const ReverseConfig& cfg, Rng& rng) {
  BatchScoreFn batch = [&](std::span<const PhaseState> states, double t, std::span<double> out) {
    const auto s = score_fn(states[0], t);
    if (s.size() != h) throw DimensionError("score function returned wrong length");
    std::copy(s.begin(), s.end(), out.begin());
  };
  return em_reverse_batch(spec, h, 1, batch, cfg, rng).front();
}

}  // namespace holdpp
