#pragma once

// Forward process of higher-order Langevin dynamics: drift/diffusion
// matrices, critically damped coefficients, and the closed-form forward
// mean and covariance. Covariances are kept as the n x n Kronecker factor;
// the full (n*h) x (n*h) matrix is never formed.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "holdpp/linalg.hpp"

namespace holdpp {

template <class Real>
struct BasicDriftSpec {
  std::size_t n = 1;
  std::vector<Real> gammas;  // gamma_1 .. gamma_{n-1}
  Real xi = Real(1);
  Real l_inv = Real(0.5);
  std::optional<Real> lambda_star;  // present iff critically damped

  bool critical() const { return lambda_star.has_value(); }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    using std::abs;
    if (n < 1) throw std::invalid_argument("drift order must be >= 1");
    if (gammas.size() != n - 1)
      throw std::invalid_argument("drift spec needs exactly n-1 gammas");
    for (std::size_t i = 0; i < gammas.size(); ++i)
      if (!(gammas[i] > Real(0))) {
        std::ostringstream msg;
        msg << "gamma_" << i + 1 << " must be positive (got " << gammas[i] << ")";
        throw std::invalid_argument(msg.str());
      }
    if (!(xi > Real(0))) throw std::invalid_argument("xi must be positive");
    if (!(l_inv > Real(0))) throw std::invalid_argument("l_inv must be positive");
    if (!lambda_star) return;
    const Real lam = *lambda_star;
    if (!(lam < Real(0))) throw std::invalid_argument("lambda_star must be negative");
    const Real tol(1e-12);
    if (n == 1) {
      if (abs(xi + lam) > tol * xi)
        throw std::invalid_argument("order-1 spec requires xi = -lambda_star");
      return;
    }
    const Real lam_sq = lam * lam;
    for (std::size_t i = 1; i < n; ++i) {
      const Real ni = Real(n * n - i * i) / Real(4 * i * i - 1);
      const Real expected = ni * lam_sq;
      const Real g = gammas[n - i - 1];
      if (abs(g * g - expected) > tol * expected) {
        std::ostringstream msg;
        msg << "gamma_" << n - i << " violates critical damping";
        throw std::invalid_argument(msg.str());
      }
    }
    const Real expected_xi = Real(n) * abs(lam);
    if (abs(xi - expected_xi) > tol * expected_xi)
      throw std::invalid_argument("xi violates critical damping (xi = n|lambda_star|)");
  }
};

using DriftSpec = BasicDriftSpec<double>;

/// Critically damped coefficients with gamma_1 = 1, so lambda* = -sqrt(2n-3).
template <class Real = double>
BasicDriftSpec<Real> critical_params(std::size_t n, Real l_inv = Real(0.5)) {
  using std::sqrt;
  if (n < 2) throw std::invalid_argument("critical_params requires order n >= 2");
  const Real root = sqrt(Real(2 * n - 3));
  BasicDriftSpec<Real> spec;
  spec.n = n;
  spec.l_inv = l_inv;
  spec.lambda_star = -root;
  spec.xi = Real(n) * root;
  spec.gammas.assign(n - 1, Real(0));
  for (std::size_t i = 1; i < n; ++i) {
    const Real ratio = Real(n * n - i * i) / Real(4 * i * i - 1);
    spec.gammas[n - i - 1] = root * sqrt(ratio);
  }
  spec.gammas[0] = Real(1);  // exact; the formula only rounds to it
  return spec;
}

/// Order-1 (Ornstein-Uhlenbeck) spec. Its single eigenvalue -xi plays the
/// role of lambda*.
template <class Real = double>
BasicDriftSpec<Real> ou_spec(Real xi = Real(1), Real l_inv = Real(0.5)) {
  BasicDriftSpec<Real> spec;
  spec.n = 1;
  spec.xi = xi;
  spec.l_inv = l_inv;
  spec.lambda_star = -xi;
  return spec;
}

/// Arbitrary positive coefficients (the non-critical, HOLD-style case).
template <class Real = double>
BasicDriftSpec<Real> general_params(std::vector<Real> gammas, Real xi, Real l_inv = Real(0.5)) {
  BasicDriftSpec<Real> spec;
  spec.n = gammas.size() + 1;
  spec.gammas = std::move(gammas);
  spec.xi = xi;
  spec.l_inv = l_inv;
  spec.validate();
  return spec;
}

template <class Real>
struct DriftMatrices {
  BasicMatrix<Real> f;
  BasicMatrix<Real> ggt;
};

template <class Real>
BasicMatrix<Real> drift_matrix(const BasicDriftSpec<Real>& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  BasicMatrix<Real> f(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    f(i, i + 1) = spec.gammas[i];
    f(i + 1, i) = -spec.gammas[i];
  }
  f(n - 1, n - 1) = -spec.xi;
  return f;
}

/// F and G G^T. Note G G^T = -l_inv (F + F^T) holds exactly.
template <class Real>
DriftMatrices<Real> build_drift(const BasicDriftSpec<Real>& spec) {
  DriftMatrices<Real> out{drift_matrix(spec), BasicMatrix<Real>(spec.n, spec.n)};
  out.ggt(spec.n - 1, spec.n - 1) = Real(2) * spec.xi * spec.l_inv;
  return out;
}

/// e^{Ft} = e^{lambda* t} sum_{k<n} (F - lambda* I)^k t^k / k!, valid because
/// F - lambda* I is nilpotent for a critically damped spec.
template <class Real>
BasicMatrix<Real> expm_critical(const BasicDriftSpec<Real>& spec, const Real& t) {
  using std::exp;
  if (!spec.lambda_star)
    throw std::invalid_argument("expm_critical requires a critically damped spec");
  if (!(t >= Real(0))) throw std::invalid_argument("expm_critical requires t >= 0");
  const std::size_t n = spec.n;
  const Real lam = *spec.lambda_star;
  BasicMatrix<Real> nil = drift_matrix(spec);
  for (std::size_t i = 0; i < n; ++i) nil(i, i) -= lam;

  auto sum = BasicMatrix<Real>::identity(n);
  auto term = BasicMatrix<Real>::identity(n);
  for (std::size_t k = 1; k < n; ++k) {
    term = term * nil;
    term *= t / Real(k);
    sum += term;
  }
  sum *= exp(lam * t);
  return sum;
}

/// e^{Ft} for any spec: the nilpotent expansion when critical, otherwise the
/// generic oracle.
template <class Real>
BasicMatrix<Real> propagator(const BasicDriftSpec<Real>& spec, const Real& t) {
  if (spec.critical()) return expm_critical(spec, t);
  return expm_oracle(drift_matrix(spec), t);
}

template <class Real>
struct BasicForwardStats {
  Real t;
  BasicMatrix<Real> propagator;   // e^{Ft}
  BasicMatrix<Real> cov_factor;   // S_t, full covariance is S_t (x) I_h
  BasicMatrix<Real> chol_factor;  // lower triangular, chol * chol^T = S_t
};

using ForwardStats = BasicForwardStats<double>;

/// Kronecker factor of the initial covariance: zero position variance and
/// alpha * l_inv on every auxiliary block.
template <class Real>
BasicMatrix<Real> initial_cov_factor(const BasicDriftSpec<Real>& spec, const Real& alpha) {
  std::vector<Real> d(spec.n, alpha * spec.l_inv);
  d[0] = Real(0);
  return BasicMatrix<Real>::diagonal(d);
}

/// l_inv I + e^{Ft} (S0 - l_inv I) e^{Ft}^T. Exact for any spec, but for
/// small t the entries come out of a difference of O(l_inv) terms and are
/// only accurate to about 1e-17 absolute.
template <class Real>
BasicMatrix<Real> covariance_closed_form(const BasicDriftSpec<Real>& spec, const BasicMatrix<Real>& prop,
                                         const BasicMatrix<Real>& s0) {
  const std::size_t n = spec.n;
  auto shifted = s0;
  for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= spec.l_inv;
  auto cov = prop * shifted * prop.transpose();
  for (std::size_t i = 0; i < n; ++i) cov(i, i) += spec.l_inv;
  return cov;
}

namespace detail {

/// Columns of a factor of int_0^t e^{Fs} e_n e_n^T e^{F^T s} ds on a short
/// interval: 30-point Gauss-Legendre nodes, each column sqrt(w) e^{F s} e_n.
template <class Real>
BasicMatrix<Real> short_noise_factor(const BasicDriftSpec<Real>& spec, const BasicMatrix<Real>& nil,
                                     const Real& t) {
  using std::exp;
  using std::sqrt;
  using Rule = boost::math::quadrature::gauss<Real, 30>;
  const std::size_t n = spec.n;
  const Real half = t / Real(2);
  std::vector<Real> nodes, weights;
  for (std::size_t q = 0; q < Rule::abscissa().size(); ++q) {
    const Real x = Rule::abscissa()[q], w = Rule::weights()[q];
    nodes.push_back(half * (Real(1) + x));
    weights.push_back(half * w);
    if (x != Real(0)) {
      nodes.push_back(half * (Real(1) - x));
      weights.push_back(half * w);
    }
  }
  BasicMatrix<Real> a(n, nodes.size());
  std::vector<Real> term(n), next(n);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const Real s = nodes[q];
    // e^{Fs} e_n = e^{lambda* s} sum_k N^k e_n s^k / k!
    std::fill(term.begin(), term.end(), Real(0));
    term[n - 1] = Real(1);
    std::vector<Real> col = term;
    for (std::size_t k = 1; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        Real acc(0);
        for (std::size_t j = 0; j < n; ++j) acc += nil(i, j) * term[j];
        next[i] = acc * s / Real(static_cast<long>(k));
      }
      term.swap(next);
      for (std::size_t i = 0; i < n; ++i) col[i] += term[i];
    }
    const Real scale = sqrt(weights[q]) * exp(*spec.lambda_star * s);
    for (std::size_t i = 0; i < n; ++i) a(i, q) = scale * col[i];
  }
  return a;
}

}  // namespace detail

/// Lower-triangular factor of the noise part of S_t for a critical spec,
///   2 xi l_inv int_0^t e^{Fs} e_n e_n^T e^{F^T s} ds.
/// Quadrature on [0, t / 2^k] with |2 lambda*| t / 2^k <= 1, then k doublings
/// Q_{2s} = Q_s + e^{Fs} Q_s e^{Fs}^T, each re-triangularized by QR.
template <class Real>
BasicMatrix<Real> critical_noise_factor(const BasicDriftSpec<Real>& spec, const Real& t) {
  using std::sqrt;
  if (!spec.lambda_star) throw std::invalid_argument("critical_noise_factor requires a critically damped spec");
  if (!(t >= Real(0))) throw std::invalid_argument("critical_noise_factor requires t >= 0");
  const std::size_t n = spec.n;
  BasicMatrix<Real> nil = drift_matrix(spec);
  for (std::size_t i = 0; i < n; ++i) nil(i, i) -= *spec.lambda_star;

  const Real rate = Real(-2) * *spec.lambda_star;
  std::size_t doublings = 0;
  Real t0 = t;
  while (rate * t0 > Real(1)) {
    t0 /= Real(2);
    ++doublings;
  }
  auto factor = triangular_factor(detail::short_noise_factor(spec, nil, t0));
  factor *= sqrt(Real(2) * spec.xi * spec.l_inv);
  BasicMatrix<Real> both(n, 2 * n);
  for (std::size_t d = 0; d < doublings; ++d) {
    const auto moved = expm_critical(spec, t0) * factor;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        both(i, j) = factor(i, j);
        both(i, n + j) = moved(i, j);
      }
    factor = triangular_factor(both);
    t0 *= Real(2);
  }
  return factor;
}

/// S_t and its lower-triangular factor. For critical specs the factor comes
/// from QR of [e^{Ft} chol(S0), critical_noise_factor], which stays valid at
/// small t where S_t is nearly singular; other specs use
/// covariance_closed_form and cholesky.
template <class Real>
BasicForwardStats<Real> forward_stats(const BasicDriftSpec<Real>& spec, const Real& t,
                                      const BasicMatrix<Real>& s0) {
  if (s0.rows() != spec.n || !s0.square())
    throw DimensionError("initial covariance factor must be n x n");
  if (!(t >= Real(0))) throw std::invalid_argument("forward_stats requires t >= 0");
  const std::size_t n = spec.n;
  auto prop = propagator(spec, t);
  if (spec.critical()) {
    const auto moved = prop * cholesky(s0);
    const auto noise = critical_noise_factor(spec, t);
    BasicMatrix<Real> both(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        both(i, j) = moved(i, j);
        both(i, n + j) = noise(i, j);
      }
    auto cov = moved * moved.transpose() + noise * noise.transpose();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) cov(j, i) = cov(i, j);
    auto chol = triangular_factor(both);
    return {t, std::move(prop), std::move(cov), std::move(chol)};
  }
  auto cov = covariance_closed_form(spec, prop, s0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Real avg = (cov(i, j) + cov(j, i)) / Real(2);
      cov(i, j) = avg;
      cov(j, i) = avg;
    }
  auto chol = cholesky(cov);
  return {t, std::move(prop), std::move(cov), std::move(chol)};
}

struct OuStats {
  double mean_coeff;
  double std;
};

/// Closed-form order-1 marginal N(e^{-xi t} x0, (l_inv + (sigma0^2 - l_inv) e^{-2 xi t}) I).
inline OuStats ou_stats(double xi, double l_inv, double sigma0_sq, double t) {
  if (!(t >= 0)) throw std::invalid_argument("ou_stats requires t >= 0");
  if (!(xi > 0) || !(l_inv > 0)) throw std::invalid_argument("ou_stats requires xi, l_inv > 0");
  if (!(sigma0_sq >= 0)) throw std::invalid_argument("ou_stats requires sigma0^2 >= 0");
  const double var = l_inv + (sigma0_sq - l_inv) * std::exp(-2.0 * xi * t);
  if (var < 0) throw std::domain_error("ou_stats produced a negative variance");
  return {std::exp(-xi * t), std::sqrt(var)};
}

}  // namespace holdpp
