#pragma once

// Independent reference computations used by the verification suites and
// tests: an RK4 integrator for the covariance ODE, the noise Gramian from
// exact moments, exact cofactor-expansion determinants, and the closed-form
// score of a Gaussian data distribution.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "holdpp/dynamics.hpp"
#include "holdpp/linalg.hpp"
#include "holdpp/sde.hpp"
#include "holdpp/spectral.hpp"

namespace holdpp::oracle {

/// Noise part of S_t for a critical spec, summed term by term:
///   2 xi l_inv sum_{k,l} v_k v_l^T int_0^t s^{k+l} e^{2 lambda* s} ds,
/// v_k = (F - lambda* I)^k e_n / k!, moments from the incomplete gamma
/// function. Entries are relatively accurate at small t.
inline Matrix noise_gramian_moments(const DriftSpec& spec, double t) {
  if (!spec.lambda_star) throw std::invalid_argument("noise_gramian_moments requires a critical spec");
  const std::size_t n = spec.n;
  const double c = -2.0 * *spec.lambda_star;
  Matrix nil = drift_matrix(spec);
  for (std::size_t i = 0; i < n; ++i) nil(i, i) -= *spec.lambda_star;
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  v[0][n - 1] = 1.0;
  for (std::size_t k = 1; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += nil(i, j) * v[k - 1][j];
      v[k][i] = acc / static_cast<double>(k);
    }
  // int_0^t s^m e^{-c s} ds = m! / c^{m+1} P(m+1, c t)
  std::vector<double> moment(2 * n - 1);
  for (std::size_t m = 0; m < moment.size(); ++m) {
    const double a = static_cast<double>(m + 1);
    moment[m] = t == 0.0 ? 0.0 : std::tgamma(a) / std::pow(c, a) * boost::math::gamma_p(a, c * t);
  }
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) acc += v[k][i] * v[l][j] * moment[k + l];
      q(i, j) = 2.0 * spec.xi * spec.l_inv * acc;
      q(j, i) = q(i, j);
    }
  return q;
}

/// Integrates dS/dt = F S + S F^T + Q from S(0) = s0 with classical RK4.
inline Matrix covariance_rk4(const Matrix& f, const Matrix& q, const Matrix& s0, double t,
                             double step = 1e-3) {
  if (t < 0) throw std::invalid_argument("covariance_rk4 needs t >= 0");
  const auto ft = f.transpose();
  auto rhs = [&](const Matrix& s) { return f * s + s * ft + q; };
  const auto steps = static_cast<std::size_t>(std::ceil(t / step - 1e-9));
  if (steps == 0) return s0;
  const double h = t / static_cast<double>(steps);
  Matrix s = s0;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto k1 = rhs(s);
    const auto k2 = rhs(s + k1 * (h / 2));
    const auto k3 = rhs(s + k2 * (h / 2));
    const auto k4 = rhs(s + k3 * h);
    s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6);
  }
  return s;
}

/// Determinant by Laplace expansion along the first row; exact for exact
/// coefficient rings. Entries are row-major, size m*m.
template <class T>
T cofactor_determinant(const std::vector<T>& a, std::size_t m) {
  if (m == 0 || a.size() != m * m) throw std::invalid_argument("cofactor_determinant needs m*m entries, m >= 1");
  if (m == 1) return a[0];
  T det{};
  for (std::size_t col = 0; col < m; ++col) {
    std::vector<T> minor;
    minor.reserve((m - 1) * (m - 1));
    for (std::size_t r = 1; r < m; ++r)
      for (std::size_t c = 0; c < m; ++c)
        if (c != col) minor.push_back(a[r * m + c]);
    T term = a[col] * cofactor_determinant(minor, m - 1);
    det = (col % 2 == 0) ? det + term : det - term;
  }
  return det;
}

/// det(A_j - lambda I) for the leading j x j block of F + xi E_nn with the
/// given (rational) gammas, built entry by entry and expanded exactly.
inline spectral::Poly<spectral::Rational> submatrix_charpoly(
    std::size_t j, const std::vector<spectral::Rational>& gammas) {
  using P = spectral::Poly<spectral::Rational>;
  using spectral::Rational;
  if (j > gammas.size() + 1) throw std::out_of_range("submatrix larger than the drift matrix");
  std::vector<P> a(j * j, P());
  for (std::size_t i = 0; i < j; ++i) a[i * j + i] = P({Rational(0), Rational(-1)});
  for (std::size_t i = 0; i + 1 < j; ++i) {
    a[i * j + i + 1] = P::constant(gammas[i]);
    a[(i + 1) * j + i] = P::constant(-gammas[i]);
  }
  return cofactor_determinant(a, j);
}

/// Exact marginal of the forward process when the data are N(m, s^2) in
/// every dimension and the auxiliaries start at N(0, alpha l_inv).
class GaussianMarginal {
 public:
  GaussianMarginal(DriftSpec spec, double data_mean, double data_var, double alpha)
      : spec_(std::move(spec)), m_(data_mean) {
    std::vector<double> d(spec_.n, alpha * spec_.l_inv);
    d[0] = data_var;
    s0_ = Matrix::diagonal(d);
  }

  /// Score of the marginal with respect to the last block.
  std::vector<double> last_block_score(const PhaseState& x, double t) const {
    return last_block_score(x, forward_stats(spec_, t, s0_));
  }

  std::vector<double> last_block_score(const PhaseState& x, const ForwardStats& stats) const {
    const std::size_t n = spec_.n, h = x.dim();
    std::vector<double> out(h);
    std::vector<double> r(n), z(n);
    const auto& l = stats.chol_factor;
    for (std::size_t d = 0; d < h; ++d) {
      for (std::size_t b = 0; b < n; ++b) r[b] = x.at(b, d) - stats.propagator(b, 0) * m_;
      // C^{-1} r via L L^T
      for (std::size_t i = 0; i < n; ++i) {
        double v = r[i];
        for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * z[k];
        z[i] = v / l(i, i);
      }
      for (std::size_t i = n; i-- > 0;) {
        double v = z[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= l(k, i) * z[k];
        z[i] = v / l(i, i);
      }
      out[d] = -z[n - 1];
    }
    return out;
  }

  BatchScoreFn batch_score() const {
    return [this](std::span<const PhaseState> states, double t, std::span<double> out) {
      const std::size_t h = states.empty() ? 0 : states[0].dim();
      const auto stats = forward_stats(spec_, t, s0_);
      for (std::size_t i = 0; i < states.size(); ++i) {
        const auto s = last_block_score(states[i], stats);
        std::copy(s.begin(), s.end(), out.begin() + static_cast<long>(i * h));
      }
    };
  }

 private:
  DriftSpec spec_;
  double m_;
  Matrix s0_;
};

}  // namespace holdpp::oracle
