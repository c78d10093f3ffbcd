#pragma once

// Verification suites over the closed-form results: critical-damping
// spectrum, matrix-exponential equivalence, covariance closed form vs ODE,
// stationarity, optimality of critical damping, and the exact
// characteristic-polynomial identities.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "holdpp/dynamics.hpp"
#include "holdpp/linalg.hpp"
#include "holdpp/oracles.hpp"
#include "holdpp/spectral.hpp"

namespace holdpp {

/// 50 significant decimal digits. A defective eigenvalue of multiplicity m is
/// only resolved to about eps^(1/m), so the critical spectrum for n up to 8
/// needs more than double precision to be checked at 1e-4.
using Extended = boost::multiprecision::number<boost::multiprecision::cpp_bin_float_50::backend_type,
                                               boost::multiprecision::et_off>;

struct CheckResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;   // worst observed error
  double tolerance = 0.0;  // pass threshold on residual
  std::string detail;
};

/// Deliberate corruptions of the critical coefficients, to confirm the
/// suites notice them. A mutated spec loses its critical tag, so it is
/// treated as a general drift and only the numeric checks can object.
enum class Mutation { none, flip_gamma2, perturb_gamma2 };

template <class Real>
BasicDriftSpec<Real> mutate(BasicDriftSpec<Real> spec, Mutation m) {
  if (m == Mutation::none || spec.gammas.size() < 2) return spec;
  if (m == Mutation::flip_gamma2) spec.gammas[1] = -spec.gammas[1];
  if (m == Mutation::perturb_gamma2) spec.gammas[1] = spec.gammas[1] * Real(1.01);
  spec.lambda_star.reset();
  return spec;
}

/// -sqrt(2n-3), computed independently of any spec.
template <class Real = double>
Real expected_lambda(std::size_t n) {
  using std::sqrt;
  return -sqrt(Real(static_cast<long>(2 * n - 3)));
}

struct VerifyOptions {
  std::size_t n_max = 8;
  Mutation mutation = Mutation::none;
  std::uint64_t seed = 20240601;
  std::size_t optimality_trials = 1000;
  std::size_t random_specs = 20;
};

namespace detail {

template <class Fn>
CheckResult run_check(const std::string& name, double tolerance, Fn&& body) {
  CheckResult r{name, false, 0.0, tolerance, {}};
  try {
    body(r);
    r.passed = r.residual <= tolerance && r.detail.find("FAIL") == std::string::npos;
  } catch (const std::exception& e) {
    r.passed = false;
    r.residual = std::numeric_limits<double>::infinity();
    r.detail = std::string("error: ") + e.what();
  }
  return r;
}

/// Random symmetric PSD matrix A A^T + 1e-6 I.
inline Matrix random_psd(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = g(rng) / std::sqrt(static_cast<double>(n));
  auto s = a * a.transpose();
  for (std::size_t i = 0; i < n; ++i) s(i, i) += 1e-6;
  return s;
}

inline DriftSpec random_general_spec(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> g(0.5, 2.5), x(0.5, 4.0);
  std::vector<double> gammas(n - 1);
  for (auto& v : gammas) v = g(rng);
  return general_params(std::move(gammas), x(rng), 0.5);
}

inline double max_real_eigenvalue(const Matrix& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& e : eigenvalues(f)) m = std::max(m, e.re);
  return m;
}

}  // namespace detail

inline std::string range_label(std::size_t lo, std::size_t hi) {
  return "n=" + std::to_string(lo) + ".." + std::to_string(hi);
}

/// Every eigenvalue of F within 1e-4 of lambda*, evaluated in extended
/// precision.
inline CheckResult check_critical_spectrum(const VerifyOptions& opt) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("critical spectrum " + range_label(2, hi), 1e-4, [&](CheckResult& r) {
    std::ostringstream d;
    for (std::size_t n = 2; n <= hi; ++n) {
      const auto spec = mutate(critical_params<Extended>(n), opt.mutation);
      const Extended lam = expected_lambda<Extended>(n);
      Extended worst(0);
      for (const auto& e : eigenvalues(drift_matrix(spec), 2000)) {
        const Extended dist = sqrt((e.re - lam) * (e.re - lam) + e.im * e.im);
        worst = std::max(worst, dist);
      }
      r.residual = std::max(r.residual, static_cast<double>(worst));
      d << " n=" << n << ":" << static_cast<double>(worst);
    }
    r.detail = "max |eig - lambda*|" + d.str();
  });
}

/// (F - lambda* I)^n vanishes (extended precision).
inline CheckResult check_nilpotency(const VerifyOptions& opt) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("nilpotency of F - lambda* I " + range_label(2, hi), 1e-8, [&](CheckResult& r) {
    for (std::size_t n = 2; n <= hi; ++n) {
      const auto spec = mutate(critical_params<Extended>(n), opt.mutation);
      auto nil = drift_matrix(spec);
      const Extended lam = expected_lambda<Extended>(n);
      for (std::size_t i = 0; i < n; ++i) nil(i, i) -= lam;
      r.residual = std::max(r.residual, static_cast<double>(max_abs(matrix_power(nil, static_cast<unsigned>(n)))));
    }
    r.detail = "max |entry of (F - lambda* I)^n|";
  });
}

/// The double-precision coefficients match the critical-damping formulas,
/// gamma_1 is exactly 1, and trace(F) = -xi.
inline CheckResult check_critical_coefficients(const VerifyOptions& opt) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("critical coefficients " + range_label(2, hi), 1e-14, [&](CheckResult& r) {
    for (std::size_t n = 2; n <= hi; ++n) {
      const auto spec = mutate(critical_params(n), opt.mutation);
      spec.validate();
      if (spec.gammas[0] != 1.0) r.detail += " FAIL gamma_1 != 1 at n=" + std::to_string(n);
      const double root = -expected_lambda(n), dn = static_cast<double>(n);
      for (std::size_t i = 1; i < n; ++i) {
        const double di = static_cast<double>(i);
        const double g = root * std::sqrt((dn * dn - di * di) / (4 * di * di - 1));
        r.residual = std::max(r.residual, std::abs(spec.gammas[n - i - 1] - g) / g);
      }
      r.residual = std::max(r.residual, std::abs(spec.xi - dn * root) / (dn * root));
      r.residual = std::max(r.residual, std::abs(trace(drift_matrix(spec)) + spec.xi));
    }
    if (r.detail.empty()) r.detail = "max relative error of gamma_i and xi, and |trace(F) + xi|";
  });
}

inline const std::vector<double>& expm_check_times() {
  static const std::vector<double> ts{0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  return ts;
}

/// Nilpotent closed form vs scaling-and-squaring oracle.
inline CheckResult check_expm_equivalence(const VerifyOptions& opt, std::size_t n_hi = 6) {
  const std::size_t hi = std::max<std::size_t>(2, std::min(opt.n_max, n_hi));
  return detail::run_check("expm closed form vs oracle " + range_label(2, hi), 1e-10, [&](CheckResult& r) {
    for (std::size_t n = 2; n <= hi; ++n) {
      const auto spec = mutate(critical_params(n), opt.mutation);
      const auto f = drift_matrix(spec);
      for (double t : expm_check_times())
        r.residual = std::max(r.residual, max_abs(expm_critical(spec, t) - expm_oracle(f, t)));
    }
    r.detail = "max abs entry error, t in {0.01,...,10}";
  });
}

/// Closed-form S_t vs RK4 on the covariance ODE, critical and random specs.
inline CheckResult check_covariance_ode(const VerifyOptions& opt, std::size_t n_hi = 6) {
  const std::size_t hi = std::max<std::size_t>(2, std::min(opt.n_max, n_hi));
  return detail::run_check("covariance closed form vs RK4 " + range_label(1, hi), 1e-6, [&](CheckResult& r) {
    Rng rng(opt.seed);
    const std::vector<double> times{0.1, 0.5, 1.0, 5.0};
    std::vector<DriftSpec> specs{ou_spec(1.0, 0.5)};
    for (std::size_t n = 2; n <= hi; ++n) specs.push_back(mutate(critical_params(n), opt.mutation));
    std::uniform_int_distribution<std::size_t> order(2, hi);
    for (std::size_t i = 0; i < opt.random_specs; ++i) specs.push_back(detail::random_general_spec(order(rng), rng));
    for (const auto& spec : specs) {
      const auto dm = build_drift(spec);
      const auto s0 = detail::random_psd(spec.n, rng);
      for (double t : times) {
        const auto closed = forward_stats(spec, t, s0).cov_factor;
        const auto ode = oracle::covariance_rk4(dm.f, dm.ggt, s0, t, 1e-3);
        r.residual = std::max(r.residual, frobenius_norm(closed - ode));
      }
    }
    r.detail = std::to_string(specs.size()) + " specs x t in {0.1,0.5,1,5}, Frobenius error";
  });
}

/// l_inv I solves the stationary Lyapunov equation, and S_{10T} has reached it.
inline CheckResult check_stationarity(const VerifyOptions& opt, double horizon = 5.0, double l_inv = 0.5,
                                      double alpha = 0.08) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("stationary covariance " + range_label(2, hi), 1e-6, [&](CheckResult& r) {
    double lyap = 0.0, limit = 0.0;
    for (std::size_t n = 2; n <= hi; ++n) {
      const auto spec = mutate(critical_params(n, l_inv), opt.mutation);
      const auto dm = build_drift(spec);
      lyap = std::max(lyap, lyapunov_residual(dm.f, Matrix::identity(n) * l_inv, dm.ggt));
      const auto st = forward_stats(spec, 10.0 * horizon, initial_cov_factor(spec, alpha));
      limit = std::max(limit, max_abs(st.cov_factor - Matrix::identity(n) * l_inv));
    }
    std::ostringstream d;
    d << "lyapunov residual " << lyap << " (tol 1e-12), |S_10T - l_inv I|_max " << limit << " (tol 1e-6)";
    if (lyap > 1e-12) d << " FAIL";
    r.residual = limit;
    r.detail = d.str();
  });
}

/// Random gamma perturbations at fixed xi never push max Re(eig) below lambda*.
inline CheckResult check_optimality(const VerifyOptions& opt, std::size_t n_hi = 6) {
  const std::size_t hi = std::max<std::size_t>(2, std::min(opt.n_max, n_hi));
  return detail::run_check("optimality of critical damping " + range_label(2, hi), 1e-6, [&](CheckResult& r) {
    Rng rng(opt.seed + 17);
    std::uniform_real_distribution<double> log_factor(std::log(0.5), std::log(2.0));
    double worst = -std::numeric_limits<double>::infinity();
    std::ostringstream d;
    for (std::size_t n = 2; n <= hi; ++n) {
      const auto base = mutate(critical_params(n), opt.mutation);
      const double lam = expected_lambda(n);
      const double at_base = detail::max_real_eigenvalue(drift_matrix(base));
      if (std::abs(at_base - lam) > 1e-4 * std::max(1.0, std::sqrt(static_cast<double>(n))) && n <= 3)
        d << " FAIL base spectrum off at n=" << n;
      double margin = std::numeric_limits<double>::infinity();
      for (std::size_t trial = 0; trial < opt.optimality_trials; ++trial) {
        auto p = base;
        p.lambda_star.reset();
        for (auto& g : p.gammas) g *= std::exp(log_factor(rng));
        const double m = detail::max_real_eigenvalue(drift_matrix(p));
        margin = std::min(margin, m - lam);
        worst = std::max(worst, lam - m);
      }
      d << " n=" << n << ":min(maxRe - lambda*)=" << margin;
    }
    r.residual = std::max(0.0, worst);
    r.detail = d.str();
  });
}

// ---------------------------------------------------------------------------
// Exact identities

/// s_closed == s_recurrence(critical gammas) on every valid (i, k).
inline CheckResult check_s_closed_form(const VerifyOptions& opt) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("s closed form == recurrence " + range_label(2, hi), 0.0, [&](CheckResult& r) {
    using namespace spectral;
    std::size_t compared = 0;
    for (std::size_t n = 2; n <= hi; ++n) {
      const Rational lam_sq(static_cast<long>(2 * n - 3));
      const auto table = s_recurrence(n, critical_gammas_sq(n));
      for (std::size_t i = 1; i < n; ++i)
        for (std::size_t k = 0; k <= n / 2; ++k) {
          if (!(static_cast<long>(n - i) > 2 * static_cast<long>(k) - 2)) continue;
          ++compared;
          if (s_closed(n, i, k, lam_sq) != table.at(static_cast<long>(n - i), static_cast<long>(k))) {
            r.residual = 1.0;
            r.detail += " FAIL n=" + std::to_string(n) + " i=" + std::to_string(i) + " k=" + std::to_string(k);
          }
        }
    }
    if (r.detail.empty()) r.detail = std::to_string(compared) + " entries equal exactly";
  });
}

/// (-1)^n q(lambda) == (lambda - lambda*)^n in Q(lambda*).
inline CheckResult check_q_binomial(const VerifyOptions& opt) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("(-1)^n q == (lambda - lambda*)^n " + range_label(2, hi), 0.0, [&](CheckResult& r) {
    using namespace spectral;
    for (std::size_t n = 2; n <= hi; ++n) {
      const Surd lam = critical_lambda(n);
      const auto gsq_r = critical_gammas_sq(n);
      std::vector<Surd> gsq(gsq_r.begin(), gsq_r.end());
      const Surd xi = Surd(static_cast<int>(-static_cast<long>(n))) * lam;  // n |lambda*|
      auto q = q_poly(n, gsq, xi);
      if (n % 2 == 1) q = -q;
      if (!(q == binomial_expansion(n, lam))) {
        r.residual = 1.0;
        r.detail += " FAIL n=" + std::to_string(n);
      }
    }
    if (r.detail.empty()) r.detail = "all coefficients equal exactly";
  });
}

/// gamma_from_s is independent of k and reproduces the critical gamma^2, from
/// both the closed-form table and the recurrence table.
inline CheckResult check_gamma_from_s(const VerifyOptions& opt) {
  const std::size_t hi = std::max<std::size_t>(2, opt.n_max);
  return detail::run_check("gamma^2 recovered from s, k-invariant " + range_label(2, hi), 0.0, [&](CheckResult& r) {
    using namespace spectral;
    std::size_t compared = 0;
    for (std::size_t n = 2; n <= hi; ++n) {
      const Rational lam_sq(static_cast<long>(2 * n - 3));
      const auto closed = s_table_closed(n, lam_sq);
      const auto rec = s_recurrence(n, critical_gammas_sq(n));
      for (std::size_t i = 1; i < n; ++i) {
        const long li = static_cast<long>(i), ln = static_cast<long>(n);
        const Rational expected = Rational(ln * ln - li * li, 4 * li * li - 1) * lam_sq;
        for (long k = 1; ln - li > 2 * k - 2; ++k) {
          ++compared;
          const auto a = gamma_from_s(n, i, static_cast<std::size_t>(k), closed);
          const auto b = gamma_from_s(n, i, static_cast<std::size_t>(k), rec);
          if (a != expected || b != expected) {
            r.residual = 1.0;
            r.detail += " FAIL n=" + std::to_string(n) + " i=" + std::to_string(i) + " k=" + std::to_string(k);
          }
        }
      }
    }
    if (r.detail.empty()) r.detail = std::to_string(compared) + " (i,k) pairs equal exactly";
  });
}

/// d_poly matches exact cofactor expansion of the leading submatrices for
/// random integer gammas.
inline CheckResult check_d_poly_determinant(const VerifyOptions& opt, std::size_t n_hi = 6) {
  const std::size_t hi = std::max<std::size_t>(2, std::min(opt.n_max, n_hi));
  return detail::run_check("d_j recurrence == submatrix determinant " + range_label(2, hi), 0.0, [&](CheckResult& r) {
    using namespace spectral;
    Rng rng(opt.seed + 5);
    std::uniform_int_distribution<int> g(1, 9);
    for (std::size_t n = 2; n <= hi; ++n) {
      std::vector<Rational> gammas(n - 1), gsq(n - 1);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        gammas[i] = g(rng);
        gsq[i] = gammas[i] * gammas[i];
      }
      for (std::size_t j = 1; j <= n; ++j)
        if (!(d_poly(j, gsq) == oracle::submatrix_charpoly(j, gammas))) {
          r.residual = 1.0;
          r.detail += " FAIL n=" + std::to_string(n) + " j=" + std::to_string(j);
        }
    }
    if (r.detail.empty()) r.detail = "all leading submatrices agree exactly";
  });
}

inline std::vector<CheckResult> verify_dynamics(const VerifyOptions& opt) {
  return {check_critical_coefficients(opt), check_critical_spectrum(opt), check_nilpotency(opt),
          check_expm_equivalence(opt),      check_covariance_ode(opt),    check_stationarity(opt)};
}

inline std::vector<CheckResult> verify_optimality(const VerifyOptions& opt) { return {check_optimality(opt)}; }

inline std::vector<CheckResult> verify_spectral(const VerifyOptions& opt) {
  return {check_s_closed_form(opt), check_q_binomial(opt), check_gamma_from_s(opt), check_d_poly_determinant(opt)};
}

}  // namespace holdpp
