#pragma once

// Exact-arithmetic characteristic-polynomial machinery for the drift matrix:
// the d_j recurrence, the bivariate sequence s_{j,k}, its closed form, and
// recovery of gamma^2 from s. Coefficients that involve lambda* live in
// Q(lambda*) with lambda*^2 rational, stored as a + b * lambda*.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace holdpp::spectral {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// a + b * root where root^2 == square (a rational). square == 0 marks a
/// plain rational that can combine with any root.
class Surd {
 public:
  Surd() = default;
  Surd(Rational a) : a_(std::move(a)) {}  // NOLINT(google-explicit-constructor)
  Surd(int a) : a_(a) {}                  // NOLINT(google-explicit-constructor)
  Surd(Rational a, Rational b, Rational square)
      : a_(std::move(a)), b_(std::move(b)), square_(std::move(square)) {
    if (b_ == 0) square_ = 0;
  }

  /// The root itself, i.e. 0 + 1 * root.
  static Surd root_of(const Rational& square, int sign = 1) {
    return Surd(Rational(0), Rational(sign), square);
  }

  const Rational& rational_part() const { return a_; }
  const Rational& root_part() const { return b_; }
  const Rational& square() const { return square_; }
  bool is_zero() const { return a_ == 0 && b_ == 0; }

  friend Surd operator+(const Surd& x, const Surd& y) {
    return Surd(x.a_ + y.a_, x.b_ + y.b_, common_square(x, y));
  }
  friend Surd operator-(const Surd& x, const Surd& y) {
    return Surd(x.a_ - y.a_, x.b_ - y.b_, common_square(x, y));
  }
  friend Surd operator-(const Surd& x) { return Surd(-x.a_, -x.b_, x.square_); }
  friend Surd operator*(const Surd& x, const Surd& y) {
    const Rational sq = common_square(x, y);
    return Surd(x.a_ * y.a_ + x.b_ * y.b_ * sq, x.a_ * y.b_ + x.b_ * y.a_, sq);
  }
  friend bool operator==(const Surd& x, const Surd& y) {
    if (x.b_ == 0 && y.b_ == 0) return x.a_ == y.a_;
    return x.a_ == y.a_ && x.b_ == y.b_ && x.square_ == y.square_;
  }
  friend bool operator!=(const Surd& x, const Surd& y) { return !(x == y); }

  std::string str() const {
    if (b_ == 0) return a_.str();
    return "(" + a_.str() + " + " + b_.str() + "*sqrt(" + square_.str() + "))";
  }

 private:
  static Rational common_square(const Surd& x, const Surd& y) {
    if (x.b_ == 0) return y.square_;
    if (y.b_ == 0) return x.square_;
    if (x.square_ != y.square_)
      throw std::invalid_argument("surds over different roots cannot be combined");
    return x.square_;
  }

  Rational a_{0};
  Rational b_{0};
  Rational square_{0};
};

/// Polynomial in lambda with ascending-degree coefficients.
template <class Coeff>
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<Coeff> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Poly constant(Coeff c) { return Poly({std::move(c)}); }
  /// c * lambda^k
  static Poly monomial(Coeff c, std::size_t k) {
    std::vector<Coeff> v(k + 1, Coeff(0));
    v[k] = std::move(c);
    return Poly(std::move(v));
  }

  const std::vector<Coeff>& coeffs() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  /// -1 for the zero polynomial.
  long degree() const { return static_cast<long>(c_.size()) - 1; }
  Coeff coeff(std::size_t k) const { return k < c_.size() ? c_[k] : Coeff(0); }

  friend Poly operator+(const Poly& x, const Poly& y) {
    std::vector<Coeff> v(std::max(x.c_.size(), y.c_.size()), Coeff(0));
    for (std::size_t i = 0; i < x.c_.size(); ++i) v[i] = v[i] + x.c_[i];
    for (std::size_t i = 0; i < y.c_.size(); ++i) v[i] = v[i] + y.c_[i];
    return Poly(std::move(v));
  }
  friend Poly operator-(const Poly& x) {
    std::vector<Coeff> v;
    v.reserve(x.c_.size());
    for (const auto& c : x.c_) v.push_back(-c);
    return Poly(std::move(v));
  }
  friend Poly operator-(const Poly& x, const Poly& y) { return x + (-y); }
  friend Poly operator*(const Poly& x, const Poly& y) {
    if (x.is_zero() || y.is_zero()) return Poly();
    std::vector<Coeff> v(x.c_.size() + y.c_.size() - 1, Coeff(0));
    for (std::size_t i = 0; i < x.c_.size(); ++i)
      for (std::size_t j = 0; j < y.c_.size(); ++j) v[i + j] = v[i + j] + x.c_[i] * y.c_[j];
    return Poly(std::move(v));
  }
  friend Poly operator*(const Coeff& s, const Poly& x) { return Poly::constant(s) * x; }
  friend bool operator==(const Poly& x, const Poly& y) { return x.c_ == y.c_; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == Coeff(0)) c_.pop_back();
  }
  std::vector<Coeff> c_;
};

inline Integer binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  Integer r = 1;
  for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// d_0 = 1, d_1 = -lambda, d_{j+1} = -lambda d_j + gamma_j^2 d_{j-1}: the
/// characteristic polynomial of the leading j x j block of F + xi E_nn.
/// gammas_sq[i] holds gamma_{i+1}^2.
template <class Coeff = Rational>
Poly<Coeff> d_poly(std::size_t j, const std::vector<Coeff>& gammas_sq) {
  if (j > gammas_sq.size() + 1) throw std::out_of_range("d_poly index exceeds matrix order");
  const Poly<Coeff> minus_lambda({Coeff(0), Coeff(-1)});
  Poly<Coeff> prev = Poly<Coeff>::constant(Coeff(1));
  if (j == 0) return prev;
  Poly<Coeff> cur = minus_lambda;
  for (std::size_t m = 1; m < j; ++m) {
    Poly<Coeff> next = minus_lambda * cur + gammas_sq[m - 1] * prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

/// Characteristic polynomial of F: q = d_n - xi d_{n-1}.
template <class Coeff>
Poly<Coeff> q_poly(std::size_t n, const std::vector<Coeff>& gammas_sq, const Coeff& xi) {
  if (n < 1) throw std::invalid_argument("q_poly requires n >= 1");
  if (gammas_sq.size() != n - 1) throw std::invalid_argument("q_poly needs n-1 gamma^2 values");
  return d_poly(n, gammas_sq) - xi * d_poly(n - 1, gammas_sq);
}

/// Table of s_{j,k}. Only interior entries (j > 2k-2, k >= 1) are stored;
/// the boundary values (1 for k = 0, 0 when j <= 2k-2) come from at().
class STable {
 public:
  STable() = default;
  explicit STable(std::size_t n) : n_(n) {}

  std::size_t n() const { return n_; }

  static bool is_interior(long j, long k) { return k >= 1 && j > 2 * k - 2; }

  Rational at(long j, long k) const {
    if (k == 0) return 1;
    if (k < 0 || !is_interior(j, k)) return 0;
    auto it = values_.find({j, k});
    if (it == values_.end())
      throw std::out_of_range("s(" + std::to_string(j) + "," + std::to_string(k) +
                              ") is outside the table");
    return it->second;
  }

  void set(long j, long k, Rational v) {
    if (!is_interior(j, k)) throw std::invalid_argument("only interior s entries are stored");
    values_[{j, k}] = std::move(v);
  }

  const std::map<std::pair<long, long>, Rational>& interior() const { return values_; }

 private:
  std::size_t n_ = 0;
  std::map<std::pair<long, long>, Rational> values_;
};

/// s_{j,k} = gamma_j^2 s_{j-2,k-1} + s_{j-1,k} for j <= n-1, k <= n/2.
inline STable s_recurrence(std::size_t n, const std::vector<Rational>& gammas_sq) {
  if (n < 1) throw std::invalid_argument("s_recurrence requires n >= 1");
  if (gammas_sq.size() + 1 < n) throw std::invalid_argument("s_recurrence needs n-1 gamma^2 values");
  STable table(n);
  const long jmax = static_cast<long>(n) - 1;
  const long kmax = static_cast<long>(n) / 2;
  for (long j = 1; j <= jmax; ++j)
    for (long k = 1; k <= kmax; ++k) {
      if (!STable::is_interior(j, k)) continue;
      table.set(j, k, gammas_sq[static_cast<std::size_t>(j - 1)] * table.at(j - 2, k - 1) +
                          table.at(j - 1, k));
    }
  return table;
}

/// Closed form for s_{n-i,k}:
///   C(i+k-1, k) / C(2(i+k-1), 2k) * C(n-i+1, 2k) * lambda*^{2k}.
inline Rational s_closed(std::size_t n, std::size_t i, std::size_t k,
                         const Rational& lambda_star_sq) {
  const long ln = static_cast<long>(n), li = static_cast<long>(i), lk = static_cast<long>(k);
  if (li < 1 || li > ln - 1) throw std::invalid_argument("s_closed index i must be in 1..n-1");
  if (!(ln - li > 2 * lk - 2)) throw std::invalid_argument("s_closed requires n - i > 2k - 2");
  Rational power = 1;
  for (long m = 0; m < lk; ++m) power *= lambda_star_sq;
  const Rational ratio(binomial(li + lk - 1, lk), binomial(2 * (li + lk - 1), 2 * lk));
  return ratio * Rational(binomial(ln - li + 1, 2 * lk)) * power;
}

/// Table populated from the closed form instead of the recurrence.
inline STable s_table_closed(std::size_t n, const Rational& lambda_star_sq) {
  STable table(n);
  const long ln = static_cast<long>(n);
  for (long i = 1; i <= ln - 1; ++i)
    for (long k = 1; k <= ln / 2; ++k)
      if (STable::is_interior(ln - i, k))
        table.set(ln - i, k,
                  s_closed(n, static_cast<std::size_t>(i), static_cast<std::size_t>(k),
                           lambda_star_sq));
  return table;
}

/// gamma_{n-i}^2 = (s_{n-i,k} - s_{n-i-1,k}) / s_{n-i-2,k-1}
inline Rational gamma_from_s(std::size_t n, std::size_t i, std::size_t k, const STable& table) {
  const long ln = static_cast<long>(n), li = static_cast<long>(i), lk = static_cast<long>(k);
  if (li < 1 || li > ln - 1) throw std::invalid_argument("gamma_from_s index i must be in 1..n-1");
  if (lk < 1) throw std::invalid_argument("gamma_from_s requires k >= 1");
  const Rational den = table.at(ln - li - 2, lk - 1);
  if (den == 0) throw std::domain_error("gamma_from_s denominator is zero");
  return (table.at(ln - li, lk) - table.at(ln - li - 1, lk)) / den;
}

/// Critical gamma_{n-i}^2 = (n^2 - i^2) / (4 i^2 - 1) * lambda*^2, indexed so
/// result[j-1] = gamma_j^2, with lambda*^2 = 2n - 3.
inline std::vector<Rational> critical_gammas_sq(std::size_t n) {
  if (n < 2) throw std::invalid_argument("critical gammas need n >= 2");
  const Rational lam_sq(static_cast<long>(2 * n - 3));
  std::vector<Rational> g(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    const long li = static_cast<long>(i), ln = static_cast<long>(n);
    g[n - i - 1] = Rational(ln * ln - li * li, 4 * li * li - 1) * lam_sq;
  }
  return g;
}

/// lambda* = -sqrt(2n-3) as an element of Q(sqrt(2n-3)).
inline Surd critical_lambda(std::size_t n) {
  return Surd::root_of(Rational(static_cast<long>(2 * n - 3)), -1);
}

/// Coefficients of (lambda - lambda*)^n, i.e. C(n,k) (-lambda*)^{n-k}.
inline Poly<Surd> binomial_expansion(std::size_t n, const Surd& root) {
  Poly<Surd> p = Poly<Surd>::constant(Surd(1));
  const Poly<Surd> factor({-root, Surd(1)});
  for (std::size_t m = 0; m < n; ++m) p = p * factor;
  return p;
}

}  // namespace holdpp::spectral
