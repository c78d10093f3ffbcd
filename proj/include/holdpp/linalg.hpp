#pragma once

// Small dense real linear algebra. Everything here is templated on the scalar
// so the same routines run in double and in extended precision
// (boost::multiprecision) when a check needs more digits than double has.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace holdpp {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class Real>
class BasicMatrix {
 public:
  using value_type = Real;

  BasicMatrix() = default;

  BasicMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, Real(0)) {}

  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<Real> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix entry count does not match shape");
    }
    check_finite();
  }

  BasicMatrix(std::initializer_list<std::initializer_list<Real>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static BasicMatrix zeros(std::size_t rows, std::size_t cols) {
    return BasicMatrix(rows, cols);
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
    return m;
  }

  static BasicMatrix diagonal(const std::vector<Real>& d) {
    BasicMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Real& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  const std::vector<Real>& entries() const { return data_; }

  BasicMatrix transpose() const {
    BasicMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  BasicMatrix& operator+=(const BasicMatrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  BasicMatrix& operator-=(const BasicMatrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }

  BasicMatrix& operator*=(const Real& s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend BasicMatrix operator+(BasicMatrix a, const BasicMatrix& b) { return a += b; }
  friend BasicMatrix operator-(BasicMatrix a, const BasicMatrix& b) { return a -= b; }
  friend BasicMatrix operator*(BasicMatrix a, const Real& s) { return a *= s; }
  friend BasicMatrix operator*(const Real& s, BasicMatrix a) { return a *= s; }

  friend BasicMatrix operator*(const BasicMatrix& a, const BasicMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("matrix product shape mismatch");
    BasicMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const Real aik = a(i, k);
        if (aik == Real(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void require_same_shape(const BasicMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionError("matrix shape mismatch");
  }

  void check_finite() const {
    using std::isfinite;
    for (const auto& v : data_)
      if (!isfinite(v)) throw std::invalid_argument("matrix entry is not finite");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

using Matrix = BasicMatrix<double>;

template <class Real>
Real frobenius_norm(const BasicMatrix<Real>& a) {
  using std::sqrt;
  Real s(0);
  for (const auto& v : a.entries()) s += v * v;
  return sqrt(s);
}

template <class Real>
Real max_abs(const BasicMatrix<Real>& a) {
  using std::abs;
  Real m(0);
  for (const auto& v : a.entries()) m = std::max<Real>(m, abs(v));
  return m;
}

/// Maximum absolute column sum.
template <class Real>
Real norm1(const BasicMatrix<Real>& a) {
  using std::abs;
  Real best(0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    Real s(0);
    for (std::size_t i = 0; i < a.rows(); ++i) s += abs(a(i, j));
    best = std::max<Real>(best, s);
  }
  return best;
}

template <class Real>
Real trace(const BasicMatrix<Real>& a) {
  if (!a.square()) throw DimensionError("trace of non-square matrix");
  Real s(0);
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

template <class Real>
BasicMatrix<Real> matrix_power(const BasicMatrix<Real>& a, unsigned k) {
  if (!a.square()) throw DimensionError("power of non-square matrix");
  auto r = BasicMatrix<Real>::identity(a.rows());
  for (unsigned i = 0; i < k; ++i) r = r * a;
  return r;
}

// Pivots inside [-kPivotClamp, kPivotClamp] are treated as exact zeros so the
// rank-deficient initial covariance (zero position variance) factors cleanly.
inline constexpr double kPivotClamp = 1e-10;

/// Lower-triangular L with L * L^T = s. Near-zero pivots are clamped to zero
/// and the rest of that column is zeroed; a pivot below -1e-10 is NotPsdError.
template <class Real>
BasicMatrix<Real> cholesky(const BasicMatrix<Real>& s) {
  using std::abs;
  using std::sqrt;
  if (!s.square()) throw DimensionError("cholesky of non-square matrix");
  const std::size_t n = s.rows();
  const Real scale = std::max<Real>(max_abs(s), Real(1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (abs(s(i, j) - s(j, i)) > Real(1e-12) * scale)
        throw std::invalid_argument("cholesky input is not symmetric");

  BasicMatrix<Real> l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Real pivot = s(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < Real(-kPivotClamp)) {
      std::ostringstream msg;
      msg << "matrix is not positive semidefinite (pivot " << j << " = " << pivot << ")";
      throw NotPsdError(msg.str());
    }
    if (pivot <= Real(kPivotClamp)) continue;  // column stays zero
    const Real d = sqrt(pivot);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      Real v = s(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / d;
    }
  }
  return l;
}

/// Lower-triangular L with L * L^T = a * a^T and L(i,i) >= 0, from a
/// Householder QR of a^T. Never forms a * a^T, so rows of very different
/// scale keep their own relative accuracy.
template <class Real>
BasicMatrix<Real> triangular_factor(const BasicMatrix<Real>& a) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = a.rows(), m = a.cols();
  BasicMatrix<Real> r(std::max(m, n), n);  // r = a^T, zero-padded
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < m; ++k) r(k, i) = a(i, k);
  const std::size_t rows = r.rows();
  std::vector<Real> v(rows);
  for (std::size_t j = 0; j < n; ++j) {
    Real norm(0);
    for (std::size_t k = j; k < rows; ++k) norm += r(k, j) * r(k, j);
    norm = sqrt(norm);
    if (norm == Real(0)) continue;
    const Real alpha = r(j, j) > Real(0) ? -norm : norm;
    for (std::size_t k = j; k < rows; ++k) v[k] = r(k, j);
    v[j] -= alpha;
    Real vv(0);
    for (std::size_t k = j; k < rows; ++k) vv += v[k] * v[k];
    if (vv == Real(0)) continue;
    for (std::size_t c = j; c < n; ++c) {
      Real dot(0);
      for (std::size_t k = j; k < rows; ++k) dot += v[k] * r(k, c);
      const Real f = Real(2) * dot / vv;
      for (std::size_t k = j; k < rows; ++k) r(k, c) -= f * v[k];
    }
  }
  BasicMatrix<Real> l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Real sign = r(i, i) < Real(0) ? Real(-1) : Real(1);
    for (std::size_t c = i; c < n; ++c) l(c, i) = sign * r(i, c);
  }
  return l;
}

/// e^{A t} by scaling and squaring a truncated Taylor series. Independent of
/// any structure in A; this is the reference the closed forms are checked
/// against.
template <class Real>
BasicMatrix<Real> expm_oracle(const BasicMatrix<Real>& a, const Real& t) {
  using std::isfinite;
  if (!a.square()) throw DimensionError("expm of non-square matrix");
  if (!isfinite(t)) throw std::invalid_argument("expm time is not finite");
  const std::size_t n = a.rows();
  BasicMatrix<Real> at = a * t;

  unsigned squarings = 0;
  Real norm = norm1(at);
  while (norm > Real(0.5)) {
    norm /= Real(2);
    ++squarings;
  }
  Real factor(1);
  for (unsigned i = 0; i < squarings; ++i) factor /= Real(2);
  at *= factor;

  const Real tol = std::max<Real>(Real(1e-18), std::numeric_limits<Real>::epsilon() / Real(64));
  auto sum = BasicMatrix<Real>::identity(n);
  auto term = BasicMatrix<Real>::identity(n);
  for (unsigned k = 1; k < 200; ++k) {
    term = term * at;
    term *= Real(1) / Real(k);
    sum += term;
    if (max_abs(term) < tol) break;
  }
  for (unsigned i = 0; i < squarings; ++i) sum = sum * sum;

  for (const auto& v : sum.entries())
    if (!isfinite(v)) throw OverflowError("matrix exponential overflowed");
  return sum;
}

/// ||F S + S F^T + Q||_F
template <class Real>
Real lyapunov_residual(const BasicMatrix<Real>& f, const BasicMatrix<Real>& s,
                       const BasicMatrix<Real>& q) {
  if (!f.square() || f.rows() != s.rows() || !s.square() || q.rows() != f.rows() ||
      !q.square())
    throw DimensionError("lyapunov_residual expects matching square matrices");
  return frobenius_norm(f * s + s * f.transpose() + q);
}

template <class Real>
struct Eigenvalue {
  Real re;
  Real im;
};

namespace detail {

template <class Real>
Real copy_sign(const Real& magnitude, const Real& sign_of) {
  using std::abs;
  return sign_of >= Real(0) ? abs(magnitude) : -abs(magnitude);
}

// Diagonal similarity scaling by powers of the radix (Parlett-Reinsch).
template <class Real>
void balance(BasicMatrix<Real>& a) {
  using std::abs;
  const Real radix(2);
  const Real sqrdx = radix * radix;
  const std::size_t n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      Real r(0), c(0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) {
          c += abs(a(j, i));
          r += abs(a(i, j));
        }
      if (c == Real(0) || r == Real(0)) continue;
      Real g = r / radix;
      Real f(1);
      const Real s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < Real(0.95) * s) {
        done = false;
        const Real ginv = Real(1) / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= ginv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Upper Hessenberg form by stabilized elementary similarity transforms.
template <class Real>
void to_hessenberg(BasicMatrix<Real>& a) {
  using std::abs;
  using std::swap;
  const std::size_t n = a.rows();
  for (std::size_t m = 1; m + 1 < n; ++m) {
    Real x(0);
    std::size_t piv = m;
    for (std::size_t j = m; j < n; ++j)
      if (abs(a(j, m - 1)) > abs(x)) {
        x = a(j, m - 1);
        piv = j;
      }
    if (piv != m) {
      for (std::size_t j = m - 1; j < n; ++j) swap(a(piv, j), a(m, j));
      for (std::size_t j = 0; j < n; ++j) swap(a(j, piv), a(j, m));
    }
    if (x == Real(0)) continue;
    for (std::size_t i = m + 1; i < n; ++i) {
      Real y = a(i, m - 1);
      if (y == Real(0)) continue;
      y /= x;
      a(i, m - 1) = y;
      for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
      for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
    }
  }
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = Real(0);
}

// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
template <class Real>
std::vector<Eigenvalue<Real>> hessenberg_qr(BasicMatrix<Real>& a, int max_iterations) {
  using std::abs;
  using std::sqrt;
  const int n = static_cast<int>(a.rows());
  const Real eps = std::numeric_limits<Real>::epsilon();
  std::vector<Eigenvalue<Real>> out(static_cast<std::size_t>(n), {Real(0), Real(0)});
  auto A = [&a](int i, int j) -> Real& {
    return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  auto set = [&out](int i, const Real& re, const Real& im) {
    out[static_cast<std::size_t>(i)] = {re, im};
  };

  Real anorm(0);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += abs(A(i, j));

  int nn = n - 1;
  Real t(0);
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l > 0; --l) {
        Real s = abs(A(l - 1, l - 1)) + abs(A(l, l));
        if (s == Real(0)) s = anorm;
        if (abs(A(l, l - 1)) <= eps * s) {
          A(l, l - 1) = Real(0);
          break;
        }
      }
      Real x = A(nn, nn);
      if (l == nn) {
        set(nn, x + t, Real(0));
        --nn;
      } else {
        Real y = A(nn - 1, nn - 1);
        Real w = A(nn, nn - 1) * A(nn - 1, nn);
        if (l == nn - 1) {
          Real p = Real(0.5) * (y - x);
          Real q = p * p + w;
          Real z = sqrt(abs(q));
          x += t;
          if (q >= Real(0)) {
            z = p + copy_sign(z, p);
            set(nn - 1, x + z, Real(0));
            set(nn, z != Real(0) ? x - w / z : x + z, Real(0));
          } else {
            set(nn, x + p, -z);
            set(nn - 1, x + p, z);
          }
          nn -= 2;
        } else {
          if (its >= max_iterations) {
            Real residual = abs(A(nn, nn - 1));
            std::ostringstream msg;
            msg << "eigenvalue iteration did not converge (subdiagonal residual "
                << residual << ")";
            throw ConvergenceError(msg.str());
          }
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) A(i, i) -= x;
            Real s = abs(A(nn, nn - 1)) + abs(A(nn - 1, nn - 2));
            y = x = Real(0.75) * s;
            w = Real(-0.4375) * s * s;
          }
          ++its;
          int m = nn - 2;
          Real p(0), q(0), r(0), z(0);
          for (; m >= l; --m) {
            z = A(m, m);
            r = x - z;
            Real s = y - z;
            p = (r * s - w) / A(m + 1, m) + A(m, m + 1);
            q = A(m + 1, m + 1) - z - r - s;
            r = A(m + 2, m + 1);
            s = abs(p) + abs(q) + abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            Real u = abs(A(m, m - 1)) * (abs(q) + abs(r));
            Real v = abs(p) * (abs(A(m - 1, m - 1)) + abs(z) + abs(A(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            A(i + 2, i) = Real(0);
            if (i != m) A(i + 2, i - 1) = Real(0);
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = A(k, k - 1);
              q = A(k + 1, k - 1);
              r = Real(0);
              if (k + 1 != nn) r = A(k + 2, k - 1);
              x = abs(p) + abs(q) + abs(r);
              if (x != Real(0)) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            Real s = copy_sign(sqrt(p * p + q * q + r * r), p);
            if (s == Real(0)) continue;
            if (k == m) {
              if (l != m) A(k, k - 1) = -A(k, k - 1);
            } else {
              A(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = A(k, j) + q * A(k + 1, j);
              if (k + 1 != nn) {
                p += r * A(k + 2, j);
                A(k + 2, j) -= p * z;
              }
              A(k + 1, j) -= p * y;
              A(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = x * A(i, k) + y * A(i, k + 1);
              if (k + 1 != nn) {
                p += z * A(i, k + 2);
                A(i, k + 2) -= p * r;
              }
              A(i, k + 1) -= p * q;
              A(i, k) -= p;
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return out;
}

}  // namespace detail

/// All eigenvalues with multiplicity (balance, Hessenberg, shifted QR).
/// Repeated eigenvalues of a defective matrix are only accurate to about
/// eps^(1/m) for multiplicity m; use an extended-precision Real when that
/// matters.
template <class Real>
std::vector<Eigenvalue<Real>> eigenvalues(const BasicMatrix<Real>& a,
                                          int max_iterations_per_eigenvalue = 300) {
  if (!a.square()) throw DimensionError("eigenvalues of non-square matrix");
  if (a.rows() == 0) return {};
  BasicMatrix<Real> h = a;
  detail::balance(h);
  detail::to_hessenberg(h);
  return detail::hessenberg_qr(h, max_iterations_per_eigenvalue);
}

}  // namespace holdpp
