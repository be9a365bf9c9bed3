#pragma once

// Dense complex linear algebra used by every other header: log-domain
// determinants, Pfaffians, principal submatrices and circulant symbols.
// Indices are 0-based here; user-facing text (CLI, README) is 1-based.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sppm/error.hpp"

namespace sppm {

using cplx = std::complex<double>;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A scalar stored as log|z| and arg z. Zero is log_mag = -inf, phase = 0.
class LogSigned {
 public:
  LogSigned() = default;
  LogSigned(double log_mag, double phase) : log_mag_(log_mag), phase_(wrap(phase)) {
    if (std::isnan(log_mag) || std::isnan(phase) || log_mag == kInf)
      throw numeric_error("LogSigned: non-finite value");
    if (log_mag_ == -kInf) phase_ = 0.0;
  }

  static LogSigned zero() { return {}; }
  static LogSigned one() { return {0.0, 0.0}; }
  static LogSigned from_value(cplx z) {
    if (z == cplx{}) return zero();
    if (z.imag() == 0.0) return from_value(z.real());
    return {std::log(std::abs(z)), std::arg(z)};
  }
  static LogSigned from_value(double x) {
    if (x == 0.0) return zero();
    return {std::log(std::abs(x)), x < 0 ? std::numbers::pi : 0.0};
  }

  double log_mag() const noexcept { return log_mag_; }
  double phase() const noexcept { return phase_; }
  bool is_zero() const noexcept { return log_mag_ == -kInf; }
  /// True when the phase is exactly 0 or pi.
  bool is_real() const noexcept { return phase_ == 0.0 || phase_ == std::numbers::pi; }
  int sign() const noexcept { return is_zero() ? 0 : (phase_ == std::numbers::pi ? -1 : 1); }

  cplx value() const {
    if (is_zero()) return {};
    if (is_real()) return {sign() * std::exp(log_mag_), 0.0};
    return std::polar(std::exp(log_mag_), phase_);
  }

  LogSigned operator-() const {
    if (is_zero()) return *this;
    return {log_mag_, phase_ + std::numbers::pi};
  }
  friend LogSigned operator*(const LogSigned& a, const LogSigned& b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return {a.log_mag_ + b.log_mag_, a.phase_ + b.phase_};
  }
  friend LogSigned operator/(const LogSigned& a, const LogSigned& b) {
    if (b.is_zero()) throw numeric_error("LogSigned: division by zero");
    if (a.is_zero()) return zero();
    return {a.log_mag_ - b.log_mag_, a.phase_ - b.phase_};
  }
  LogSigned& operator*=(const LogSigned& b) { return *this = *this * b; }
  LogSigned& operator+=(const LogSigned& b) { return *this = *this + b; }

  friend LogSigned operator+(const LogSigned& a, const LogSigned& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double m = std::max(a.log_mag_, b.log_mag_);
    const double ra = std::exp(a.log_mag_ - m);
    const double rb = std::exp(b.log_mag_ - m);
    if (a.is_real() && b.is_real()) {
      const double s = a.sign() * ra + b.sign() * rb;
      if (s == 0.0) return zero();
      return {m + std::log(std::abs(s)), s < 0 ? std::numbers::pi : 0.0};
    }
    const cplx s = std::polar(ra, a.phase_) + std::polar(rb, b.phase_);
    if (s == cplx{}) return zero();
    return {m + std::log(std::abs(s)), std::arg(s)};
  }
  friend LogSigned operator-(const LogSigned& a, const LogSigned& b) { return a + (-b); }

  LogSigned pow(int n) const {
    if (n == 0) return one();
    if (is_zero()) {
      if (n < 0) throw numeric_error("LogSigned: negative power of zero");
      return zero();
    }
    return {n * log_mag_, n * phase_};
  }

  friend bool operator==(const LogSigned&, const LogSigned&) = default;

 private:
  // Wraps into (-pi, pi]; exact multiples of pi stay exact.
  static double wrap(double p) {
    if (p == 0.0 || p == std::numbers::pi) return p;
    double r = std::remainder(p, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    if (std::abs(std::abs(r) - std::numbers::pi) < 1e-15) r = std::numbers::pi;
    if (std::abs(r) < 1e-300) r = 0.0;
    return r;
  }

  double log_mag_ = -kInf;
  double phase_ = 0.0;
};

/// Relative distance |a - b| / max(|a|, |b|), computed without leaving log space.
inline double relative_difference(const LogSigned& a, const LogSigned& b) {
  if (a.is_zero() && b.is_zero()) return 0.0;
  if (a.is_zero() || b.is_zero()) return 1.0;
  const double m = std::max(a.log_mag(), b.log_mag());
  const cplx za = std::polar(std::exp(a.log_mag() - m), a.phase());
  const cplx zb = std::polar(std::exp(b.log_mag() - m), b.phase());
  return std::abs(za - zb) / std::max(std::abs(za), std::abs(zb));
}

/// Subset of {0..dim-1} stored as a bitmask.
class IndexSubset {
 public:
  IndexSubset(std::uint64_t mask, Index dim) : mask_(mask), dim_(dim) {
    if (dim < 0 || dim > 63) throw input_error("IndexSubset: dim must be in [0, 63]");
    if (dim < 63 && (mask >> dim) != 0)
      throw input_error("IndexSubset: bit " + std::to_string(std::bit_width(mask) - 1) +
                        " outside dim " + std::to_string(dim));
  }
  static IndexSubset full(Index dim) {
    return {dim == 0 ? 0 : (~std::uint64_t{0} >> (64 - dim)), dim};
  }
  static IndexSubset empty(Index dim) { return {0, dim}; }
  static IndexSubset of(std::initializer_list<Index> idx, Index dim) {
    std::uint64_t m = 0;
    for (Index i : idx) {
      if (i < 0 || i >= dim) throw input_error("IndexSubset: index out of range");
      m |= std::uint64_t{1} << i;
    }
    return {m, dim};
  }

  std::uint64_t mask() const noexcept { return mask_; }
  Index dim() const noexcept { return dim_; }
  int card() const noexcept { return std::popcount(mask_); }
  bool contains(Index i) const noexcept { return i >= 0 && i < dim_ && ((mask_ >> i) & 1U); }
  std::vector<Index> indices() const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(card()));
    for (Index i = 0; i < dim_; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }
  friend bool operator==(const IndexSubset&, const IndexSubset&) = default;

 private:
  std::uint64_t mask_;
  Index dim_;
};

/// Dense complex square matrix with finite entries.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      throw input_error("SquareMatrix: " + std::to_string(m_.rows()) + "x" +
                        std::to_string(m_.cols()) + " is not square");
    if (!m_.allFinite()) throw input_error("SquareMatrix: non-finite entry");
  }
  explicit SquareMatrix(const Eigen::MatrixXd& m) : SquareMatrix(Eigen::MatrixXcd(m.cast<cplx>())) {}

  static SquareMatrix identity(Index l) { return SquareMatrix(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(l, l))); }
  static SquareMatrix zero(Index l) { return SquareMatrix(Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(l, l))); }

  Index dim() const noexcept { return m_.rows(); }
  const Eigen::MatrixXcd& data() const noexcept { return m_; }
  cplx operator()(Index i, Index j) const { return m_(i, j); }

  bool is_real() const { return (m_.imag().array() == 0.0).all(); }
  Eigen::MatrixXd real() const { return m_.real(); }

  SquareMatrix transpose() const { return SquareMatrix(Eigen::MatrixXcd(m_.transpose())); }
  SquareMatrix symmetric_part() const { return SquareMatrix(Eigen::MatrixXcd((m_ + m_.transpose()) / 2.0)); }
  SquareMatrix antisymmetric_part() const {
    return SquareMatrix(Eigen::MatrixXcd((m_ - m_.transpose()) / 2.0));
  }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    if (a.dim() != b.dim()) throw input_error("SquareMatrix: dimension mismatch in product");
    return SquareMatrix(Eigen::MatrixXcd(a.m_ * b.m_));
  }
  friend SquareMatrix operator*(cplx s, const SquareMatrix& a) { return SquareMatrix(Eigen::MatrixXcd(s * a.m_)); }
  friend SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b) {
    if (a.dim() != b.dim()) throw input_error("SquareMatrix: dimension mismatch in sum");
    return SquareMatrix(Eigen::MatrixXcd(a.m_ + b.m_));
  }
  SquareMatrix operator-() const { return SquareMatrix(Eigen::MatrixXcd(-m_)); }
  SquareMatrix shifted(cplx s) const {
    Eigen::MatrixXcd m = m_;
    m.diagonal().array() += s;
    return SquareMatrix(std::move(m));
  }

 private:
  Eigen::MatrixXcd m_;
};

namespace detail {

/// log-determinant of an already factorized matrix (real or complex pivots).
template <class LU>
LogSigned log_det_from_lu(const LU& lu) {
  const auto& f = lu.matrixLU();
  LogSigned acc = LogSigned::one();
  for (Index i = 0; i < f.rows(); ++i) {
    const auto p = f(i, i);
    if (p == decltype(p){}) return LogSigned::zero();
    acc *= LogSigned::from_value(p);
  }
  if (lu.permutationP().determinant() < 0) acc = -acc;
  return acc;
}

template <class Derived>
LogSigned log_det(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return LogSigned::one();
  Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(m);
  return log_det_from_lu(lu);
}

template <class Matrix>
Matrix checked_inverse(const Matrix& m, const char* who) {
  Eigen::PartialPivLU<Matrix> lu(m);
  for (Index i = 0; i < m.rows(); ++i)
    if (lu.matrixLU()(i, i) == typename Matrix::Scalar{})
      throw numeric_error(std::string(who) + ": matrix is singular");
  Matrix inv = lu.inverse();
  if (!inv.allFinite()) throw numeric_error(std::string(who) + ": inverse is not finite");
  return inv;
}

}  // namespace detail

/// det(M) via partial-pivot LU with log-domain pivot accumulation.
inline LogSigned det_lu(const SquareMatrix& m) { return detail::log_det(m.data()); }

inline SquareMatrix inverse(const SquareMatrix& m) {
  return SquareMatrix(detail::checked_inverse(m.data(), "inverse"));
}

/// Keeps rows and columns in I, in ascending order. Empty I gives the 0x0 matrix.
inline SquareMatrix principal_submatrix(const SquareMatrix& m, const IndexSubset& subset) {
  if (subset.dim() != m.dim())
    throw input_error("principal_submatrix: subset dim " + std::to_string(subset.dim()) +
                      " does not match matrix dim " + std::to_string(m.dim()));
  const auto idx = subset.indices();
  return SquareMatrix(Eigen::MatrixXcd(m.data()(idx, idx)));
}

namespace detail {

// Parlett-Reid skew tridiagonalization with partial pivoting.
template <class Scalar>
LogSigned pfaffian_ltl(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a) {
  const Index n = a.rows();
  if (n == 0) return LogSigned::one();
  if (n % 2 == 1) return LogSigned::zero();
  LogSigned pf = LogSigned::one();
  for (Index k = 0; k + 1 < n; k += 2) {
    Index kp = 0;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == Scalar{}) return LogSigned::zero();
    pf *= LogSigned::from_value(a(k, k + 1));
    if (k + 2 < n) {
      const Index r = n - k - 2;
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tau = a.row(k).tail(r).transpose() / a(k, k + 1);
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> col = a.col(k + 1).tail(r);
      a.bottomRightCorner(r, r) += tau * col.transpose() - col * tau.transpose();
    }
  }
  return pf;
}

}  // namespace detail

/// Pfaffian of an antisymmetric matrix; odd dimension gives zero.
inline LogSigned pfaffian(const SquareMatrix& m) {
  const auto& a = m.data();
  if (a.rows() == 0) return LogSigned::one();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a + a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw input_error("pfaffian: matrix is not antisymmetric (|M + M^T| = " + std::to_string(asym) + ")");
  if (m.is_real()) return detail::pfaffian_ltl<double>(m.real());
  return detail::pfaffian_ltl<cplx>(a);
}

/// Values A(q_k) = sum_n A_{mn} e^{i q_k (n - m)} at q_k = 2 pi (k + k0) / l, k = 0..l-1.
struct CirculantSymbol {
  Index size = 0;
  double k0 = 0.0;
  std::vector<cplx> values;

  double momentum(Index k) const { return 2.0 * std::numbers::pi * (static_cast<double>(k) + k0) / static_cast<double>(size); }
  /// Index j with q_j = -q_k (mod 2 pi).
  Index negative(Index k) const {
    const Index shift = k0 == 0.0 ? 0 : 1;
    return ((-k - shift) % size + size) % size;
  }
  cplx symmetric(Index k) const { return (values[k] + values[negative(k)]) / 2.0; }
  cplx antisymmetric(Index k) const { return (values[k] - values[negative(k)]) / 2.0; }
};

inline void check_k0(double k0) {
  if (k0 != 0.0 && k0 != 0.5) throw input_error("circulant: k0 must be 0 or 1/2");
}

inline CirculantSymbol circulant_symbol(std::span<const cplx> first_row, double k0) {
  check_k0(k0);
  if (first_row.empty()) throw input_error("circulant_symbol: empty first row");
  CirculantSymbol s{static_cast<Index>(first_row.size()), k0, {}};
  s.values.resize(first_row.size());
  for (Index k = 0; k < s.size; ++k) {
    const double q = s.momentum(k);
    cplx acc{};
    for (Index n = 0; n < s.size; ++n) acc += first_row[n] * std::polar(1.0, q * static_cast<double>(n));
    s.values[k] = acc;
  }
  return s;
}

/// Builds a symbol directly from a function of momentum.
template <class Fn>
CirculantSymbol symbol_from(Index size, double k0, Fn&& fn) {
  check_k0(k0);
  if (size < 1) throw input_error("symbol_from: size must be positive");
  CirculantSymbol s{size, k0, std::vector<cplx>(static_cast<std::size_t>(size))};
  for (Index k = 0; k < size; ++k) s.values[k] = fn(s.momentum(k));
  return s;
}

inline SquareMatrix circulant_dense(const CirculantSymbol& s) {
  if (s.size < 1 || static_cast<Index>(s.values.size()) != s.size)
    throw input_error("circulant_dense: symbol size mismatch");
  const Index l = s.size;
  // A_{mn} depends only on d = n - m in [-(l-1), l-1].
  std::vector<cplx> c(static_cast<std::size_t>(2 * l - 1));
  for (Index d = -(l - 1); d < l; ++d) {
    cplx acc{};
    for (Index k = 0; k < l; ++k) acc += s.values[k] * std::polar(1.0, -s.momentum(k) * static_cast<double>(d));
    c[static_cast<std::size_t>(d + l - 1)] = acc / static_cast<double>(l);
  }
  Eigen::MatrixXcd m(l, l);
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < l; ++j) m(i, j) = c[static_cast<std::size_t>(j - i + l - 1)];
  return SquareMatrix(std::move(m));
}

/// Drops imaginary parts below tol * max|entry|; throws if any larger one remains.
inline Eigen::MatrixXd require_real(const SquareMatrix& m, const char* who, double tol = 1e-12) {
  const double scale = std::max(1.0, m.dim() == 0 ? 0.0 : m.data().cwiseAbs().maxCoeff());
  if (m.dim() > 0 && m.data().imag().cwiseAbs().maxCoeff() > tol * scale)
    throw input_error(std::string(who) + ": matrix must be real");
  return m.real();
}

}  // namespace sppm
