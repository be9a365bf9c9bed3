#pragma once

// Hubbard partition function at finite Trotter number N as an SPPM problem.
// For one spin species the time-ordered matrix is NL x NL with blocks
//   (0,0) = -B, (k,k) = B, (k,k+1) = -I, (N-1,0) = -I,
//   B = (1 + mu eps) I + t eps (ring hopping),  eps = beta / N,
// and with m^2 = -1 +- 1/sqrt(-U eps), D = m / (m^2 + 1):
//   Z_N = (1 + m^2)^{-l} det(A + D I)^2 M2(m I - (A + D I)^{-1}).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sppm/fit.hpp"

#include "sppm/duality.hpp"

namespace sppm {

inline constexpr Index kHubbardMaxDim = 14;

struct HubbardSpec {
  int L = 1;
  int N = 2;
  double t = 0.0;
  double U = 0.0;
  double mu = 0.0;
  double beta = 1.0;

  double eps() const { return beta / N; }
  void validate() const {
    if (L < 1) throw input_error("hubbard: need L >= 1");
    if (N < 2) throw input_error("hubbard: need N >= 2");
    if (!(beta > 0.0)) throw input_error("hubbard: need beta > 0");
    if (!std::isfinite(t) || !std::isfinite(U) || !std::isfinite(mu)) throw input_error("hubbard: non-finite parameter");
  }
};

inline SquareMatrix hubbard_matrix(const HubbardSpec& s) {
  s.validate();
  const Index l = s.L, n = s.N;
  Eigen::MatrixXd b = (1.0 + s.mu * s.eps()) * Eigen::MatrixXd::Identity(l, l);
  // on a 2-ring both bonds join the same pair, so the hopping there is doubled
  if (l > 1)
    for (Index j = 0; j < l; ++j) {
      const Index k = (j + 1) % l;
      b(j, k) += s.t * s.eps();
      b(k, j) += s.t * s.eps();
    }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * l, n * l);
  for (Index k = 0; k < n; ++k) {
    a.block(k * l, k * l, l, l) = k == 0 ? Eigen::MatrixXd(-b) : b;
    a.block(k * l, ((k + 1) % n) * l, l, l) = -Eigen::MatrixXd::Identity(l, l);
  }
  return SquareMatrix(a);
}

namespace detail {

struct HubbardShift {
  cplx m2, m, d;
};

inline HubbardShift hubbard_shift(const HubbardSpec& s, Branch branch) {
  if (s.U == 0.0) throw input_error("hubbard: the SPPM form needs U != 0; use the U-expansion at U = 0");
  const cplx root = std::sqrt(cplx(-s.U * s.eps(), 0.0));
  const cplx m2 = -1.0 + (branch == Branch::positive ? 1.0 : -1.0) / root;
  const cplx m = std::sqrt(m2);
  return {m2, m, m / (m2 + 1.0)};
}

}  // namespace detail

/// SPPM route on the requested branch of m^2.
inline cplx hubbard_partition_sppm(const HubbardSpec& s, Branch branch = Branch::positive) {
  const SquareMatrix a = hubbard_matrix(s);
  const Index l = a.dim();
  detail::check_capacity(l, kHubbardMaxDim, "hubbard_partition_sppm");
  const auto sh = detail::hubbard_shift(s, branch);
  const SquareMatrix shifted = a.shifted(sh.d);
  const LogSigned det = det_lu(shifted);
  if (det.is_zero()) throw numeric_error("hubbard_partition_sppm: A + D I is singular");
  const SquareMatrix n = (-inverse(shifted)).shifted(sh.m);
  const LogSigned pre = LogSigned::from_value(1.0 + sh.m2).pow(-static_cast<int>(l)) * det.pow(2);
  return (pre * sppm_exact(n, 2).value).value();
}

/// Discrete Hubbard-Stratonovich route: 2^{-l} (1 + m^2)^{-l} sum_S det((m + S)(A + D I) - I)^2.
inline cplx hubbard_partition_hs(const HubbardSpec& s, Branch branch = Branch::positive) {
  const SquareMatrix a = hubbard_matrix(s);
  const Index l = a.dim();
  detail::check_capacity(l, kHsMaxDim, "hubbard_partition_hs");
  const auto sh = detail::hubbard_shift(s, branch);
  const Eigen::MatrixXcd p = a.shifted(sh.d).data();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(l, l);
  const auto sum = detail::mask_sums<1>(l, [&] {
    return [&, diag = Eigen::VectorXcd(l)](std::uint64_t mask) mutable {
      for (Index i = 0; i < l; ++i) diag(i) = sh.m + (((mask >> i) & 1U) ? 1.0 : -1.0);
      return std::array<LogSigned, 1>{detail::log_det(Eigen::MatrixXcd(diag.asDiagonal() * p - id)).pow(2)};
    };
  })[0];
  const LogSigned norm = LogSigned(-static_cast<double>(l) * std::log(2.0), 0.0) *
                         LogSigned::from_value(1.0 + sh.m2).pow(-static_cast<int>(l));
  return (norm * sum).value();
}

/// Expansion in the coupling: sum over kept K of (-eps U)^{l - |K|} det(A_K)^2. Valid at U = 0.
inline double hubbard_partition_expansion(const HubbardSpec& s) {
  const SquareMatrix a = hubbard_matrix(s);
  const Index l = a.dim();
  detail::check_capacity(l, kExactMaxDim, "hubbard_partition_expansion");
  const double g = -s.eps() * s.U;
  const Eigen::MatrixXd ar = a.real();
  const auto sum = detail::mask_sums<1>(l, [&] {
    return [w = detail::MinorWorker<double>(ar), g, l](std::uint64_t mask) mutable {
      const int removed = static_cast<int>(l) - std::popcount(mask);
      if (removed > 0 && g == 0.0) return std::array<LogSigned, 1>{};
      return std::array<LogSigned, 1>{w.det(mask).pow(2) * LogSigned::from_value(g).pow(removed)};
    };
  })[0];
  return sum.value().real();
}

/// 1 + 2 e^{beta mu} + e^{2 beta mu - beta U}.
inline double hubbard_single_site_analytic(double beta, double mu, double U) {
  return 1.0 + 2.0 * std::exp(beta * mu) + std::exp(2.0 * beta * mu - beta * U);
}

/// Finite-N single site: 1 + 2 b^N + (b^2 - eps U)^N with b = 1 + mu eps.
inline double hubbard_single_site_trotter(double beta, double mu, double U, int n) {
  const double eps = beta / n, b = 1.0 + mu * eps;
  return 1.0 + 2.0 * std::pow(b, n) + std::pow(b * b - eps * U, n);
}

struct AtomicCheck {
  cplx z;                 // computed Z at t = 0
  double z_ss_power = 0;  // Z_SS^L
  double rel_error = 0;   // |Z - Z_SS^L| / Z_SS^L
  double envelope = 0;    // (1 + e1)^L - 1, e1 the single-site error at the same N
  bool factorizes = false;
  bool within_envelope = false;
};

/// Z(t = 0) against Z_SS^L. The finite-N computation factorizes exactly into the
/// single-site Trotter value; the comparison with the analytic limit allows the
/// single-site Trotter error compounded over L sites, plus 5%.
inline AtomicCheck hubbard_atomic_check(const HubbardSpec& s) {
  if (s.t != 0.0) throw input_error("hubbard_atomic_check: needs t = 0");
  AtomicCheck c;
  c.z = hubbard_partition_sppm(s);
  const double zss = hubbard_single_site_analytic(s.beta, s.mu, s.U);
  const double ztr = hubbard_single_site_trotter(s.beta, s.mu, s.U, s.N);
  c.z_ss_power = std::pow(zss, s.L);
  c.rel_error = std::abs(c.z - c.z_ss_power) / c.z_ss_power;
  const double e1 = std::abs(ztr - zss) / zss;
  c.envelope = std::pow(1.0 + e1, s.L) - 1.0;
  c.factorizes = std::abs(c.z - std::pow(ztr, s.L)) <= 1e-8 * std::pow(ztr, s.L);
  c.within_envelope = c.factorizes && c.rel_error <= 1.05 * c.envelope + 1e-12;
  return c;
}

/// Single-site Z(N) from the SPPM route against the analytic limit, with a
/// linear-in-1/N extrapolation of Z(N).
struct TrotterSequence {
  std::vector<int> N;
  std::vector<double> z;
  std::vector<double> rel_error;
  double z_limit = 0.0;
  double z_extrapolated = 0.0;
  double extrapolated_error = 0.0;
  bool monotone = false;
};

inline TrotterSequence hubbard_trotter_sequence(const HubbardSpec& base, std::span<const int> ns) {
  if (ns.size() < 2) throw input_error("hubbard_trotter_sequence: need at least 2 values of N");
  TrotterSequence out;
  out.z_limit = std::pow(hubbard_single_site_analytic(base.beta, base.mu, base.U), base.L);
  std::vector<double> x;
  for (int n : ns) {
    HubbardSpec s = base;
    s.N = n;
    const cplx z = hubbard_partition_sppm(s);
    out.N.push_back(n);
    out.z.push_back(z.real());
    out.rel_error.push_back(std::abs(z.real() - out.z_limit) / out.z_limit);
    x.push_back(1.0 / n);
  }
  out.monotone = true;
  for (std::size_t i = 1; i < out.rel_error.size(); ++i)
    if (out.N[i] > out.N[i - 1] && !(out.rel_error[i] < out.rel_error[i - 1])) out.monotone = false;
  out.z_extrapolated = linear_fit(x, out.z).intercept;
  out.extrapolated_error = std::abs(out.z_extrapolated - out.z_limit) / out.z_limit;
  return out;
}

}  // namespace sppm
