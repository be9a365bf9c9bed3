#pragma once

// Strong-weak duality for n = 2:
//   M2(A) = c * sum over kept K of u^{l-|K|} det(N_K)^2
// with u / (u + m^2)^2 = 1, D = m / (u + m^2), N = m I - (A + D I)^{-1},
// c = (u + m^2)^{-l} det(A + D I)^2.

#include <cmath>
#include <string>

#include "sppm/exact.hpp"

namespace sppm {

enum class Branch { negative, positive };

/// m on the requested branch of u / (u + m^2)^2 = 1.
inline double dual_m(double u, Branch branch) {
  if (!(u > 0.0 && u <= 1.0)) throw input_error("dual: u must lie in (0, 1], got " + std::to_string(u));
  const double r = std::sqrt(std::max(0.0, std::sqrt(u) - u));
  return branch == Branch::negative ? -r : r;
}

struct DualTransform {
  double u = 1.0;
  double m = 0.0;
  double shift = 0.0;  // D = m / (u + m^2)
  SquareMatrix N;
  LogSigned c;
  Index source_dim = 0;

  double lambda() const { return u / ((u + m * m) * (u + m * m)); }
};

inline DualTransform build_dual(const SquareMatrix& a, double u, Branch branch = Branch::negative) {
  const double m = dual_m(u, branch);
  const double shift = m / (u + m * m);
  const SquareMatrix shifted = a.shifted(shift);
  const LogSigned det = det_lu(shifted);
  if (det.is_zero())
    throw numeric_error("build_dual: A + D I is singular at D = " + std::to_string(shift));
  const Index l = a.dim();
  DualTransform t;
  t.u = u;
  t.m = m;
  t.shift = shift;
  t.N = inverse(shifted);
  t.N = (-t.N).shifted(m);
  t.c = LogSigned(-static_cast<double>(l) * std::log(u + m * m), 0.0) * det.pow(2);
  t.source_dim = l;
  return t;
}

/// Exact dual sum; equals sppm_exact(A, 2) for every admissible u.
inline SppmResult sppm_dual_exact(const DualTransform& t) {
  const Index l = t.N.dim();
  detail::check_capacity(l, kHsMaxDim, "sppm_dual_exact");
  const double log_u = std::log(t.u);
  const auto sum = detail::with_scalar(t.N, [&](const auto& a) {
    using Scalar = typename std::decay_t<decltype(a)>::Scalar;
    return detail::mask_sums<1>(l, [&] {
      return [w = detail::MinorWorker<Scalar>(a), l, log_u](std::uint64_t mask) mutable {
        const auto removed = static_cast<double>(l - std::popcount(mask));
        return std::array<LogSigned, 1>{w.det(mask).pow(2) * LogSigned(removed * log_u, 0.0)};
      };
    })[0];
  });
  return {t.c * sum, 2, l, std::uint64_t{1} << l};
}

/// c det(N)^2 (1 + u sum_k G1(k) + u^2 sum_{k<k'} G2(k,k')) truncated at the given order.
/// G1 and G2 are the squared 1x1 and 2x2 principal minors of N^{-1}.
inline LogSigned weak_coupling_expansion(const DualTransform& t, int order) {
  if (order < 0 || order > 2) throw input_error("weak_coupling_expansion: order must be 0, 1 or 2");
  const LogSigned det = det_lu(t.N);
  if (det.is_zero()) throw numeric_error("weak_coupling_expansion: N is singular");
  const LogSigned lead = t.c * det.pow(2);
  if (order == 0) return lead;
  const Eigen::MatrixXcd g = detail::checked_inverse(t.N.data(), "weak_coupling_expansion");
  const Index l = g.rows();
  cplx s1{}, s2{};
  for (Index k = 0; k < l; ++k) s1 += g(k, k) * g(k, k);
  if (order == 2)
    for (Index k = 0; k < l; ++k)
      for (Index k2 = k + 1; k2 < l; ++k2) {
        const cplx minor = g(k, k) * g(k2, k2) - g(k, k2) * g(k2, k);
        s2 += minor * minor;
      }
  return lead * LogSigned::from_value(1.0 + t.u * s1 + t.u * t.u * s2);
}

/// Symbol-space version of the transform for circulant inputs.
struct DualSymbol {
  double u = 1.0;
  double m = 0.0;
  double shift = 0.0;
  CirculantSymbol N;
  LogSigned c;
};

inline DualSymbol build_dual(const CirculantSymbol& a, double u, Branch branch = Branch::negative) {
  const double m = dual_m(u, branch);
  const double shift = m / (u + m * m);
  DualSymbol t{u, m, shift, a, LogSigned(-static_cast<double>(a.size) * std::log(u + m * m), 0.0)};
  for (Index k = 0; k < a.size; ++k) {
    const cplx s = a.values[k] + shift;
    if (s == cplx{}) throw numeric_error("build_dual: A + D I is singular at D = " + std::to_string(shift));
    t.N.values[k] = m - 1.0 / s;
    t.c *= LogSigned::from_value(s).pow(2);
  }
  return t;
}

}  // namespace sppm
