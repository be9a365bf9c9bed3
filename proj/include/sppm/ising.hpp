#pragma once

// Second Renyi entropy of the transverse-field Ising chain ground state.
//
// NS momenta q = 2 pi (m - 1/2) / L. With sigma_q = (h - e^{iq}) / |h - e^{iq}| = e^{i theta_q},
// G has symbol sigma_q and F = (I + G)(I - G)^{-1} has symbol i cot(theta_q / 2).
// Formation probabilities are P(I) = det F_I / det(I + F), so
//   R2 = -ln sum P^2 = 2 ln det(I + F) - ln M2(F).

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sppm/fit.hpp"
#include "sppm/meanfield.hpp"

namespace sppm {

struct IsingPoint {
  int L = 0;
  double h = 0.0;
  double R2 = 0.0;
  std::string method;  // exact | mf | dual-mf | efp | kink0 | kink2
  std::optional<MFState> deltas;
  std::optional<double> u;
  std::optional<double> stability_ratio;
};

namespace detail {

inline void check_ising(int l, double h) {
  if (l < 2 || l % 2 != 0) throw input_error("ising: L must be even and >= 2, got " + std::to_string(l));
  if (!std::isfinite(h)) throw input_error("ising: h must be finite");
}

inline double ising_theta(double q, double h) { return std::arg(cplx(h - std::cos(q), -std::sin(q))); }

inline cplx ising_f_value(double q, double h) {
  const double t = std::tan(ising_theta(q, h) / 2.0);
  if (t == 0.0) throw numeric_error("ising_F: I - G is singular at q = " + std::to_string(q));
  return {0.0, 1.0 / t};
}

}  // namespace detail

inline CirculantSymbol ising_symbol_G(int l, double h) {
  detail::check_ising(l, h);
  return symbol_from(l, 0.5, [h](double q) { return std::polar(1.0, detail::ising_theta(q, h)); });
}

inline CirculantSymbol ising_symbol_F(int l, double h) {
  detail::check_ising(l, h);
  return symbol_from(l, 0.5, [h](double q) { return detail::ising_f_value(q, h); });
}

/// F(q) on the whole circle, for the thermodynamic quadrature mode.
inline std::function<cplx(double)> ising_F_function(double h) {
  return [h](double q) { return detail::ising_f_value(q, h); };
}

/// Real symmetric correlation matrix.
inline SquareMatrix ising_G(int l, double h) {
  return SquareMatrix(require_real(circulant_dense(ising_symbol_G(l, h)), "ising_G", 1e-9));
}

/// Real antisymmetric matrix F = (I + G)(I - G)^{-1}.
inline SquareMatrix ising_F(int l, double h) {
  return SquareMatrix(require_real(circulant_dense(ising_symbol_F(l, h)), "ising_F", 1e-9));
}

/// ln det(I + F) from the symbol.
inline double ising_log_norm(int l, double h) {
  const auto f = ising_symbol_F(l, h);
  LogSigned d = LogSigned::one();
  for (const auto& v : f.values) d *= LogSigned::from_value(1.0 + v);
  return d.log_mag();
}

/// Exhaustive R2; also checks that the probabilities sum to one.
inline IsingPoint renyi2_exact(int l, double h) {
  const SquareMatrix f = ising_F(l, h);
  const auto m = sppm_exact_powers<2>(f, {1, 2});
  const double norm = ising_log_norm(l, h);
  const double total = std::exp(m[0].value.log_mag() - norm);
  if (std::abs(total - 1.0) > 1e-9)
    throw numeric_error("renyi2_exact: probabilities sum to " + std::to_string(total));
  return {l, h, 2.0 * norm - m[1].value.log_mag(), "exact", {}, {}, {}};
}

inline IsingPoint renyi2_mf(int l, double h, const MFOptions& opt = {}) {
  const auto f = ising_symbol_F(l, h);
  const auto grid = default_init_grid();
  const auto ms = mf_multistart(grid, [&](const MFState& s) { return mf_circulant(f, s, opt); });
  const MFSolution& best = ms.solutions[ms.best];
  return {l, h, 2.0 * ising_log_norm(l, h) - best.sppm_mf.log_mag(), "mf", best.state, {}, {}};
}

inline IsingPoint renyi2_dual_mf(int l, double h, double u, const MFOptions& opt = {}) {
  const auto t = build_dual(ising_symbol_F(l, h), u);
  const auto grid = default_init_grid();
  const auto ms = mf_multistart(grid, [&](const MFState& s) { return mf_dual(t, s, opt); });
  const MFSolution& best = ms.solutions[ms.best];
  const double r2 = 2.0 * ising_log_norm(l, h) - best.sppm_mf.log_mag();
  const double ratio = stability_ratio(best.state, -best.sppm_mf.log_mag() / l, u);
  return {l, h, r2, "dual-mf", best.state, u, ratio};
}

/// Dual MF over a u grid; best is the stable point with the largest M (smallest R2).
struct DualScan {
  std::vector<IsingPoint> points;
  std::optional<std::size_t> best;
};

inline DualScan renyi2_dual_scan(int l, double h, std::span<const double> u_grid, const MFOptions& opt = {}) {
  DualScan scan;
  scan.points.resize(u_grid.size());
  parallel_for(u_grid.size(), [&](std::size_t i) { scan.points[i] = renyi2_dual_mf(l, h, u_grid[i], opt); });
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    if (!is_stable(*scan.points[i].stability_ratio)) continue;
    if (!scan.best || scan.points[i].R2 < scan.points[*scan.best].R2) scan.best = i;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Emptiness formation probability.

namespace detail {

/// 1/2 + (h - cos q) / (2 eps_q) without cancellation.
inline double efp_weight(double q, double h) {
  const double c = h - std::cos(q);
  const double eps = std::hypot(h - std::cos(q), std::sin(q));
  if (c >= 0.0) return 0.5 + c / (2.0 * eps);
  const double s = std::sin(q);
  return s * s / (2.0 * eps * (eps - c));
}

/// ln of efp_weight; for h < 1 the weight vanishes like q^2 and s^2 would underflow.
inline double efp_log_weight(double q, double h) {
  const double c = h - std::cos(q);
  if (c >= 0.0) return std::log(efp_weight(q, h));
  const double eps = std::hypot(c, std::sin(q));
  return 2.0 * std::log(std::abs(std::sin(q))) - std::log(2.0 * eps * (eps - c));
}

/// 0, then a 2^k for k >= -8 up to pi: resolves structure on the scale a near q = 0.
inline std::vector<double> geometric_points(double a) {
  std::vector<double> pts{0.0};
  for (double x = a / 256.0; x < std::numbers::pi; x *= 2.0) pts.push_back(x);
  pts.push_back(std::numbers::pi);
  return pts;
}

/// Complete elliptic integral of the first kind, parameter m, by the AGM.
inline double ellip_k_agm(double m) {
  if (!(m >= 0.0 && m < 1.0)) throw input_error("ellip_k_agm: need 0 <= m < 1");
  double a = 1.0, b = std::sqrt(1.0 - m);
  while (std::abs(a - b) > 1e-15 * a) {
    const double an = (a + b) / 2.0;
    b = std::sqrt(a * b);
    a = an;
  }
  return std::numbers::pi / (2.0 * a);
}

}  // namespace detail

/// zeta(h) = (1/2 pi) int_0^pi ln(1/2 + (h - cos q) / (2 eps_q)) dq; R2 ~ -2 zeta L in the paramagnet.
inline double efp_zeta(double h) {
  if (!(h >= 0.0)) throw input_error("efp_zeta: need h >= 0");
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [h](double q) { return detail::efp_log_weight(q, h); };
  return ts.integrate(f, 0.0, std::numbers::pi, 1e-12) / (2.0 * std::numbers::pi);
}

/// d zeta / dh by quadrature of the h-derivative of the integrand.
inline double efp_zeta_prime(double h) {
  if (!(h >= 0.0)) throw input_error("efp_zeta_prime: need h >= 0");
  if (h == 1.0) throw domain_error("efp_zeta_prime: logarithmic divergence at h = 1", 1.0);
  auto f = [h](double q) {
    const double c = h - std::cos(q), s = std::sin(q), eps = std::hypot(c, s);
    if (s == 0.0) return 0.0;
    const double w = detail::efp_weight(q, h);  // = (eps + c) / (2 eps)
    return s * s / (2.0 * eps * eps * eps * w);
  };
  const auto pts = detail::geometric_points(std::abs(1.0 - h));
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], 8, 1e-11);
  return total / (2.0 * std::numbers::pi);
}

/// -Theta(h - 1) / (2h) + K(4h / (1+h)^2) / (pi (1 + h)).
inline double efp_zeta_prime_closed(double h) {
  if (!(h >= 0.0)) throw input_error("efp_zeta_prime_closed: need h >= 0");
  if (h == 1.0) throw domain_error("efp_zeta_prime_closed: logarithmic divergence at h = 1", 1.0);
  const double step = h > 1.0 ? -1.0 / (2.0 * h) : 0.0;
  return step + detail::ellip_k_agm(4.0 * h / ((1.0 + h) * (1.0 + h))) / (std::numbers::pi * (1.0 + h));
}

/// R2 from the all-occupied configuration plus optional pairs of flips:
///   R2 = -2 ln P(C0) - ln(1 + sum_{i<j} x_ij^2),  x_ij = det(F without i, j) / det F.
/// The ratio is the 2x2 principal minor of F^{-1} (Jacobi).
inline IsingPoint kink_correction(int l, double h, int flips = 2) {
  if (flips != 0 && flips != 2) throw input_error("kink_correction: flips must be 0 or 2");
  if (l > 80) throw capacity_error("kink_correction: L = " + std::to_string(l) + " exceeds 80");
  const SquareMatrix f = ising_F(l, h);
  const LogSigned det_f = det_lu(f);
  if (det_f.is_zero()) throw numeric_error("kink_correction: F is singular");
  double r2 = 2.0 * ising_log_norm(l, h) - 2.0 * det_f.log_mag();
  if (flips == 2) {
    const Eigen::MatrixXd g = detail::checked_inverse(f.data(), "kink_correction").real();
    double acc = 0.0;
    for (Index i = 0; i < l; ++i)
      for (Index j = i + 1; j < l; ++j) {
        const double x = g(i, i) * g(j, j) - g(i, j) * g(j, i);
        acc += x * x;
      }
    r2 -= std::log1p(acc);
  }
  return {l, h, r2, flips == 0 ? "kink0" : "kink2", {}, {}, {}};
}

struct FitResult {
  double alpha2 = 0.0;
  double beta2 = 0.0;
  double alpha2_se = 0.0;
  double residual = 0.0;
  std::vector<int> L_range;
};

/// R2 = alpha2 L + beta2 by least squares.
inline FitResult fit_alpha_beta(std::span<const IsingPoint> points) {
  std::vector<double> x, y;
  std::vector<int> ls;
  for (const auto& p : points) {
    x.push_back(p.L);
    y.push_back(p.R2);
    if (std::find(ls.begin(), ls.end(), p.L) == ls.end()) ls.push_back(p.L);
  }
  if (ls.size() < 3) throw input_error("fit_alpha_beta: need at least 3 distinct L");
  const auto f = linear_fit(x, y);
  std::sort(ls.begin(), ls.end());
  return {f.slope, f.intercept, f.slope_se, f.residual, ls};
}

// ---------------------------------------------------------------------------
// Finite-size onset of the ordered MF solution.

/// D4 of the MF fixed point on F(L, h), via the reduced scalar equation.
inline double ising_delta4(int l, double h) { return antisymmetric_delta4(ising_symbol_F(l, h)); }

/// Largest h with D4 > 1e-8, located by bisection to 1e-9.
inline double hstar(int l, double threshold = 1e-8) {
  auto ordered = [&](double h) { return ising_delta4(l, h) > threshold; };
  double lo = 0.0, hi = 1.5;
  if (!ordered(lo)) throw scan_error("hstar: D4 vanishes already at h = 0 for L = " + std::to_string(l));
  if (ordered(hi)) throw scan_error("hstar: D4 still nonzero at h = 1.5 for L = " + std::to_string(l));
  while (hi - lo > 1e-9) {
    const double mid = (lo + hi) / 2.0;
    (ordered(mid) ? lo : hi) = mid;
  }
  return (lo + hi) / 2.0;
}

struct HstarScan {
  std::vector<int> L;
  std::vector<double> hstar;
  double zeta1 = 0.0, zeta2 = 0.0;  // 1 - h* = zeta1 L^{-zeta2}
  double zeta2_se = 0.0;
};

inline HstarScan hstar_scan(std::span<const int> ls) {
  HstarScan s;
  s.L.assign(ls.begin(), ls.end());
  s.hstar.resize(ls.size());
  parallel_for(ls.size(), [&](std::size_t i) { s.hstar[i] = hstar(ls[i]); });
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    x.push_back(std::log(static_cast<double>(ls[i])));
    y.push_back(std::log(1.0 - s.hstar[i]));
  }
  const auto f = linear_fit(x, y);
  s.zeta2 = -f.slope;
  s.zeta2_se = f.slope_se;
  s.zeta1 = std::exp(f.intercept);
  return s;
}

struct Delta4Scaling {
  std::vector<double> h;
  std::vector<double> delta4;
  double exponent = 0.0;  // D4 ~ (1 - h)^exponent
  double exponent_se = 0.0;
};

/// Infinite chain: D4 solves (1/2 pi) int dq / (|F(q)|^2 + D4) = 1.
inline Delta4Scaling delta4_scaling(std::span<const double> h_grid) {
  Delta4Scaling s;
  s.h.assign(h_grid.begin(), h_grid.end());
  s.delta4.resize(h_grid.size());
  parallel_for(h_grid.size(), [&](std::size_t i) {
    const double a = 1.0 - h_grid[i];
    if (!(a > 0.0)) throw input_error("delta4_scaling: need h < 1");
    s.delta4[i] = antisymmetric_delta4(ising_F_function(h_grid[i]));
  });
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!(s.delta4[i] > 0.0)) throw numeric_error("delta4_scaling: D4 vanished at h = " + std::to_string(s.h[i]));
    x.push_back(std::log(1.0 - s.h[i]));
    y.push_back(std::log(s.delta4[i]));
  }
  const auto f = linear_fit(x, y);
  s.exponent = f.slope;
  s.exponent_se = f.slope_se;
  return s;
}

}  // namespace sppm
