#pragma once

// Mean-field approximation of M2(A) with three order parameters.
//
//   K(D) = (A + (D1 - D2) I)(A^T + (D1 + D2) I) - D3^2 I = x + 2 D2 A_a
//   ln M_MF = -l D4 + ln det K,   D4 = D1^2 - D2^2 - D3^2
//
// Stationarity of ln M_MF gives the fixed point
//   D1 = tr[K^-1 (A_s + D1)] / l,  D2 = tr[K^-1 (-A_a + D2)] / l,  D3 = D3 tr[K^-1] / l.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sppm/duality.hpp"
#include "sppm/exact.hpp"

namespace sppm {

struct MFState {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;

  double delta4() const { return delta1 * delta1 - delta2 * delta2 - delta3 * delta3; }
  double distance(const MFState& o) const {
    return std::max({std::abs(delta1 - o.delta1), std::abs(delta2 - o.delta2), std::abs(delta3 - o.delta3)});
  }
};

struct MFOptions {
  double damping = 0.5;
  double tol = 1e-12;
  std::size_t max_iter = 100000;
  bool pin_delta2 = true;
};

struct MFSolution {
  MFState state;
  bool converged = false;
  double residual = kInf;
  std::size_t iterations = 0;
  LogSigned sppm_mf;  // per site in thermodynamic mode
  std::optional<double> stability_ratio;
};

/// Ratio returned when the Gaussian correction is undefined.
inline constexpr double kUnstable = -kInf;

namespace detail {

struct KernelEval {
  MFState rhs;
  LogSigned det_k;  // det K, or exp of the per-site integral of ln K
  bool ok = false;
};

inline bool finite(const MFState& s) {
  return std::isfinite(s.delta1) && std::isfinite(s.delta2) && std::isfinite(s.delta3);
}

class DenseKernel {
 public:
  explicit DenseKernel(Eigen::MatrixXd a)
      : a_(std::move(a)), as_((a_ + a_.transpose()) / 2.0), aa_((a_ - a_.transpose()) / 2.0) {}

  Index size() const { return a_.rows(); }

  Eigen::MatrixXd k_matrix(const MFState& s) const {
    const Index l = a_.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(l, l);
    return (a_ + (s.delta1 - s.delta2) * id) * (a_.transpose() + (s.delta1 + s.delta2) * id) -
           s.delta3 * s.delta3 * id;
  }

  KernelEval operator()(const MFState& s) const {
    const Index l = a_.rows();
    const Eigen::MatrixXd k = k_matrix(s);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    KernelEval e;
    e.det_k = log_det_from_lu(lu);
    if (e.det_k.is_zero()) return e;
    const Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) return e;
    const double ln = static_cast<double>(l);
    const double t0 = inv.trace() / ln;
    const double ts = (inv.array() * as_.transpose().array()).sum() / ln;
    const double ta = (inv.array() * aa_.transpose().array()).sum() / ln;
    e.rhs = {ts + s.delta1 * t0, -ta + s.delta2 * t0, s.delta3 * t0};
    e.ok = finite(e.rhs);
    return e;
  }

 private:
  Eigen::MatrixXd a_, as_, aa_;
};

/// K(q) = (A_q + D1 - D2)(A_{-q} + D1 + D2) - D3^2; evaluates the three averages and ln K.
struct SymbolTerms {
  cplx k, r1, r2, r3;
};
inline SymbolTerms symbol_terms(cplx aq, cplx am, const MFState& s) {
  const cplx k = (aq + s.delta1 - s.delta2) * (am + s.delta1 + s.delta2) - s.delta3 * s.delta3;
  const cplx as = (aq + am) / 2.0, aa = (aq - am) / 2.0;
  return {k, (as + s.delta1) / k, (-aa + s.delta2) / k, 1.0 / k};
}

class SymbolKernel {
 public:
  explicit SymbolKernel(CirculantSymbol s) : s_(std::move(s)) {}
  Index size() const { return s_.size; }

  KernelEval operator()(const MFState& st) const {
    KernelEval e;
    e.det_k = LogSigned::one();
    cplx r1{}, r2{}, r3{};
    for (Index k = 0; k < s_.size; ++k) {
      const auto t = symbol_terms(s_.values[k], s_.values[s_.negative(k)], st);
      if (t.k == cplx{}) return e;
      e.det_k *= LogSigned::from_value(t.k);
      r1 += t.r1;
      r2 += t.r2;
      r3 += t.r3;
    }
    const double ln = static_cast<double>(s_.size);
    e.rhs = {r1.real() / ln, r2.real() / ln, st.delta3 * r3.real() / ln};
    e.ok = finite(e.rhs);
    return e;
  }

 private:
  CirculantSymbol s_;
};

/// Integral over [-pi, pi] split at the given breakpoints, divided by 2 pi.
template <class Fn>
double circle_average(Fn&& fn, const std::vector<double>& breakpoints, double tol = 1e-10) {
  std::vector<double> pts{-std::numbers::pi, std::numbers::pi};
  for (double b : breakpoints)
    if (b > -std::numbers::pi && b < std::numbers::pi) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(fn, pts[i], pts[i + 1], 6, tol);
  return total / (2.0 * std::numbers::pi);
}

class ContinuumKernel {
 public:
  ContinuumKernel(std::function<cplx(double)> symbol, std::vector<double> breakpoints)
      : symbol_(std::move(symbol)), breaks_(std::move(breakpoints)) {}
  Index size() const { return 1; }

  KernelEval operator()(const MFState& st) const {
    KernelEval e;
    auto term = [&](double q) { return symbol_terms(symbol_(q), symbol_(-q), st); };
    bool zero = false;
    auto guard = [&](cplx v, const SymbolTerms& t) {
      if (t.k == cplx{}) zero = true;
      return zero ? 0.0 : v.real();
    };
    const double r1 = circle_average([&](double q) { auto t = term(q); return guard(t.r1, t); }, breaks_);
    const double r2 = circle_average([&](double q) { auto t = term(q); return guard(t.r2, t); }, breaks_);
    const double r3 = circle_average([&](double q) { auto t = term(q); return guard(t.r3, t); }, breaks_);
    const double lnk = circle_average([&](double q) { return std::log(std::abs(term(q).k)); }, breaks_);
    if (zero || !std::isfinite(lnk)) return e;
    e.det_k = LogSigned(lnk, 0.0);
    e.rhs = {r1, r2, st.delta3 * r3};
    e.ok = finite(e.rhs);
    return e;
  }

 private:
  std::function<cplx(double)> symbol_;
  std::vector<double> breaks_;
};

inline void check_options(const MFOptions& o) {
  if (!(o.damping > 0.0 && o.damping <= 1.0)) throw input_error("mean field: damping must lie in (0, 1]");
  if (!(o.tol > 0.0)) throw input_error("mean field: tol must be positive");
  if (o.max_iter < 1) throw input_error("mean field: max_iter must be >= 1");
}

inline double defect(const MFState& s, const MFState& rhs, bool pin2) {
  return std::max({std::abs(rhs.delta1 - s.delta1), pin2 ? 0.0 : std::abs(rhs.delta2 - s.delta2),
                   std::abs(rhs.delta3 - s.delta3)});
}

/// Damped fixed-point iteration with up to three perturbed restarts on a singular K.
template <class Kernel>
MFSolution iterate(const Kernel& kernel, const MFState& init, const MFOptions& opt) {
  check_options(opt);
  const double l = static_cast<double>(kernel.size());
  for (int restart = 0; restart <= 3; ++restart) {
    MFState s = init;
    // unequal steps, so a start on D1 = |D3| (where K can vanish exactly) leaves that line
    s.delta1 += 1e-3 * restart;
    s.delta3 += init.delta3 != 0.0 ? 0.5e-3 * restart : 0.0;
    if (opt.pin_delta2) s.delta2 = 0.0;
    MFSolution sol;
    bool singular = false;
    for (std::size_t it = 0;; ++it) {
      const KernelEval e = kernel(s);
      if (!e.ok) {
        singular = true;
        break;
      }
      sol.state = s;
      sol.iterations = it;
      sol.residual = defect(s, e.rhs, opt.pin_delta2);
      sol.sppm_mf = LogSigned(-l * s.delta4(), 0.0) * e.det_k;
      if (sol.residual <= opt.tol) {
        sol.converged = true;
        return sol;
      }
      if (it + 1 >= opt.max_iter) return sol;
      const double h = opt.damping;
      s = {(1 - h) * s.delta1 + h * e.rhs.delta1, opt.pin_delta2 ? 0.0 : (1 - h) * s.delta2 + h * e.rhs.delta2,
           (1 - h) * s.delta3 + h * e.rhs.delta3};
      if (!finite(s)) {
        singular = true;
        break;
      }
    }
    if (!singular) return {};
  }
  throw numeric_error("mean field: x + 2 D2 A_a is singular along the iteration after 3 restarts");
}

}  // namespace detail

/// ln M_MF at a given state, determinant form.
inline LogSigned mf_value(const SquareMatrix& a, const MFState& s) {
  const detail::DenseKernel k(require_real(a, "mf_value"));
  return LogSigned(-static_cast<double>(a.dim()) * s.delta4(), 0.0) * detail::log_det(k.k_matrix(s));
}

/// The same value from the Pfaffian of the 4l x 4l antisymmetric action matrix.
inline LogSigned mf_value_pfaffian(const SquareMatrix& a, const MFState& s) {
  const Eigen::MatrixXd ar = require_real(a, "mf_value_pfaffian");
  const Index l = ar.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(l, l);
  Eigen::MatrixXd o(2 * l, 2 * l), j = Eigen::MatrixXd::Zero(2 * l, 2 * l);
  o << ar + s.delta1 * id, -s.delta2 * id, -s.delta2 * id, ar + s.delta1 * id;
  j.topRightCorner(l, l) = s.delta3 * id;
  j.bottomLeftCorner(l, l) = -s.delta3 * id;
  Eigen::MatrixXd big(4 * l, 4 * l);
  big << j, -o, o.transpose(), j;
  // two blocks of 2l variables: Pf = (-1)^{l(2l-1)} det K = (-1)^l det K
  const LogSigned pf = pfaffian(SquareMatrix(big));
  return LogSigned(-static_cast<double>(l) * s.delta4(), 0.0) * (l % 2 ? -pf : pf);
}

inline MFSolution mf_direct(const SquareMatrix& a, const MFState& init, const MFOptions& opt = {}) {
  return detail::iterate(detail::DenseKernel(require_real(a, "mf_direct")), init, opt);
}

inline MFSolution mf_circulant(const CirculantSymbol& s, const MFState& init, const MFOptions& opt = {}) {
  for (const auto& v : s.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw input_error("mf_circulant: non-finite symbol");
  return detail::iterate(detail::SymbolKernel(s), init, opt);
}

/// l -> infinity: momentum sums become averages over the circle. sppm_mf is per site.
inline MFSolution mf_thermodynamic(std::function<cplx(double)> symbol, const MFState& init,
                                   const MFOptions& opt = {}, std::vector<double> breakpoints = {0.0}) {
  return detail::iterate(detail::ContinuumKernel(std::move(symbol), std::move(breakpoints)), init, opt);
}

namespace detail {

inline MFSolution to_dual(MFSolution b, double u, Index l, const LogSigned& c) {
  const double r = std::sqrt(u);
  b.state = {r * b.state.delta1, r * b.state.delta2, r * b.state.delta3};
  b.sppm_mf = c * LogSigned(static_cast<double>(l) * std::log(u), 0.0) * b.sppm_mf;
  return b;
}

}  // namespace detail

/// Direct MF on N / sqrt(u) with the duality prefactor. The returned state is in the
/// primed variables D'_i = sqrt(u) D_i(N / sqrt(u)), so that D'_4 = D_4(N / sqrt(u)).
inline MFSolution mf_dual(const DualTransform& t, const MFState& init, const MFOptions& opt = {}) {
  const double r = std::sqrt(t.u);
  const SquareMatrix b = (1.0 / r) * t.N;
  const MFState binit{init.delta1 / r, init.delta2 / r, init.delta3 / r};
  return detail::to_dual(mf_direct(b, binit, opt), t.u, t.N.dim(), t.c);
}

inline MFSolution mf_dual(const DualSymbol& t, const MFState& init, const MFOptions& opt = {}) {
  const double r = std::sqrt(t.u);
  CirculantSymbol b = t.N;
  for (auto& v : b.values) v /= r;
  const MFState binit{init.delta1 / r, init.delta2 / r, init.delta3 / r};
  return detail::to_dual(mf_circulant(b, binit, opt), t.u, b.size, t.c);
}

/// f_MF = -ln M_MF / l.
inline double free_energy_density(const MFSolution& s, Index l) {
  return -s.sppm_mf.log_mag() / static_cast<double>(l);
}

/// f_SP / f_MF = 1 + ln[1 - (D1^2 - D3^2)^2 / u^2] / (2 f_MF); u = 1 in direct space.
inline double stability_ratio(const MFState& s, double f_mf, std::optional<double> u = std::nullopt) {
  if (std::abs(s.delta2) > 1e-8) throw input_error("stability_ratio: requires D2 = 0");
  const double uu = u.value_or(1.0);
  const double g = (s.delta1 * s.delta1 - s.delta3 * s.delta3) / uu;
  const double bracket = 1.0 - g * g;
  if (!(bracket > 0.0)) return kUnstable;
  if (bracket == 1.0) return 1.0;
  if (f_mf == 0.0) return kUnstable;
  return 1.0 + std::log(bracket) / (2.0 * f_mf);
}

/// Stable when the saddle-point correction moves f by less than 1%.
inline bool is_stable(double ratio) { return std::abs(ratio - 1.0) < 0.01; }

inline std::vector<MFState> default_init_grid() {
  std::vector<MFState> g;
  for (double d1 : {-5.0, -1.0, -0.5, 0.0, 0.5, 1.0})
    for (double d3 : {0.0, 0.5, 1.0}) g.push_back({d1, 0.0, d3});
  return g;
}

struct MultistartResult {
  std::vector<MFSolution> solutions;  // converged, deduplicated, in grid order
  std::size_t best = 0;
};

/// Runs solve(init) over the grid. The best solution maximizes M_MF among those with
/// D4 >= 0; ties go to the larger |D4|.
template <class Solve>
MultistartResult mf_multistart(std::span<const MFState> grid, Solve&& solve) {
  if (grid.empty()) throw input_error("mf_multistart: empty init grid");
  std::vector<std::optional<MFSolution>> raw(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      raw[i] = solve(grid[i]);
    } catch (const numeric_error&) {
      raw[i].reset();
    }
  });
  MultistartResult out;
  std::vector<double> residuals;
  for (const auto& r : raw) {
    residuals.push_back(r ? r->residual : kInf);
    if (!r || !r->converged) continue;
    const bool dup = std::any_of(out.solutions.begin(), out.solutions.end(),
                                 [&](const MFSolution& s) { return s.state.distance(r->state) < 1e-6; });
    if (!dup) out.solutions.push_back(*r);
  }
  if (out.solutions.empty()) throw solver_error("mf_multistart: no init converged", residuals);
  auto better = [](const MFSolution& a, const MFSolution& b) {
    const double la = a.sppm_mf.log_mag(), lb = b.sppm_mf.log_mag();
    if (std::abs(la - lb) > 1e-12 * std::max(1.0, std::abs(la))) return la > lb;
    return std::abs(a.state.delta4()) > std::abs(b.state.delta4());
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < out.solutions.size(); ++i) {
    if (out.solutions[i].state.delta4() < -1e-10) continue;
    if (!best || better(out.solutions[i], out.solutions[*best])) best = i;
  }
  if (!best) {
    best = 0;
    for (std::size_t i = 1; i < out.solutions.size(); ++i)
      if (better(out.solutions[i], out.solutions[*best])) best = i;
  }
  out.best = *best;
  return out;
}

/// ln M_exact - ln M_MF; nonnegative when the lower bound holds.
inline double variational_gap(const SquareMatrix& a, const MFSolution& sol) {
  return sppm_exact(a, 2).value.log_mag() - sol.sppm_mf.log_mag();
}

/// For a real antisymmetric symbol with D2 = 0 the fixed point reduces to
/// mean_q 1 / (|A_q|^2 + D4) = 1. Returns the root D4 > 0, or 0 when there is none.
inline double antisymmetric_delta4(const CirculantSymbol& s) {
  std::vector<double> a2(s.values.size());
  for (std::size_t k = 0; k < a2.size(); ++k) a2[k] = std::norm(s.values[k]);
  auto g = [&](double d4) {
    double acc = 0.0;
    for (double v : a2) acc += 1.0 / (v + d4);
    return acc / static_cast<double>(a2.size()) - 1.0;
  };
  if (std::any_of(a2.begin(), a2.end(), [](double v) { return v == 0.0; })) {
    // mean diverges at D4 = 0+, a positive root always exists
  } else if (g(0.0) <= 0.0) {
    return 0.0;
  }
  double hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, 0.0 + std::numeric_limits<double>::min(), hi,
                                                   boost::math::tools::eps_tolerance<double>(52), iters);
  return (r.first + r.second) / 2.0;
}

/// Thermodynamic version of antisymmetric_delta4 for a symbol function. Each evaluation adds
/// geometric breakpoints down to sqrt(D4) / 1000 around q = 0, where |A_q| is assumed to vanish.
inline double antisymmetric_delta4(const std::function<cplx(double)>& symbol, std::vector<double> breakpoints = {0.0}) {
  auto g = [&](double d4) {
    std::vector<double> pts = breakpoints;
    for (double x = 1e-3 * std::sqrt(d4); x < std::numbers::pi; x *= 2.0) {
      pts.push_back(x);
      pts.push_back(-x);
    }
    return detail::circle_average([&](double q) { return 1.0 / (std::norm(symbol(q)) + d4); }, pts) - 1.0;
  };
  double lo = 1e-6;
  while (g(lo) <= 0.0) {
    lo *= 1e-2;
    if (lo < 1e-24) return 0.0;
  }
  double hi = 2.0 * lo;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  std::uintmax_t iters = 300;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return (r.first + r.second) / 2.0;
}

}  // namespace sppm
