#pragma once

// SPPM of the closed-chain Laplacian. Removing sites cuts the ring into open
// runs; a kept run of length l is a Dirichlet path with determinant l + 1, so
// Z(n, L) = M^(n)(A) depends only on the multiset of run lengths.

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "sppm/exact.hpp"

namespace sppm {

inline SquareMatrix laplacian_matrix(Index l) {
  if (l < 3) throw input_error("laplacian_matrix: need L >= 3, got " + std::to_string(l));
  Eigen::MatrixXd a = 2.0 * Eigen::MatrixXd::Identity(l, l);
  for (Index i = 0; i < l; ++i) {
    a(i, (i + 1) % l) = -1.0;
    a((i + 1) % l, i) = -1.0;
  }
  return SquareMatrix(a);
}

/// 4 sin^2(q / 2) on periodic momenta.
inline CirculantSymbol laplacian_symbol(Index l) {
  if (l < 3) throw input_error("laplacian_symbol: need L >= 3, got " + std::to_string(l));
  return symbol_from(l, 0.0, [](double q) { return cplx(4.0 * std::pow(std::sin(q / 2.0), 2), 0.0); });
}

/// Brute force through the generic enumerator.
inline LogSigned z_exact_enumeration(Index l, int n) { return sppm_exact(laplacian_matrix(l), n).value; }

namespace detail {

/// Calls fn(mult) for every partition of total into exactly parts parts; mult[s] counts parts of size s.
template <class Fn>
void partitions(int total, int parts, Fn&& fn) {
  std::vector<int> mult(static_cast<std::size_t>(total + 1), 0);
  auto rec = [&](auto&& self, int left, int slots, int max_part) -> void {
    if (slots == 0) {
      if (left == 0) fn(mult);
      return;
    }
    for (int s = std::min(max_part, left - (slots - 1)); s >= 1; --s) {
      if (s * slots < left) break;
      ++mult[s];
      self(self, left - s, slots - 1, s);
      --mult[s];
    }
  };
  rec(rec, total, parts, total);
}

inline double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace detail

/// Sum over run-length multisets with N_closed = (L / m) m!^2 / prod(m_l^+! m_l^-!)
/// ring configurations each. Any real n >= 0 is allowed.
inline LogSigned z_cluster_formula(int l, double n) {
  if (l < 3) throw input_error("z_cluster_formula: need L >= 3");
  if (!(n >= 0.0)) throw input_error("z_cluster_formula: need n >= 0");
  LogSigned total = LogSigned::one();  // every site removed
  for (int kept = 1; kept < l; ++kept) {
    const int removed = l - kept;
    for (int m = 1; m <= std::min(kept, removed); ++m) {
      std::vector<double> minus_terms;
      detail::partitions(removed, m, [&](const std::vector<int>& mult) {
        double lf = 0.0;
        for (int c : mult) lf += detail::log_factorial(c);
        minus_terms.push_back(lf);
      });
      detail::partitions(kept, m, [&](const std::vector<int>& mult) {
        double log_w = 0.0, lf = 0.0;
        for (std::size_t s = 1; s < mult.size(); ++s) {
          log_w += mult[s] * n * std::log(static_cast<double>(s) + 1.0);
          lf += detail::log_factorial(mult[s]);
        }
        const double base = std::log(static_cast<double>(l) / m) + 2.0 * detail::log_factorial(m) - lf + log_w;
        for (double lfm : minus_terms) total += LogSigned(base - lfm, 0.0);
      });
    }
  }
  if (n == 0.0) total += LogSigned::one();  // the fully kept ring has det 0 and 0^0 = 1
  return total;
}

/// O(L^2) recurrence over the run containing site 1; works for large L.
inline LogSigned z_transfer(int l, double n) {
  if (l < 3) throw input_error("z_transfer: need L >= 3");
  if (!(n >= 0.0)) throw input_error("z_transfer: need n >= 0");
  // w(k): weight of a kept run of length k followed by one removed site (k = 0 is a bare removed site)
  auto w = [&](int k) { return k == 0 ? LogSigned::one() : LogSigned(n * std::log(k + 1.0), 0.0); };
  // p[m]: open strings of length m ending in a removed site
  std::vector<LogSigned> p(static_cast<std::size_t>(l) + 1);
  p[0] = LogSigned::one();
  for (int m = 1; m <= l; ++m)
    for (int k = 0; k < m; ++k) p[m] += w(k) * p[m - k - 1];
  // the block covering site 1 has length s and s rotations
  LogSigned z;
  for (int s = 1; s <= l; ++s) z += LogSigned(std::log(static_cast<double>(s)), 0.0) * w(s - 1) * p[l - s];
  if (n == 0.0) z += LogSigned::one();
  return z;
}

// ---------------------------------------------------------------------------
// Grand-canonical thermodynamics. With S(mu, n) = sum_{l >= 1} e^{-mu l} (l + 1)^n
// and X = S / (e^mu - 1):  G = 1 / (1 - e^{-mu}) + d/dmu ln(1 - X).

struct GeneratingFunction {
  double value = 0.0;
  double d_mu = 0.0;
  double d_n = 0.0;
  std::size_t l_max = 0;  // last inner-sum index kept
};

struct ThermoPoint {
  double n = 0.0;
  double mu = 0.0;
  double g = 0.0, f = 0.0, e = 0.0, s = 0.0;
  double mean_L = 0.0;
};

struct ClusterStats {
  double n = 0.0;
  double mu = 0.0;
  std::map<int, double> mean_m_plus;  // l -> <m_l^+> per chain
  std::size_t l_max = 0;
};

namespace detail {

struct InnerSums {
  double s = 0, s1 = 0, s2 = 0, sn = 0, s1n = 0;  // weights 1, l, l^2, ln(l+1), l ln(l+1)
  std::size_t l_max = 0;
};

inline InnerSums inner_sums(double mu, double n) {
  if (!(mu > 0.0)) throw input_error("laplacian thermodynamics: need mu > 0");
  InnerSums r;
  const double peak = n / mu;
  for (std::size_t l = 1;; ++l) {
    const double dl = static_cast<double>(l), lg = std::log(dl + 1.0);
    const double t = std::exp(-mu * dl + n * lg);
    r.s += t;
    r.s1 += dl * t;
    r.s2 += dl * dl * t;
    r.sn += lg * t;
    r.s1n += dl * lg * t;
    if (!std::isfinite(r.s2)) throw numeric_error("laplacian thermodynamics: inner sum overflow");
    if (dl > peak && dl * dl * t < 1e-16 * r.s2) {
      r.l_max = l;
      return r;
    }
    if (l > 100000000) throw numeric_error("laplacian thermodynamics: inner sum did not converge");
  }
}

inline double x_of(double mu, double n) { return inner_sums(mu, n).s / std::expm1(mu); }

}  // namespace detail

/// Root of X(mu) = 1; the generating function converges only above it.
inline double mu_threshold(double n) {
  if (!(n >= 0.0)) throw input_error("mu_threshold: need n >= 0");
  auto g = [n](double mu) { return detail::x_of(mu, n) - 1.0; };
  double hi = 1.0;
  while (g(hi) >= 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw numeric_error("mu_threshold: no upper bracket");
  }
  double lo = hi / 2.0;
  while (g(lo) < 0.0) {
    lo /= 2.0;
    if (lo < 1e-8) throw numeric_error("mu_threshold: no lower bracket");
  }
  const auto r = boost::math::tools::bisect(g, lo, hi, [](double a, double b) { return std::abs(b - a) < 1e-13; });
  return (r.first + r.second) / 2.0;
}

inline GeneratingFunction generating_function(double n, double mu) {
  if (!(n >= 0.0)) throw input_error("generating_function: need n >= 0");
  const auto in = detail::inner_sums(mu, n);
  const double em1 = std::expm1(mu), e = std::exp(mu);
  const double w = 1.0 / em1, w1 = -e / (em1 * em1), w2 = e * (e + 1.0) / (em1 * em1 * em1);
  const double x = w * in.s;
  if (!(x < 1.0)) throw domain_error("generating_function: mu must exceed mu_th(n)", mu_threshold(n));
  const double x_mu = w1 * in.s - w * in.s1;
  const double x_mumu = w2 * in.s - 2.0 * w1 * in.s1 + w * in.s2;
  const double x_n = w * in.sn;
  const double x_mun = w1 * in.sn - w * in.s1n;
  const double q = -std::expm1(-mu);  // 1 - e^{-mu}
  const double d = 1.0 - x;
  GeneratingFunction gf;
  gf.value = 1.0 / q - x_mu / d;
  gf.d_mu = -std::exp(-mu) / (q * q) - (x_mumu * d + x_mu * x_mu) / (d * d);
  gf.d_n = -(x_mun * d + x_mu * x_n) / (d * d);
  gf.l_max = in.l_max;
  return gf;
}

/// Central differences of G, for cross-checking the analytic derivatives.
inline GeneratingFunction generating_function_fd(double n, double mu, double h = 1e-6) {
  GeneratingFunction gf = generating_function(n, mu);
  gf.d_mu = (generating_function(n, mu + h).value - generating_function(n, mu - h).value) / (2.0 * h);
  gf.d_n = (generating_function(n + h, mu).value - generating_function(n - h, mu).value) / (2.0 * h);
  return gf;
}

/// Default evaluation point for the infinite chain.
inline double thermo_mu(double n) { return mu_threshold(n) * (1.0 + 1e-6); }

inline ThermoPoint thermo_point(double n, double mu) {
  if (!(n > 0.0)) throw input_error("thermo_point: need n > 0");
  const auto gf = generating_function(n, mu);
  ThermoPoint p{n, mu};
  p.mean_L = -gf.d_mu / gf.value;
  const double energy = -gf.d_n / gf.value;
  p.g = -std::log(gf.value) / (n * p.mean_L);
  p.f = p.g - mu / n;
  p.e = energy / p.mean_L;
  p.s = n * (p.e - p.f);
  return p;
}

inline std::vector<ThermoPoint> thermo_curve(std::span<const double> n_grid) {
  std::vector<ThermoPoint> out(n_grid.size());
  parallel_for(n_grid.size(), [&](std::size_t i) { out[i] = thermo_point(n_grid[i], thermo_mu(n_grid[i])); });
  return out;
}

/// <m_l^+> = -(1/G) d/dmu [T_l / D], T_l = e^{-mu (l+1)} (l+1)^n, D = 1 - e^{-mu} (1 + S).
inline ClusterStats cluster_distribution(double n, double mu) {
  const auto gf = generating_function(n, mu);
  const auto in = detail::inner_sums(mu, n);
  const double em = std::exp(-mu);
  const double d = 1.0 - em * (1.0 + in.s);
  const double d_mu = em * (1.0 + in.s + in.s1);
  ClusterStats cs{n, mu, {}, in.l_max};
  for (std::size_t l = 1; l <= in.l_max; ++l) {
    const double lp = static_cast<double>(l) + 1.0;
    const double t = std::exp(-mu * lp + n * std::log(lp));
    cs.mean_m_plus[static_cast<int>(l)] = t * (lp * d + d_mu) / (gf.value * d * d);
  }
  return cs;
}

inline int dominant_cluster(const ClusterStats& cs) {
  return std::max_element(cs.mean_m_plus.begin(), cs.mean_m_plus.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->first;
}

// ---------------------------------------------------------------------------
// Large-n ground states: kept sets maximizing prod (l + 1) over kept runs.

struct GroundStateCensus {
  int L = 0;
  std::size_t ground_states = 0;
  std::size_t clusters = 0;  // connected under single-site flips
  double energy = 0.0;       // E = -sum ln(l + 1)
  double s = 0.0;            // ln(ground_states) / L
  double complexity = 0.0;   // ln(clusters) / L
  std::vector<std::uint64_t> masks;
};

/// E_I = -sum over kept runs of ln(l + 1); +inf for the full ring.
inline double ring_energy(std::uint64_t mask, int l) {
  const std::uint64_t full = (std::uint64_t{1} << l) - 1;
  if (mask == full) return kInf;
  if (mask == 0) return 0.0;
  int start = 0;
  while ((mask >> start) & 1U) ++start;  // a removed site exists, begin just after it
  double e = 0.0;
  int run = 0;
  for (int k = 1; k <= l; ++k) {
    const int i = (start + k) % l;
    if ((mask >> i) & 1U) {
      ++run;
    } else if (run > 0) {
      e -= std::log(run + 1.0);
      run = 0;
    }
  }
  return e;
}

inline GroundStateCensus ground_state_census(int l) {
  if (l < 3) throw input_error("ground_state_census: need L >= 3");
  detail::check_capacity(l, kHsMaxDim, "ground_state_census");
  const std::uint64_t total = std::uint64_t{1} << l;
  double best = kInf;
  for (std::uint64_t m = 0; m < total; ++m) best = std::min(best, ring_energy(m, l));
  GroundStateCensus c;
  c.L = l;
  c.energy = best;
  for (std::uint64_t m = 0; m < total; ++m)
    if (std::abs(ring_energy(m, l) - best) <= 1e-9) c.masks.push_back(m);
  c.ground_states = c.masks.size();
  std::unordered_map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < c.masks.size(); ++i) pos[c.masks[i]] = i;
  std::vector<std::size_t> parent(c.masks.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < c.masks.size(); ++i)
    for (int b = 0; b < l; ++b)
      if (auto it = pos.find(c.masks[i] ^ (std::uint64_t{1} << b)); it != pos.end())
        parent[find(i)] = find(it->second);
  for (std::size_t i = 0; i < c.masks.size(); ++i) c.clusters += find(i) == i ? 1 : 0;
  c.s = std::log(static_cast<double>(c.ground_states)) / l;
  c.complexity = std::log(static_cast<double>(c.clusters)) / l;
  return c;
}

/// X = sum_{i=1}^{floor(L/10)} [L 1(5i < L/2) + (L/2) 1(5i = L/2)], for L = 1 mod 3.
inline int decade_x(int l) {
  int x = 0;
  for (int i = 1; i <= l / 10; ++i) {
    if (10 * i < l) x += l;
    else if (10 * i == l) x += l / 2;
  }
  return x;
}

/// X fitted to exhaustive enumeration: with k = (L - 4) / 3 dimers beyond the two
/// trimers, X = L floor((k - 1) / 2) + (L / 2) 1(k even).
inline int derived_x(int l) {
  if (l % 3 != 1 || l < 7) throw input_error("derived_x: need L = 1 mod 3 and L >= 7");
  const int k = (l - 4) / 3;
  return l * ((k - 1) / 2) + (k % 2 == 0 ? l / 2 : 0);
}

struct CensusPrediction {
  std::size_t ground_states = 0;
  std::size_t clusters = 0;
};

/// The mod-3 case formulas: 3 / 3, L / L, 2L + X / L + X.
inline CensusPrediction predicted_census(int l, int x) {
  switch (l % 3) {
    case 0: return {3, 3};
    case 2: return {static_cast<std::size_t>(l), static_cast<std::size_t>(l)};
    default: return {static_cast<std::size_t>(2 * l + x), static_cast<std::size_t>(l + x)};
  }
}

/// Mean field in the thermodynamic limit: D1^3 (D1 + 4) = 1.
struct LaplacianMfBenchmark {
  double root_positive = 0.0;
  double root_negative = 0.0;
  double f_mf = 0.0;
  double beta_mf = 0.0;
};

inline LaplacianMfBenchmark laplacian_mf_benchmark() {
  auto p = [](double x) { return x * x * x * (x + 4.0) - 1.0; };
  auto solve = [&](double a, double b) {
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(p, a, b, boost::math::tools::eps_tolerance<double>(53), it);
    return (r.first + r.second) / 2.0;
  };
  LaplacianMfBenchmark out;
  out.root_positive = solve(0.0, 1.0);
  out.root_negative = solve(-5.0, -4.0);
  const double d = out.root_positive;
  out.f_mf = -std::log((d + 2.0 + std::sqrt(d * (4.0 + d))) / 2.0) + d * d / 2.0;
  out.beta_mf = std::log(d * d);
  return out;
}

}  // namespace sppm
