// Acceptance run: one PASS/FAIL line per criterion, detail lines indented below.
// Exit status is nonzero only when a check fails that is not a documented gap.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sppm/sppm.hpp"

using namespace sppm;

namespace {

struct Check {
  std::string what;
  bool ok;
  bool known_gap = false;  // failure is documented and expected
};

struct Criterion {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  void check(std::string what, bool ok, bool known_gap = false) { checks.push_back({std::move(what), ok, known_gap}); }
  void note(std::string s) { notes.push_back(std::move(s)); }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_pairwise(const std::vector<LogSigned>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) worst = std::max(worst, relative_difference(v[i], v[j]));
  return worst;
}

Criterion oracle_equivalence() {
  Criterion c{1, "exact, HS and dual routes agree on the corpus", {}, {}};
  const unsigned saved = threads();
  set_threads(1);
  const auto t0 = std::chrono::steady_clock::now();
  double worst_random = 0.0, worst_lap = 0.0, worst_ising = 0.0;
  auto routes = [](const SquareMatrix& a) {
    std::vector<LogSigned> v{sppm_exact(a, 2).value, sppm_hs_discrete(a).value};
    for (double u : {0.1, 0.5, 0.9}) v.push_back(sppm_dual_exact(build_dual(a, u)).value);
    return v;
  };
  for (int k = 0; k < 50; ++k) {
    const int dim = 1 + k % 10;
    const SquareMatrix a = k % 2 ? SquareMatrix(oracle::random_complex(dim, 10'000 + k))
                                 : SquareMatrix(oracle::random_real(dim, 10'000 + k));
    worst_random = std::max(worst_random, max_pairwise(routes(a)));
  }
  for (int l = 3; l <= 14; ++l) {
    auto v = routes(laplacian_matrix(l));
    v.push_back(z_cluster_formula(l, 2.0));
    v.push_back(z_transfer(l, 2.0));
    worst_lap = std::max(worst_lap, max_pairwise(v));
  }
  for (int l = 2; l <= 12; l += 2)
    for (double h : {0.0, 0.5, 1.0, 1.5, 3.0}) worst_ising = std::max(worst_ising, max_pairwise(routes(ising_F(l, h))));
  const double elapsed = seconds_since(t0);
  set_threads(saved);
  c.check(fmt("50 random matrices, dim 1..10: max pairwise difference %.2e <= 1e-8", worst_random), worst_random <= 1e-8);
  c.check(fmt("chain Laplacians L = 3..14 incl. cluster and transfer routes: %.2e <= 1e-8", worst_lap), worst_lap <= 1e-8);
  c.check(fmt("Ising F, L = 2..12, h in {0, 0.5, 1, 1.5, 3}: %.2e <= 1e-8", worst_ising), worst_ising <= 1e-8);
  c.check(fmt("single-threaded runtime %.1f s < 300 s", elapsed), elapsed < 300.0);
  return c;
}

Criterion laplacian_mf() {
  Criterion c{2, "Laplacian mean-field constants", {}, {}};
  const auto b = laplacian_mf_benchmark();
  c.check(fmt("positive root %.7f = 0.601232 +- 1e-5", b.root_positive), std::abs(b.root_positive - 0.601232) <= 1e-5);
  c.check(fmt("negative root %.6f = -4.01545 +- 1e-4", b.root_negative), std::abs(b.root_negative + 4.01545) <= 1e-4);
  c.check(fmt("f_MF %.6f = -0.576 +- 0.001", b.f_mf), std::abs(b.f_mf + 0.576) <= 0.001);
  c.check(fmt("beta_MF %.6f = -1.01755 +- 0.0005", b.beta_mf), std::abs(b.beta_mf + 1.01755) <= 0.0005);
  const auto sol = mf_thermodynamic([](double q) { return cplx(2.0 - 2.0 * std::cos(q)); }, {0.5, 0.0, 0.5});
  c.check(fmt("infinite-chain iteration lands on the same root: D1 = %.7f", sol.state.delta1),
          sol.converged && std::abs(sol.state.delta1 - b.root_positive) <= 1e-6);
  c.note(fmt("iteration per-site ln M_MF = %.6f, -2 f_MF = %.6f", sol.sppm_mf.log_mag(), -2.0 * b.f_mf));
  return c;
}

Criterion laplacian_thermo() {
  Criterion c{3, "Laplacian exact thermodynamics", {}, {}};
  const auto p = thermo_point(2.0, thermo_mu(2.0));
  c.check(fmt("f(n = 2) = %.6f = -0.63 +- 0.01", p.f), std::abs(p.f + 0.63) <= 0.01);
  for (double n : {8.0, 9.0, 10.0, 12.0, 16.0}) {
    const auto cs = cluster_distribution(n, thermo_mu(n));
    const int d = dominant_cluster(cs);
    c.check(fmt("n = %g: dominant cluster size %d (<m1> = %.6g, <m2> = %.6g), want 2", n, d, cs.mean_m_plus.at(1),
                cs.mean_m_plus.at(2)),
            d == 2, n == 8.0);
  }
  for (int l = 8; l <= 16; ++l) {
    const auto census = ground_state_census(l);
    const auto pred = predicted_census(l, l % 3 == 1 ? decade_x(l) : 0);
    const bool ok = pred.ground_states == census.ground_states && pred.clusters == census.clusters;
    c.check(fmt("L = %d: enumeration %zu states / %zu clusters, closed form %zu / %zu", l, census.ground_states,
                census.clusters, pred.ground_states, pred.clusters),
            ok, l == 16);
    if (l % 3 == 1) {
      const auto fixed = predicted_census(l, derived_x(l));
      c.note(fmt("L = %d: refitted X = %d gives %zu / %zu", l, derived_x(l), fixed.ground_states, fixed.clusters));
    }
  }
  return c;
}

Criterion ising_critical() {
  Criterion c{4, "Ising critical-field rate and kink-corrected slope", {}, {}};
  const double v = -2.0 * efp_zeta(1.0);
  c.check(fmt("-2 zeta(1) = %.8f = 0.22005 +- 1e-4", v), std::abs(v - 0.22005) <= 1e-4);
  std::vector<IsingPoint> pts;
  for (int l = 10; l <= 74; l += 2) pts.push_back(kink_correction(l, 1.0, 2));
  const auto fit = fit_alpha_beta(pts);
  c.check(fmt("alpha2(h = 1) over L = 10..74 = %.6f = 0.2156 +- 0.002", fit.alpha2), std::abs(fit.alpha2 - 0.2156) <= 0.002);
  c.note(fmt("fit intercept %.5f, slope std. error %.2e", fit.beta2, fit.alpha2_se));
  c.note("external reference alpha2(1) = 0.2138 (quoted for comparison, not computed)");
  return c;
}

Criterion ising_hstar() {
  Criterion c{5, "Ising ordering-field scaling", {}, {}};
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> ls{40, 60, 80, 100, 150, 200, 300, 400};
  const auto s = hstar_scan(ls);
  c.check(fmt("zeta2 = %.4f +- %.4f, want 0.577 +- 0.05", s.zeta2, s.zeta2_se), std::abs(s.zeta2 - 0.577) <= 0.05, true);
  std::string row;
  for (std::size_t i = 0; i < ls.size(); ++i) row += fmt(" %d:%.6f", ls[i], s.hstar[i]);
  c.note("h*(L):" + row);
  c.note(fmt("prefactor zeta1 = %.4f", s.zeta1));
  const std::vector<double> hs{0.9, 0.95, 0.98, 0.99, 0.995, 0.998};
  const auto d = delta4_scaling(hs);
  c.check(fmt("D4 exponent near h = 1: %.4f = 2.0 +- 0.2", d.exponent), std::abs(d.exponent - 2.0) <= 0.2);
  const double elapsed = seconds_since(t0);
  c.check(fmt("runtime %.1f s < 600 s", elapsed), elapsed < 600.0);
  return c;
}

Criterion dual_benchmark() {
  Criterion c{6, "dual mean field at h = 0", {}, {}};
  std::vector<double> us{0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<IsingPoint> best;
  bool all_stable = true;
  for (int l = 10; l <= 30; l += 4) {
    const auto scan = renyi2_dual_scan(l, 0.0, us);
    if (!scan.best) {
      all_stable = false;
      continue;
    }
    best.push_back(scan.points[*scan.best]);
    all_stable = all_stable && best.back().stability_ratio && *best.back().stability_ratio > 0.99;
  }
  c.check("a stable point (ratio > 0.99) exists at every L = 10..30 step 4", all_stable && best.size() == 6);
  if (best.size() >= 3) {
    const auto fit = fit_alpha_beta(best);
    const double dev = std::abs(fit.alpha2 / std::numbers::ln2 - 1.0);
    c.check(fmt("alpha2 = %.6f, %.3f%% from ln 2 (<= 0.5%%)", fit.alpha2, 100.0 * dev), dev <= 0.005);
    std::string row;
    for (const auto& p : best) row += fmt(" %d:u=%.2f", p.L, p.u.value_or(0.0));
    c.note("selected u:" + row);
  }
  const double exact = 29.0 * std::numbers::ln2;
  const double mf_err = std::abs(renyi2_mf(30, 0.0).R2 - exact) / exact;
  const auto scan30 = renyi2_dual_scan(30, 0.0, us);
  const double dual_err = scan30.best ? std::abs(scan30.points[*scan30.best].R2 - exact) / exact : 1.0;
  c.check(fmt("L = 30 real-space MF error %.2f%% = 19 +- 3%%", 100.0 * mf_err), std::abs(100.0 * mf_err - 19.0) <= 3.0);
  c.check(fmt("L = 30 best-u dual error %.2f%% = 4 +- 3%%", 100.0 * dual_err), std::abs(100.0 * dual_err - 4.0) <= 3.0);
  return c;
}

Criterion hubbard_limits() {
  Criterion c{7, "Hubbard single-site and atomic limits", {}, {}};
  const HubbardSpec base{1, 4, 0.0, 1.0, 0.5, 2.0};
  std::vector<int> ns(9);
  std::iota(ns.begin(), ns.end(), 4);
  const auto seq = hubbard_trotter_sequence(base, ns);
  std::string row;
  for (std::size_t i = 0; i < ns.size(); ++i) row += fmt(" %d:%.5f", ns[i], seq.rel_error[i]);
  c.note("relative error by N:" + row);
  c.check("single-site error decreases monotonically over N = 4..12", seq.monotone);
  c.check(fmt("1/N extrapolation %.5f vs %.5f: %.3f%% <= 1%%", seq.z_extrapolated, seq.z_limit,
              100.0 * seq.extrapolated_error),
          seq.extrapolated_error <= 0.01);
  const auto atomic = hubbard_atomic_check({2, 6, 0.0, 1.0, 0.5, 2.0});
  c.check(fmt("L = 2, N = 6, t = 0 factorizes; error %.4f within envelope %.4f", atomic.rel_error, atomic.envelope),
          atomic.factorizes && atomic.within_envelope);
  return c;
}

Criterion properties() {
  Criterion c{8, "invariances and bounds", {}, {}};
  std::vector<Eigen::MatrixXcd> mats;
  for (int k = 0; k < 12; ++k)
    mats.push_back(k % 2 ? oracle::random_complex(3 + k % 6, 20'000 + k)
                         : Eigen::MatrixXcd(oracle::random_real(3 + k % 6, 20'000 + k).cast<cplx>()));
  auto M = [](const Eigen::MatrixXcd& a, int n) { return sppm_exact(SquareMatrix(a), n).value; };
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mag(0.3, 3.0), arg(-3.0, 3.0);
  double w_t = 0, w_s = 0, w_d = 0, w_p = 0, w_m1 = 0;
  for (const auto& a : mats) {
    const auto dim = a.rows();
    Eigen::VectorXcd d(dim);
    for (Eigen::Index i = 0; i < dim; ++i) d(i) = std::polar(mag(rng), arg(rng));
    std::vector<int> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) p(i, perm[i]) = 1.0;
    for (int n : {1, 2, 3}) {
      w_t = std::max(w_t, relative_difference(M(a, n), M(a.transpose(), n)));
      w_d = std::max(w_d, relative_difference(M(a, n), M(d.asDiagonal() * a * d.cwiseInverse().asDiagonal(), n)));
      w_p = std::max(w_p, relative_difference(M(a, n), M(p * a * p.transpose(), n)));
    }
    w_s = std::max(w_s, relative_difference(M(a, 2), M(-a, 2)));
    w_m1 = std::max(w_m1, oracle::rel(M(a, 1).value(), oracle::lu_det(a + Eigen::MatrixXcd::Identity(dim, dim))));
  }
  c.check(fmt("transpose %.1e, sign %.1e, diagonal %.1e, permutation %.1e (<= 1e-10)", w_t, w_s, w_d, w_p),
          std::max({w_t, w_s, w_p}) <= 1e-10 && w_d <= 1e-10);
  c.check(fmt("M1 = det(I + A): %.1e <= 1e-10", w_m1), w_m1 <= 1e-10);

  double w_sum = 0, w_pf = 0;
  for (int dim = 2; dim <= 12; dim += 2) {
    const SquareMatrix f(oracle::random_antisymmetric(dim, 30'000 + dim, false));
    cplx total = 0.0;
    for (const auto& pr : formation_probabilities(f)) total += pr.probability;
    w_sum = std::max(w_sum, std::abs(total - 1.0));
    const SquareMatrix g(oracle::random_antisymmetric(dim, 31'000 + dim, true));
    w_pf = std::max(w_pf, relative_difference(pfaffian(g).pow(2), det_lu(g)));
  }
  c.check(fmt("sum of formation probabilities off by %.1e <= 1e-9", w_sum), w_sum <= 1e-9);
  c.check(fmt("Pf^2 = det: %.1e <= 1e-9", w_pf), w_pf <= 1e-9);

  double min_gap = kInf;
  std::vector<SquareMatrix> bound{laplacian_matrix(8), ising_F(12, 0.0), ising_F(12, 0.5), ising_F(12, 1.0), ising_F(12, 1.5)};
  for (int dim = 4; dim <= 8; ++dim) bound.emplace_back(oracle::random_real(dim, 40'000 + dim, 0.5));
  const auto grid = default_init_grid();
  for (const auto& a : bound)
    for (const auto& sol : mf_multistart(grid, [&](const MFState& s) { return mf_direct(a, s); }).solutions)
      min_gap = std::min(min_gap, variational_gap(a, sol));
  c.check(fmt("ln M_exact - ln M_MF >= 0 at every converged solution (min %.3e)", min_gap), min_gap >= -1e-10);

  double w_form = 0;
  std::uniform_real_distribution<double> st(-2.0, 2.0);
  for (int k = 0; k < 10; ++k) {
    const SquareMatrix a(oracle::random_real(6, 50'000 + k));
    const MFState s{st(rng), st(rng), st(rng)};
    w_form = std::max(w_form, relative_difference(mf_value(a, s), mf_value_pfaffian(a, s)));
  }
  c.check(fmt("determinant and Pfaffian MF forms: %.1e <= 1e-9", w_form), w_form <= 1e-9);

  const unsigned saved = threads();
  const SquareMatrix big(oracle::random_complex(16, 9));
  set_threads(1);
  const auto serial = sppm_exact(big, 2).value;
  const auto est1 = sppm_hs_random(big, 5000, 3);
  set_threads(4);
  const auto par = sppm_exact(big, 2).value;
  const auto est4 = sppm_hs_random(big, 5000, 3);
  set_threads(saved);
  const double w_det = relative_difference(serial, par);
  c.check(fmt("serial vs parallel: enumeration %.1e, seeded estimator identical", w_det),
          w_det <= 1e-12 && est1.mean == est4.mean && est1.std_error == est4.std_error);

  double w_h0 = 0;
  for (int l = 2; l <= 12; l += 2)
    w_h0 = std::max(w_h0, std::abs(renyi2_exact(l, 0.0).R2 - (l - 1) * std::numbers::ln2) / ((l - 1) * std::numbers::ln2));
  c.check(fmt("h = 0 exact R2 = (L - 1) ln 2 for L = 2..12: %.1e", w_h0), w_h0 <= 1e-10);
  c.note("so the intercept at h = 0 is -ln 2; it carries a minus sign");
  return c;
}

}  // namespace

int main() {
  const std::vector<std::function<Criterion()>> all{oracle_equivalence, laplacian_mf, laplacian_thermo, ising_critical,
                                                    ising_hstar, dual_benchmark, hubbard_limits, properties};
  bool unexpected = false;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& run = all[i];
    const auto t0 = std::chrono::steady_clock::now();
    Criterion c{static_cast<int>(i + 1), "criterion", {}, {}};
    try {
      c = run();
    } catch (const std::exception& e) {
      c.check(std::string("threw: ") + e.what(), false);
      unexpected = true;
    }
    const bool pass = std::all_of(c.checks.begin(), c.checks.end(), [](const Check& k) { return k.ok; });
    std::cout << (pass ? "PASS" : "FAIL") << "  " << c.id << "  " << c.title << fmt("  (%.1f s)", seconds_since(t0)) << '\n';
    for (const auto& k : c.checks) {
      std::cout << "      " << (k.ok ? "ok   " : k.known_gap ? "gap  " : "FAIL ") << k.what << '\n';
      if (!k.ok && !k.known_gap) unexpected = true;
    }
    for (const auto& n : c.notes) std::cout << "      -    " << n << '\n';
    std::cout.flush();
  }
  return unexpected ? 1 : 0;
}
