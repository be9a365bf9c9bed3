#pragma once

// Command-line front end. run_cli parses argv, runs one computation and writes a
// RunRecord as JSON (default) or CSV. Exit codes: 0 ok, 1 input, 2 numeric, 3 capacity.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_record.hpp"
#include "sppm/sppm.hpp"

namespace sppm::cli {

using nlohmann::json;

namespace detail {

/// 15 significant digits: drops last-bit noise from log-space accumulation.
inline double num(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return std::strtod(buf, nullptr);
}

inline json num_vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline json to_json(const LogSigned& v) {
  json j{{"log", num(v.log_mag())}, {"phase", num(v.phase())}};
  if (v.log_mag() > 700.0) {
    j["value"] = nullptr;
  } else if (v.is_real()) {
    j["value"] = num(v.value().real());
  } else {
    const cplx z = v.value();
    j["value"] = json::array({num(z.real()), num(z.imag())});
  }
  return j;
}

inline json to_json(cplx z) { return json::array({num(z.real()), num(z.imag())}); }

inline json to_json(const MFState& s) {
  return {{"delta1", num(s.delta1)}, {"delta2", num(s.delta2)}, {"delta3", num(s.delta3)}, {"delta4", num(s.delta4())}};
}

inline json to_json(const MFSolution& s) {
  json j = to_json(s.state);
  j["converged"] = s.converged;
  j["residual"] = num(s.residual);
  j["iterations"] = s.iterations;
  j["log_mf"] = num(s.sppm_mf.log_mag());
  return j;
}

inline json to_json(const IsingPoint& p) {
  json j{{"L", p.L}, {"h", num(p.h)}, {"R2", num(p.R2)}, {"method", p.method}};
  if (p.deltas) j.update(to_json(*p.deltas));
  if (p.u) j["u"] = num(*p.u);
  if (p.stability_ratio) {
    j["stability_ratio"] = num(*p.stability_ratio);
    j["stable"] = is_stable(*p.stability_ratio);
  }
  return j;
}

inline json to_json(const ThermoPoint& p) {
  return {{"n", num(p.n)}, {"mu", num(p.mu)}, {"g", num(p.g)}, {"f", num(p.f)},
          {"e", num(p.e)}, {"s", num(p.s)}, {"mean_L", num(p.mean_L)}};
}

/// "a:b:step" (inclusive, tolerant to rounding) or "x,y,z".
inline std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  auto real = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw input_error(flag + ": cannot parse '" + s + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw input_error(flag + ": range must be a:b:step");
    const double a = real(parts[0]), b = real(parts[1]), step = real(parts[2]);
    if (!(step > 0.0) || b < a) throw input_error(flag + ": need step > 0 and b >= a");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 100000) throw input_error(flag + ": more than 100000 grid points");
    for (std::size_t k = 0; k < count; ++k) out.push_back(a + static_cast<double>(k) * step);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(real(p));
  }
  if (out.empty()) throw input_error(flag + ": empty grid");
  return out;
}

inline std::vector<int> parse_int_grid(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_grid(text, flag)) {
    if (v != std::round(v)) throw input_error(flag + ": expected integers, got " + std::to_string(v));
    out.push_back(static_cast<int>(std::lround(v)));
  }
  return out;
}

inline Branch parse_branch(const std::string& s) {
  if (s == "negative" || s == "neg" || s == "-") return Branch::negative;
  if (s == "positive" || s == "pos" || s == "+") return Branch::positive;
  throw input_error("--branch must be negative or positive, got '" + s + "'");
}

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

}  // namespace detail

/// All flags. Unset optionals fall back to per-command defaults.
struct Flags {
  std::optional<std::string> matrix, gen;
  std::optional<double> n, u, h, mu, beta, U, t, tol, damping;
  std::optional<int> L, N, order, flips;
  std::optional<std::string> us, hs, ns, Ls, Ns, init, method, branch;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out = "json";
  bool timing = false;
  bool unpin_delta2 = false;
};

class Runner {
 public:
  explicit Runner(const Flags& f) : f_(f) {}

  // ----- helpers
  SquareMatrix matrix() const {
    if (f_.matrix && f_.gen) throw input_error("give either --matrix or --gen, not both");
    if (f_.matrix) return load_matrix(*f_.matrix);
    if (!f_.gen) throw input_error("this command needs --matrix <path> or --gen laplacian:L | ising-F:L,h");
    const std::string& g = *f_.gen;
    const auto colon = g.find(':');
    if (colon == std::string::npos) throw input_error("--gen: expected kind:args, got '" + g + "'");
    const std::string kind = g.substr(0, colon), args = g.substr(colon + 1);
    if (kind == "laplacian") {
      const auto v = detail::parse_int_grid(args, "--gen laplacian");
      if (v.size() != 1) throw input_error("--gen laplacian:L takes one integer");
      return laplacian_matrix(v[0]);
    }
    if (kind == "ising-F") {
      const auto v = detail::parse_grid(args, "--gen ising-F");
      if (v.size() != 2 || v[0] != std::round(v[0])) throw input_error("--gen ising-F:L,h takes an integer L and a real h");
      return ising_F(static_cast<int>(v[0]), v[1]);
    }
    throw input_error("--gen: unknown generator '" + kind + "', expected laplacian or ising-F");
  }

  MFOptions mf_options() const {
    MFOptions o;
    if (f_.damping) o.damping = *f_.damping;
    if (f_.tol) o.tol = *f_.tol;
    o.pin_delta2 = !f_.unpin_delta2;
    return o;
  }

  MFState init_state() const {
    if (!f_.init) return {0.5, 0.0, 0.5};
    const auto v = detail::parse_grid(*f_.init, "--init");
    if (v.size() != 3) throw input_error("--init takes d1,d2,d3");
    return {v[0], v[1], v[2]};
  }

  int n_int(int fallback) const {
    const double n = f_.n.value_or(fallback);
    if (n != std::round(n) || n < 0) throw input_error("--n must be a nonnegative integer here, got " + std::to_string(n));
    return static_cast<int>(n);
  }

  template <class T>
  T need(const std::optional<T>& v, const char* flag) const {
    if (!v) throw input_error(std::string("this command needs ") + flag);
    return *v;
  }

  Branch branch(Branch fallback) const { return f_.branch ? detail::parse_branch(*f_.branch) : fallback; }

  // ----- sppm
  json sppm_exact_cmd() const {
    const auto m = matrix();
    const auto r = sppm_exact(m, n_int(2));
    return {{"dim", r.dim}, {"n", r.n}, {"terms", r.terms}, {"sppm", detail::to_json(r.value)}};
  }

  json sppm_hs_cmd() const {
    const auto m = matrix();
    const auto r = sppm_hs_discrete(m);
    return {{"dim", r.dim}, {"n", 2}, {"terms", r.terms}, {"sppm", detail::to_json(r.value)}};
  }

  json sppm_random_cmd(std::uint64_t seed) const {
    const auto m = matrix();
    const auto r = sppm_hs_random(m, f_.samples.value_or(10000), seed);
    return {{"dim", m.dim()}, {"samples", r.samples}, {"mean", detail::to_json(r.mean)},
            {"std_error", detail::num(r.std_error)}};
  }

  // ----- dual
  json dual_check_cmd() const {
    const auto m = matrix();
    const auto t = build_dual(m, f_.u.value_or(0.5), branch(Branch::negative));
    const auto dual = sppm_dual_exact(t).value;
    const auto direct = sppm_exact(m, 2).value;
    return {{"u", detail::num(t.u)}, {"m", detail::num(t.m)}, {"shift", detail::num(t.shift)},
            {"lambda", detail::num(t.lambda())}, {"direct", detail::to_json(direct)},
            {"dual", detail::to_json(dual)}, {"relative_difference", detail::num(relative_difference(direct, dual))}};
  }

  json dual_expand_cmd() const {
    const auto m = matrix();
    const auto t = build_dual(m, f_.u.value_or(0.1), branch(Branch::negative));
    const int order = f_.order.value_or(2);
    const auto approx = weak_coupling_expansion(t, order);
    const auto exact = sppm_exact(m, 2).value;
    return {{"u", detail::num(t.u)}, {"order", order}, {"expansion", detail::to_json(approx)},
            {"exact", detail::to_json(exact)}, {"relative_difference", detail::num(relative_difference(exact, approx))}};
  }

  json dual_scan_cmd() const {
    const auto m = matrix();
    const auto us = detail::parse_grid(f_.us.value_or("0.1:0.9:0.1"), "--us");
    const auto grid = default_init_grid();
    const auto opt = mf_options();
    const Branch br = branch(Branch::negative);
    json rows = json::array();
    for (double u : us) {
      const auto t = build_dual(m, u, br);
      const auto ms = mf_multistart(grid, [&](const MFState& s) { return mf_dual(t, s, opt); });
      const auto& best = ms.solutions[ms.best];
      json row = detail::to_json(best);
      row["u"] = detail::num(u);
      const double ratio = stability_ratio(best.state, free_energy_density(best, m.dim()), u);
      row["stability_ratio"] = detail::num(ratio);
      row["stable"] = is_stable(ratio);
      rows.push_back(row);
    }
    return {{"rows", rows}};
  }

  // ----- mf
  json mf_solve_cmd() const {
    const auto m = matrix();
    const auto sol = mf_direct(m, init_state(), mf_options());
    json j = detail::to_json(sol);
    j["log_mf_pfaffian"] = detail::num(mf_value_pfaffian(m, sol.state).log_mag());
    if (m.dim() <= kHsMaxDim) j["variational_gap"] = detail::num(variational_gap(m, sol));
    return j;
  }

  json mf_multistart_cmd() const {
    const auto m = matrix();
    const auto grid = default_init_grid();
    const auto opt = mf_options();
    const auto ms = mf_multistart(grid, [&](const MFState& s) { return mf_direct(m, s, opt); });
    json rows = json::array();
    for (const auto& s : ms.solutions) rows.push_back(detail::to_json(s));
    return {{"rows", rows}, {"best", ms.best}};
  }

  json mf_stability_cmd() const {
    const auto m = matrix();
    const auto grid = default_init_grid();
    const auto opt = mf_options();
    MultistartResult ms;
    std::optional<double> u = f_.u;
    if (u) {
      const auto t = build_dual(m, *u, branch(Branch::negative));
      ms = mf_multistart(grid, [&](const MFState& s) { return mf_dual(t, s, opt); });
    } else {
      ms = mf_multistart(grid, [&](const MFState& s) { return mf_direct(m, s, opt); });
    }
    const auto& best = ms.solutions[ms.best];
    const double f = free_energy_density(best, m.dim());
    const double ratio = stability_ratio(best.state, f, u);
    json j = detail::to_json(best);
    j["f_mf"] = detail::num(f);
    j["stability_ratio"] = detail::num(ratio);
    j["stable"] = is_stable(ratio);
    if (u) j["u"] = detail::num(*u);
    return j;
  }

  // ----- laplacian
  json laplacian_exact_cmd() const {
    const int l = need(f_.L, "--L");
    const double n = f_.n.value_or(2.0);
    json j{{"L", l}, {"n", detail::num(n)}, {"cluster", detail::to_json(z_cluster_formula(l, n))},
           {"transfer", detail::to_json(z_transfer(l, n))}};
    if (n >= 1.0 && n == std::round(n) && l <= kExactMaxDim) j["enumeration"] = detail::to_json(z_exact_enumeration(l, static_cast<int>(n)));
    return j;
  }

  json laplacian_thermo_cmd() const {
    std::vector<double> ns = f_.ns ? detail::parse_grid(*f_.ns, "--ns") : std::vector<double>{f_.n.value_or(2.0)};
    json rows = json::array();
    if (f_.mu) {
      for (double n : ns) rows.push_back(detail::to_json(thermo_point(n, *f_.mu)));
    } else {
      for (const auto& p : thermo_curve(ns)) rows.push_back(detail::to_json(p));
    }
    return {{"rows", rows}};
  }

  json laplacian_clusters_cmd() const {
    const double n = f_.n.value_or(2.0);
    const auto cs = cluster_distribution(n, f_.mu.value_or(thermo_mu(n)));
    json rows = json::array();
    for (const auto& [l, m] : cs.mean_m_plus) rows.push_back({{"l", l}, {"mean_m_plus", detail::num(m)}});
    return {{"n", detail::num(n)}, {"mu", detail::num(cs.mu)}, {"dominant", dominant_cluster(cs)}, {"rows", rows}};
  }

  json laplacian_ground_cmd() const {
    const auto ls = f_.Ls ? detail::parse_int_grid(*f_.Ls, "--Ls") : std::vector<int>{need(f_.L, "--L or --Ls")};
    json rows = json::array();
    for (int l : ls) {
      const auto c = ground_state_census(l);
      json row{{"L", l}, {"ground_states", c.ground_states}, {"clusters", c.clusters}, {"energy", detail::num(c.energy)},
               {"s", detail::num(c.s)}, {"complexity", detail::num(c.complexity)}};
      if (l % 3 != 1 || l >= 7) {
        const auto pub = predicted_census(l, l % 3 == 1 ? decade_x(l) : 0);
        row["predicted_ground_states"] = pub.ground_states;
        row["predicted_clusters"] = pub.clusters;
        if (l % 3 == 1) {
          const auto der = predicted_census(l, derived_x(l));
          row["derived_ground_states"] = der.ground_states;
          row["derived_clusters"] = der.clusters;
        }
      }
      rows.push_back(row);
    }
    return {{"rows", rows}};
  }

  json laplacian_mf_cmd() const {
    const auto b = laplacian_mf_benchmark();
    return {{"root_positive", detail::num(b.root_positive)}, {"root_negative", detail::num(b.root_negative)},
            {"f_mf", detail::num(b.f_mf)}, {"beta_mf", detail::num(b.beta_mf)}};
  }

  // ----- ising
  IsingPoint ising_point(int l, double h) const {
    const std::string method = f_.method.value_or("exact");
    if (method == "exact") return renyi2_exact(l, h);
    if (method == "mf") return renyi2_mf(l, h, mf_options());
    if (method == "dual-mf") return renyi2_dual_mf(l, h, need(f_.u, "--u"), mf_options());
    if (method == "kink0") return kink_correction(l, h, 0);
    if (method == "kink2") return kink_correction(l, h, 2);
    throw input_error("--method must be exact, mf, dual-mf, kink0 or kink2, got '" + method + "'");
  }

  json ising_renyi_cmd() const { return detail::to_json(ising_point(need(f_.L, "--L"), f_.h.value_or(1.0))); }

  json ising_scan_h_cmd() const {
    const int l = need(f_.L, "--L");
    const auto hs = detail::parse_grid(f_.hs.value_or("0:2:0.25"), "--hs");
    std::vector<IsingPoint> pts(hs.size());
    parallel_for(hs.size(), [&](std::size_t i) { pts[i] = ising_point(l, hs[i]); });
    json rows = json::array();
    for (const auto& p : pts) rows.push_back(detail::to_json(p));
    return {{"rows", rows}};
  }

  json ising_scan_u_cmd() const {
    const int l = need(f_.L, "--L");
    const auto us = detail::parse_grid(f_.us.value_or("0.1:0.9:0.1"), "--us");
    const auto scan = renyi2_dual_scan(l, f_.h.value_or(0.0), us, mf_options());
    json rows = json::array();
    for (const auto& p : scan.points) rows.push_back(detail::to_json(p));
    json j{{"rows", rows}, {"best", nullptr}};
    if (scan.best) j["best"] = *scan.best;
    return j;
  }

  json ising_efp_cmd() const {
    const double h = f_.h.value_or(1.0);
    const double z = efp_zeta(h);
    json j{{"h", detail::num(h)}, {"zeta", detail::num(z)}, {"minus_two_zeta", detail::num(-2.0 * z)}};
    if (h != 1.0) {
      j["zeta_prime"] = detail::num(efp_zeta_prime(h));
      j["zeta_prime_closed"] = detail::num(efp_zeta_prime_closed(h));
    }
    return j;
  }

  json ising_kinks_cmd() const {
    const auto ls = detail::parse_int_grid(f_.Ls.value_or("10:74:2"), "--Ls");
    const double h = f_.h.value_or(1.0);
    const int flips = f_.flips.value_or(2);
    std::vector<IsingPoint> pts(ls.size());
    parallel_for(ls.size(), [&](std::size_t i) { pts[i] = kink_correction(ls[i], h, flips); });
    json rows = json::array();
    for (const auto& p : pts) rows.push_back(detail::to_json(p));
    json j{{"rows", rows}};
    if (ls.size() >= 3) {
      const auto fit = fit_alpha_beta(pts);
      j["alpha2"] = detail::num(fit.alpha2);
      j["beta2"] = detail::num(fit.beta2);
      j["alpha2_se"] = detail::num(fit.alpha2_se);
      j["residual"] = detail::num(fit.residual);
    }
    return j;
  }

  json ising_hstar_cmd() const {
    json j;
    const auto ls = detail::parse_int_grid(f_.Ls.value_or("40,60,80,100,150,200,300,400"), "--Ls");
    const auto s = hstar_scan(ls);
    json rows = json::array();
    for (std::size_t i = 0; i < s.L.size(); ++i) rows.push_back({{"L", s.L[i]}, {"hstar", detail::num(s.hstar[i])}});
    j["rows"] = rows;
    j["zeta1"] = detail::num(s.zeta1);
    j["zeta2"] = detail::num(s.zeta2);
    j["zeta2_se"] = detail::num(s.zeta2_se);
    if (f_.hs) {
      const auto d = delta4_scaling(detail::parse_grid(*f_.hs, "--hs"));
      j["delta4_h"] = detail::num_vec(d.h);
      j["delta4"] = detail::num_vec(d.delta4);
      j["delta4_exponent"] = detail::num(d.exponent);
    }
    return j;
  }

  // ----- hubbard
  json hubbard_check_cmd() const {
    HubbardSpec s;
    s.L = f_.L.value_or(1);
    s.N = f_.N.value_or(4);
    s.t = f_.t.value_or(0.0);
    s.U = f_.U.value_or(1.0);
    s.mu = f_.mu.value_or(0.5);
    s.beta = f_.beta.value_or(2.0);
    const Branch br = branch(Branch::positive);
    json j{{"L", s.L}, {"N", s.N}, {"t", detail::num(s.t)}, {"U", detail::num(s.U)},
           {"mu", detail::num(s.mu)}, {"beta", detail::num(s.beta)}};
    j["z_sppm"] = detail::to_json(hubbard_partition_sppm(s, br));
    if (static_cast<Index>(s.L) * s.N <= kHsMaxDim) j["z_hs"] = detail::to_json(hubbard_partition_hs(s, br));
    j["z_expansion"] = detail::num(hubbard_partition_expansion(s));
    if (s.t == 0.0) {
      const auto a = hubbard_atomic_check(s);
      j["z_single_site_power"] = detail::num(a.z_ss_power);
      j["rel_error"] = detail::num(a.rel_error);
      j["envelope"] = detail::num(a.envelope);
      j["factorizes"] = a.factorizes;
      j["within_envelope"] = a.within_envelope;
    }
    if (f_.Ns) {
      const auto seq = hubbard_trotter_sequence(s, detail::parse_int_grid(*f_.Ns, "--Ns"));
      json rows = json::array();
      for (std::size_t i = 0; i < seq.N.size(); ++i)
        rows.push_back({{"N", seq.N[i]}, {"z", detail::num(seq.z[i])}, {"rel_error", detail::num(seq.rel_error[i])}});
      j["rows"] = rows;
      j["z_limit"] = detail::num(seq.z_limit);
      j["z_extrapolated"] = detail::num(seq.z_extrapolated);
      j["extrapolated_error"] = detail::num(seq.extrapolated_error);
      j["monotone"] = seq.monotone;
    }
    return j;
  }

 private:
  const Flags& f_;
};

namespace detail {

inline std::string csv_cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv_cell(v[i]);
    return s;
  }
  if (v.is_object()) return v.contains("log") ? csv_cell(v["log"]) : v.dump();
  return v.dump();
}

/// Rows become a table; everything else key,value lines.
inline void write_csv(const RunRecord& r, std::ostream& out) {
  const json& o = r.outputs;
  if (o.contains("rows") && o["rows"].is_array() && !o["rows"].empty()) {
    std::vector<std::string> cols;
    for (const auto& row : o["rows"])
      for (const auto& [k, v] : row.items())
        if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& row : o["rows"]) {
      for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << (row.contains(cols[i]) ? csv_cell(row[cols[i]]) : "");
      out << '\n';
    }
    return;
  }
  out << "key,value\n";
  for (const auto& [k, v] : o.items()) {
    if (v.is_object() && v.contains("log")) {
      out << k << ".log," << csv_cell(v["log"]) << '\n' << k << ".value," << csv_cell(v["value"]) << '\n';
    } else {
      out << k << ',' << csv_cell(v) << '\n';
    }
  }
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sums of powers of principal minors: exact, dual and mean-field evaluation", "sppm-cli"};
  app.set_help_flag("--help", "Print help");
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;

  app.add_option("--matrix", f.matrix, "Matrix file (CSV or JSON)");
  app.add_option("--gen", f.gen, "Generated matrix: laplacian:L or ising-F:L,h");
  app.add_option("--n", f.n, "Power n");
  app.add_option("--u", f.u, "Dual coupling u in (0, 1]");
  app.add_option("--h", f.h, "Transverse field");
  app.add_option("--L", f.L, "Chain length");
  app.add_option("--N", f.N, "Trotter number");
  app.add_option("--mu", f.mu, "Chemical potential");
  app.add_option("--beta", f.beta, "Inverse temperature");
  app.add_option("--U", f.U, "Hubbard interaction");
  app.add_option("--t", f.t, "Hopping");
  app.add_option("--us", f.us, "u grid, a:b:step or a,b,...");
  app.add_option("--hs", f.hs, "h grid");
  app.add_option("--ns", f.ns, "n grid");
  app.add_option("--Ls", f.Ls, "L grid");
  app.add_option("--Ns", f.Ns, "Trotter grid");
  app.add_option("--init", f.init, "MF start d1,d2,d3");
  app.add_option("--method", f.method, "exact | mf | dual-mf | kink0 | kink2");
  app.add_option("--branch", f.branch, "negative | positive");
  app.add_option("--order", f.order, "Weak-coupling order 0..2");
  app.add_option("--flips", f.flips, "Kink flips 0 or 2");
  app.add_option("--samples", f.samples, "Monte-Carlo samples");
  app.add_option("--seed", f.seed, "Random seed");
  app.add_option("--threads", f.threads, "Worker threads (env SPPM_THREADS)");
  app.add_option("--tol", f.tol, "MF tolerance (env SPPM_TOL)");
  app.add_option("--damping", f.damping, "MF damping in (0, 1]");
  app.add_option("--out", f.out, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--timing", f.timing, "Record wall time");
  app.add_flag("--unpin-delta2", f.unpin_delta2, "Iterate D2 instead of pinning it at 0");

  std::string command;
  std::function<json(const Runner&)> action;
  auto group = [&](const std::string& name, const std::string& help,
                   std::vector<std::pair<std::string, std::function<json(const Runner&)>>> leaves) {
    auto* g = app.add_subcommand(name, help);
    g->set_help_flag("--help", "Print help");
    g->require_subcommand(1);
    g->fallthrough();
    for (auto& [leaf, fn] : leaves) {
      auto* s = g->add_subcommand(leaf);
      s->set_help_flag("--help", "Print help");
      s->fallthrough();
      s->callback([&command, &action, name, leaf = leaf, fn = fn] {
        command = name + " " + leaf;
        action = fn;
      });
    }
  };
  group("sppm", "Exact SPPM",
        {{"exact", [](const Runner& r) { return r.sppm_exact_cmd(); }},
         {"hs", [](const Runner& r) { return r.sppm_hs_cmd(); }},
         {"random", [](const Runner&) { return json(); }}});
  group("dual", "Strong-weak duality",
        {{"check", [](const Runner& r) { return r.dual_check_cmd(); }},
         {"expand", [](const Runner& r) { return r.dual_expand_cmd(); }},
         {"scan-u", [](const Runner& r) { return r.dual_scan_cmd(); }}});
  group("mf", "Mean field",
        {{"solve", [](const Runner& r) { return r.mf_solve_cmd(); }},
         {"multistart", [](const Runner& r) { return r.mf_multistart_cmd(); }},
         {"stability", [](const Runner& r) { return r.mf_stability_cmd(); }}});
  group("laplacian", "Chain Laplacian forests",
        {{"exact", [](const Runner& r) { return r.laplacian_exact_cmd(); }},
         {"thermo", [](const Runner& r) { return r.laplacian_thermo_cmd(); }},
         {"clusters", [](const Runner& r) { return r.laplacian_clusters_cmd(); }},
         {"ground-states", [](const Runner& r) { return r.laplacian_ground_cmd(); }},
         {"mf", [](const Runner& r) { return r.laplacian_mf_cmd(); }}});
  group("ising", "Transverse-field Ising Renyi entropy",
        {{"renyi", [](const Runner& r) { return r.ising_renyi_cmd(); }},
         {"scan-h", [](const Runner& r) { return r.ising_scan_h_cmd(); }},
         {"scan-u", [](const Runner& r) { return r.ising_scan_u_cmd(); }},
         {"efp", [](const Runner& r) { return r.ising_efp_cmd(); }},
         {"kinks", [](const Runner& r) { return r.ising_kinks_cmd(); }},
         {"hstar", [](const Runner& r) { return r.ising_hstar_cmd(); }}});
  group("hubbard", "Hubbard model checks", {{"check", [](const Runner& r) { return r.hubbard_check_cmd(); }}});

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (!f.threads)
      if (auto v = detail::env("SPPM_THREADS")) f.threads = static_cast<unsigned>(detail::parse_int_grid(*v, "SPPM_THREADS").at(0));
    if (!f.tol)
      if (auto v = detail::env("SPPM_TOL")) f.tol = detail::parse_grid(*v, "SPPM_TOL").at(0);
    if (f.threads && *f.threads == 0) throw input_error("--threads must be >= 1");
    if (f.threads) set_threads(*f.threads);

    RunRecord rec;
    rec.command = command;
    for (const CLI::Option* o : app.get_options()) {
      const std::string name = o->get_single_name();
      if (o->count() == 0 || name == "help" || name == "threads" || name == "timing" || name == "out" || name == "seed")
        continue;
      std::string v;
      for (const auto& s : o->results()) v += (v.empty() ? "" : ",") + s;
      rec.params[name] = o->get_expected_min() == 0 ? "true" : v;
    }
    Runner runner(f);
    const auto start = std::chrono::steady_clock::now();
    if (command == "sppm random") {
      rec.seed = f.seed.value_or(1);
      rec.outputs = runner.sppm_random_cmd(*rec.seed);
    } else {
      rec.seed = f.seed;
      rec.outputs = action(runner);
    }
    if (f.timing) rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (f.out == "csv") {
      detail::write_csv(rec, out);
    } else {
      out << to_json(rec).dump(2) << '\n';
    }
    return 0;
  } catch (const input_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const capacity_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sppm::cli
