#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "sppm/laplacian.hpp"
#include "sppm/meanfield.hpp"

using namespace sppm;
using Catch::Approx;

TEST_CASE("Chain Laplacian structure", "[laplacian]") {
  const auto a = laplacian_matrix(5);
  CHECK(a(0, 0) == cplx(2.0));
  CHECK(a(0, 1) == cplx(-1.0));
  CHECK(a(0, 4) == cplx(-1.0));
  CHECK(a(0, 2) == cplx(0.0));
  CHECK(det_lu(a).is_zero());
  const auto sym = laplacian_symbol(8);
  CHECK((circulant_dense(sym).data() - laplacian_matrix(8).data()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(laplacian_matrix(2), input_error);
}

TEST_CASE("Three routes to Z_L agree", "[laplacian]") {
  for (int l = 3; l <= 14; ++l)
    for (int n : {1, 2, 3}) {
      const auto e = z_exact_enumeration(l, n);
      CHECK(relative_difference(z_cluster_formula(l, n), e) < 1e-10);
      CHECK(relative_difference(z_transfer(l, n), e) < 1e-10);
    }
  for (double n : {0.5, 1.7, 4.25}) CHECK(relative_difference(z_cluster_formula(11, n), z_transfer(11, n)) < 1e-10);
}

TEST_CASE("Brute-force oracle for small rings", "[laplacian]") {
  const Eigen::MatrixXcd a = laplacian_matrix(7).data();
  CHECK(z_exact_enumeration(7, 2).value().real() == Approx(oracle::sppm(a, 2).real()).epsilon(1e-12));
  CHECK(z_exact_enumeration(6, 2).value().real() == Approx(1872.0).epsilon(1e-14));
}

TEST_CASE("n = 0 counts every subset once", "[laplacian]") {
  for (int l : {3, 7, 12}) {
    CHECK(z_cluster_formula(l, 0.0).value().real() == Approx(std::ldexp(1.0, l)).epsilon(1e-12));
    CHECK(z_transfer(l, 0.0).value().real() == Approx(std::ldexp(1.0, l)).epsilon(1e-12));
  }
}

TEST_CASE("Generating function derivatives", "[laplacian]") {
  for (double n : {0.5, 2.0, 5.0}) {
    const double mu = thermo_mu(n) * 1.3;
    const auto a = generating_function(n, mu);
    const auto f = generating_function_fd(n, mu, 1e-6);
    CHECK(a.d_mu == Approx(f.d_mu).epsilon(1e-6));
    CHECK(a.d_n == Approx(f.d_n).epsilon(1e-6));
  }
}

TEST_CASE("Generating function refuses mu below threshold", "[laplacian]") {
  const double th = mu_threshold(2.0);
  try {
    generating_function(2.0, 0.9 * th);
    FAIL("expected a domain error");
  } catch (const sppm::domain_error& e) {
    CHECK(e.threshold() == Approx(th));
  }
  CHECK_THROWS_AS(thermo_point(0.0, 1.0), input_error);
}

TEST_CASE("Infinite-chain free energy matches long finite rings", "[laplacian]") {
  const auto p = thermo_point(2.0, thermo_mu(2.0));
  CHECK(p.f == Approx(-0.628).margin(0.001));
  const int l = 400;
  const double f_finite = -z_transfer(l, 2.0).log_mag() / (2.0 * l);
  CHECK(std::abs(f_finite - p.f) < 1e-4);
  CHECK(p.s == Approx(2.0 * (p.e - p.f)));
}

TEST_CASE("Mean cluster energy identity", "[laplacian]") {
  for (double n : {1.0, 2.0, 6.0}) {
    const double mu = thermo_mu(n);
    const auto gf = generating_function(n, mu);
    const auto cs = cluster_distribution(n, mu);
    double e = 0.0;
    for (const auto& [size, m] : cs.mean_m_plus) e -= std::log(size + 1.0) * m;
    CHECK(e == Approx(-gf.d_n / gf.value).epsilon(1e-8));
  }
}

TEST_CASE("Dominant cluster size moves from monomers to dimers", "[laplacian]") {
  auto dominant_at = [](double n) { return dominant_cluster(cluster_distribution(n, thermo_mu(n))); };
  CHECK(dominant_at(2.0) == 1);
  CHECK(dominant_at(7.0) == 1);
  // the crossover sits between n = 8 and n = 9
  CHECK(dominant_at(8.0) == 1);
  for (double n : {9.0, 10.0, 12.0, 16.0}) CHECK(dominant_at(n) == 2);
}

TEST_CASE("Ring energy is minus the log of the kept minor", "[laplacian]") {
  const int l = 9;
  const Eigen::MatrixXcd a = laplacian_matrix(l).data();
  for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << l); ++mask) {
    const double det = oracle::det(oracle::submatrix(a, mask)).real();
    CHECK(ring_energy(mask, l) == Approx(-std::log(det)).margin(1e-12));
  }
  CHECK(ring_energy((std::uint64_t{1} << l) - 1, l) == kInf);
}

TEST_CASE("Ground-state census against the mod-3 formulas", "[laplacian]") {
  for (int l = 7; l <= 16; ++l) {
    const auto c = ground_state_census(l);
    const int x = l % 3 == 1 ? derived_x(l) : 0;
    const auto p = predicted_census(l, x);
    CHECK(c.ground_states == p.ground_states);
    CHECK(c.clusters == p.clusters);
    CHECK(c.s == Approx(std::log(static_cast<double>(c.ground_states)) / l));
  }
  // the closed-form X agrees with enumeration at L = 7, 10, 13 and undercounts at L = 16
  for (int l : {7, 10, 13}) CHECK(decade_x(l) == derived_x(l));
  CHECK(decade_x(16) == 16);
  CHECK(derived_x(16) == 24);
  CHECK(predicted_census(16, decade_x(16)).ground_states != ground_state_census(16).ground_states);
  CHECK(ground_state_census(9).ground_states == 3U);
  CHECK_THROWS_AS(derived_x(9), input_error);
}

TEST_CASE("Laplacian mean-field benchmark", "[laplacian]") {
  const auto b = laplacian_mf_benchmark();
  CHECK(b.root_positive == Approx(0.601232).margin(1e-5));
  CHECK(b.root_negative == Approx(-4.01545).margin(1e-4));
  CHECK(b.f_mf == Approx(-0.576).margin(0.001));
  CHECK(b.beta_mf == Approx(-1.01755).margin(0.0005));
  for (double r : {b.root_positive, b.root_negative}) CHECK(r * r * r * (r + 4.0) == Approx(1.0).epsilon(1e-12));
}
