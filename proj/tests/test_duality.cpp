#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "sppm/duality.hpp"
#include "sppm/ising.hpp"
#include "sppm/laplacian.hpp"

using namespace sppm;

namespace {
SquareMatrix cm(const Eigen::MatrixXcd& m) { return SquareMatrix(m); }
}  // namespace

TEST_CASE("Dual parameters satisfy the coupling constraint", "[duality]") {
  for (double u : {0.01, 0.1, 0.25, 0.5, 0.9, 1.0})
    for (Branch b : {Branch::negative, Branch::positive}) {
      const double m = dual_m(u, b);
      CHECK(u / ((u + m * m) * (u + m * m)) == Catch::Approx(1.0).epsilon(1e-14));
      CHECK((b == Branch::negative ? m <= 0.0 : m >= 0.0));
    }
  CHECK_THROWS_AS(dual_m(0.0, Branch::negative), input_error);
  CHECK_THROWS_AS(dual_m(1.5, Branch::negative), input_error);
}

TEST_CASE("Dual sum reproduces the n = 2 SPPM on random matrices", "[duality]") {
  for (int dim = 1; dim <= 8; ++dim)
    for (double u : {0.1, 0.5, 0.9})
      for (Branch b : {Branch::negative, Branch::positive}) {
        const auto r = SquareMatrix(oracle::random_real(dim, 50 * dim));
        const auto c = cm(oracle::random_complex(dim, 60 * dim));
        const auto tr = build_dual(r, u, b);
        const auto tc = build_dual(c, u, b);
        CHECK(tr.lambda() == Catch::Approx(1.0));
        CHECK(relative_difference(sppm_dual_exact(tr).value, sppm_exact(r, 2).value) < 1e-9);
        CHECK(relative_difference(sppm_dual_exact(tc).value, sppm_exact(c, 2).value) < 1e-9);
      }
}

TEST_CASE("Dual sum on structured inputs", "[duality]") {
  for (double u : {0.1, 0.5, 0.9}) {
    const auto lap = laplacian_matrix(10);
    CHECK(relative_difference(sppm_dual_exact(build_dual(lap, u)).value, sppm_exact(lap, 2).value) < 1e-9);
    const auto f = ising_F(10, 0.5);
    CHECK(relative_difference(sppm_dual_exact(build_dual(f, u)).value, sppm_exact(f, 2).value) < 1e-9);
  }
}

TEST_CASE("Dual transform of a singular shift fails loudly", "[duality]") {
  const double u = 0.5;
  const double d = dual_m(u, Branch::negative) / (u + dual_m(u, Branch::negative) * dual_m(u, Branch::negative));
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  a(0, 0) = -d;
  CHECK_THROWS_AS(build_dual(SquareMatrix(a), u), numeric_error);
}

TEST_CASE("Weak-coupling expansion on the chain Laplacian", "[duality]") {
  const auto a = laplacian_matrix(6);
  const auto exact = sppm_exact(a, 2).value;
  const auto t = build_dual(a, 0.05);
  CHECK(relative_difference(weak_coupling_expansion(t, 2), exact) < 0.02);
  CHECK_THROWS_AS(weak_coupling_expansion(t, 3), input_error);
}

TEST_CASE("Second order is no worse than leading order for u <= 0.2", "[duality]") {
  std::vector<SquareMatrix> corpus{laplacian_matrix(6), laplacian_matrix(8)};
  for (std::uint64_t seed = 0; seed < 4; ++seed) corpus.emplace_back(oracle::random_real(6, 900 + seed, 3.0));
  for (const auto& a : corpus) {
    const auto exact = sppm_exact(a, 2).value;
    for (double u : {0.2, 0.1, 0.05}) {
      const auto t = build_dual(a, u);
      CHECK(relative_difference(weak_coupling_expansion(t, 2), exact) <=
            relative_difference(weak_coupling_expansion(t, 0), exact));
    }
  }
}

TEST_CASE("Leading order is a single shifted determinant", "[duality]") {
  // c det(N)^2 = det((m / u^{1/4}) A - u^{1/4})^2, which tends to det(A)^2 as u -> 0
  // with corrections of order u^{1/4}
  const Eigen::MatrixXd a = oracle::random_real(5, 17);
  for (double u : {0.3, 0.01, 1e-6}) {
    const auto t = build_dual(SquareMatrix(a), u);
    const double q = std::pow(u, 0.25);
    const Eigen::MatrixXd shifted = (t.m / q) * a - q * Eigen::MatrixXd::Identity(5, 5);
    const double direct = std::pow(shifted.determinant(), 2);
    CHECK(weak_coupling_expansion(t, 0).value().real() == Catch::Approx(direct).epsilon(1e-9));
  }
  const auto tiny = build_dual(SquareMatrix(a), 1e-12);
  CHECK(weak_coupling_expansion(tiny, 0).value().real() == Catch::Approx(std::pow(a.determinant(), 2)).epsilon(5e-3));
}

TEST_CASE("Symbol-space dual matches the dense dual", "[duality]") {
  const int l = 8;
  const double u = 0.3;
  const auto sym = ising_symbol_F(l, 0.7);
  const auto ds = build_dual(sym, u);
  const auto dd = build_dual(ising_F(l, 0.7), u);
  CHECK(relative_difference(ds.c, dd.c) < 1e-10);
  const auto n_dense = circulant_dense(ds.N);
  CHECK((n_dense.data() - dd.N.data()).cwiseAbs().maxCoeff() < 1e-10);
}
