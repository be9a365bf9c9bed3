#pragma once

// Exhaustive SPPM and the exact identities built on it.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sppm/matrix.hpp"
#include "sppm/parallel.hpp"

namespace sppm {

inline constexpr Index kExactMaxDim = 24;
inline constexpr Index kHsMaxDim = 20;

/// M^(n)(A) = sum over all 2^l kept subsets I of det(A_I)^n, det of the empty minor = 1.
struct SppmResult {
  LogSigned value;
  int n = 0;
  Index dim = 0;
  std::uint64_t terms = 0;
};

namespace detail {

inline constexpr std::uint64_t kBlock = 4096;

inline void check_capacity(Index dim, Index cap, const char* who) {
  if (dim > cap)
    throw capacity_error(std::string(who) + ": dim " + std::to_string(dim) + " exceeds the limit " +
                         std::to_string(cap));
}

/// Sums per-mask contributions over [0, 2^bits) in fixed blocks of ascending masks,
/// then reduces the blocks pairwise. The worker count never changes the result.
template <std::size_t K, class MakeWorker>
std::array<LogSigned, K> mask_sums(Index bits, MakeWorker&& make_worker) {
  const std::uint64_t total = std::uint64_t{1} << bits;
  const std::uint64_t blocks = (total + kBlock - 1) / kBlock;
  std::vector<std::array<LogSigned, K>> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    auto worker = make_worker();
    std::array<LogSigned, K> acc{};
    const std::uint64_t end = std::min<std::uint64_t>(total, (b + 1) * kBlock);
    for (std::uint64_t mask = b * kBlock; mask < end; ++mask) {
      const auto t = worker(mask);
      for (std::size_t k = 0; k < K; ++k) acc[k] += t[k];
    }
    partial[b] = acc;
  });
  std::array<LogSigned, K> out{};
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<LogSigned> col(blocks);
    for (std::uint64_t b = 0; b < blocks; ++b) col[b] = partial[b][k];
    out[k] = tree_reduce(std::move(col), [](const LogSigned& x, const LogSigned& y) { return x + y; },
                         LogSigned::zero());
  }
  return out;
}

/// Determinants of principal submatrices without heap traffic.
template <class Scalar>
class MinorWorker {
 public:
  using Small = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kExactMaxDim, kExactMaxDim>;

  explicit MinorWorker(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a) : a_(&a) {}

  LogSigned det(std::uint64_t mask) {
    int c = 0;
    for (Index i = 0; i < a_->rows(); ++i)
      if ((mask >> i) & 1U) idx_[c++] = i;
    if (c == 0) return LogSigned::one();
    sub_.resize(c, c);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j) sub_(i, j) = (*a_)(idx_[i], idx_[j]);
    lu_.compute(sub_);
    return log_det_from_lu(lu_);
  }

 private:
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>* a_;
  std::array<Index, 64> idx_{};
  Small sub_;
  Eigen::PartialPivLU<Small> lu_;
};

/// Runs body(worker_factory) with the real path when the matrix has no imaginary part.
template <class Body>
auto with_scalar(const SquareMatrix& m, Body&& body) {
  if (m.is_real()) {
    const Eigen::MatrixXd a = m.real();
    return body(a);
  }
  return body(m.data());
}

}  // namespace detail

/// Several powers in one enumeration pass.
template <std::size_t K>
std::array<SppmResult, K> sppm_exact_powers(const SquareMatrix& m, const std::array<int, K>& powers) {
  for (int n : powers)
    if (n < 1) throw input_error("sppm_exact: power n must be >= 1, got " + std::to_string(n));
  detail::check_capacity(m.dim(), kExactMaxDim, "sppm_exact");
  const auto sums = detail::with_scalar(m, [&](const auto& a) {
    using Scalar = typename std::decay_t<decltype(a)>::Scalar;
    return detail::mask_sums<K>(m.dim(), [&] {
      return [w = detail::MinorWorker<Scalar>(a), &powers](std::uint64_t mask) mutable {
        const LogSigned d = w.det(mask);
        std::array<LogSigned, K> t;
        for (std::size_t k = 0; k < K; ++k) t[k] = d.pow(powers[k]);
        return t;
      };
    });
  });
  std::array<SppmResult, K> out;
  for (std::size_t k = 0; k < K; ++k) out[k] = {sums[k], powers[k], m.dim(), std::uint64_t{1} << m.dim()};
  return out;
}

inline SppmResult sppm_exact(const SquareMatrix& m, int n) {
  return sppm_exact_powers<1>(m, {n})[0];
}

/// 2^{-l} sum over diagonal sign matrices S of det(M + S)^2.
inline SppmResult sppm_hs_discrete(const SquareMatrix& m) {
  detail::check_capacity(m.dim(), kHsMaxDim, "sppm_hs_discrete");
  const Index l = m.dim();
  const auto sum = detail::with_scalar(m, [&](const auto& a) {
    using Scalar = typename std::decay_t<decltype(a)>::Scalar;
    using Small = typename detail::MinorWorker<Scalar>::Small;
    return detail::mask_sums<1>(l, [&] {
      return [&a, l, s = Small(a), lu = Eigen::PartialPivLU<Small>()](std::uint64_t mask) mutable {
        for (Index i = 0; i < l; ++i) s(i, i) = a(i, i) + Scalar(((mask >> i) & 1U) ? 1.0 : -1.0);
        if (l == 0) return std::array<LogSigned, 1>{LogSigned::one()};
        lu.compute(s);
        return std::array<LogSigned, 1>{detail::log_det_from_lu(lu).pow(2)};
      };
    })[0];
  });
  const LogSigned norm(-static_cast<double>(l) * std::log(2.0), 0.0);
  return {sum * norm, 2, l, std::uint64_t{1} << l};
}

struct HsEstimate {
  cplx mean;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo mean of det(M + S)^2 with i.i.d. Rademacher diagonal S.
inline HsEstimate sppm_hs_random(const SquareMatrix& m, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw input_error("sppm_hs_random: samples must be >= 2");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXcd s = m.data();
  cplx mean{};
  double m2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    for (Index i = 0; i < m.dim(); ++i) s(i, i) = m(i, i) + (coin(rng) ? 1.0 : -1.0);
    const cplx x = detail::log_det(s).pow(2).value();
    const cplx delta = x - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += std::real(std::conj(delta) * (x - mean));
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(samples)), samples};
}

struct FormationProbability {
  IndexSubset subset;
  cplx probability;
};

/// P(I) = det(F_I) / det(I + F) for every kept subset, ascending by mask.
inline std::vector<FormationProbability> formation_probabilities(const SquareMatrix& f) {
  detail::check_capacity(f.dim(), kHsMaxDim, "formation_probabilities");
  const LogSigned norm = det_lu(f.shifted(1.0));
  if (norm.is_zero()) throw numeric_error("formation_probabilities: I + F is singular");
  const Index l = f.dim();
  const std::uint64_t total = std::uint64_t{1} << l;
  std::vector<cplx> p(total);
  detail::with_scalar(f, [&](const auto& a) {
    using Scalar = typename std::decay_t<decltype(a)>::Scalar;
    const std::uint64_t blocks = (total + detail::kBlock - 1) / detail::kBlock;
    parallel_for(blocks, [&](std::size_t b) {
      detail::MinorWorker<Scalar> w(a);
      const std::uint64_t end = std::min<std::uint64_t>(total, (b + 1) * detail::kBlock);
      for (std::uint64_t mask = b * detail::kBlock; mask < end; ++mask) p[mask] = (w.det(mask) / norm).value();
    });
    return 0;
  });
  std::vector<FormationProbability> out;
  out.reserve(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) out.push_back({IndexSubset(mask, l), p[mask]});
  return out;
}

/// sum over kept K containing j of det(M_{K\j})^d det(M_K)^{n-d}, divided by M^(n)(M).
inline cplx exact_two_point(const SquareMatrix& m, int n, Index j, int d) {
  detail::check_capacity(m.dim(), kHsMaxDim, "exact_two_point");
  if (j < 0 || j >= m.dim())
    throw input_error("exact_two_point: index j = " + std::to_string(j + 1) + " outside [1, " +
                      std::to_string(m.dim()) + "]");
  if (n < 1 || d < 0 || d > n) throw input_error("exact_two_point: need n >= 1 and 0 <= d <= n");
  const std::uint64_t bit = std::uint64_t{1} << j;
  const auto sum = detail::with_scalar(m, [&](const auto& a) {
    using Scalar = typename std::decay_t<decltype(a)>::Scalar;
    return detail::mask_sums<1>(m.dim(), [&] {
      return [w = detail::MinorWorker<Scalar>(a), bit, n, d](std::uint64_t mask) mutable {
        if (!(mask & bit)) return std::array<LogSigned, 1>{};
        return std::array<LogSigned, 1>{w.det(mask & ~bit).pow(d) * w.det(mask).pow(n - d)};
      };
    })[0];
  });
  return (sum / sppm_exact(m, n).value).value();
}

}  // namespace sppm
