#ifndef BMV_SUITES_HPP
#define BMV_SUITES_HPP

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmv/equivalence.hpp"
#include "bmv/matcore.hpp"
#include "bmv/numeric.hpp"
#include "bmv/parallel.hpp"
#include "bmv/rng.hpp"
#include "bmv/trace_poly.hpp"
#include "bmv/words.hpp"

namespace bmv {

/// Outcome of one regression suite. `worst` is the largest observed error
/// measure, compared against `threshold`.
struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;
  double threshold = 0.0;
  bool pass = true;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
};

namespace detail {

inline double rel_gap(double x, double y) {
  double d = std::abs(x - y);
  double m = std::max(std::abs(x), std::abs(y));
  return m > 0.0 ? d / m : d;
}

inline std::uint64_t suite_stream(std::uint64_t tag, std::uint64_t index) {
  return (tag << 40) ^ index;
}

inline CMatrix random_unitary(int n, Philox& rng) {
  CMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(z);
  return qr.householderQ() * CMatrix::Identity(n, n);
}

/// (A, B) with B positive of norm 1/2 and A + lambda B having smallest
/// eigenvalue 1 and condition number drawn from [kappa_lo, kappa_hi].
inline std::pair<HermitianMatrix, HermitianMatrix> conditioned_pair(
    int n, double lambda, double kappa_lo, double kappa_hi, Philox& rng) {
  const double kappa = kappa_lo + (kappa_hi - kappa_lo) * rng.uniform();
  RVector d(n);
  d(0) = 1.0;
  if (n > 1) d(n - 1) = kappa;
  for (int k = 1; k + 1 < n; ++k) d(k) = 1.0 + (kappa - 1.0) * rng.uniform();
  const CMatrix u = random_unitary(n, rng);
  const CMatrix m = u * d.cast<Complex>().asDiagonal() * u.adjoint();
  auto b0 = random_psd(n, n, rng);
  HermitianMatrix b(CMatrix(0.5 * b0.mat() / norm(b0)), Classification::positive);
  return {HermitianMatrix(CMatrix(m - lambda * b.mat()),
                          Classification::positive_definite),
          b};
}

/// Hermitian A and positive B with spectral norms drawn from [1/2, 2].
inline std::pair<HermitianMatrix, HermitianMatrix> unit_scale_pair(int n,
                                                                   Philox& rng) {
  auto a = random_hermitian(n, rng);
  auto b = random_psd(n, n, rng);
  const double sa = 0.5 + 1.5 * rng.uniform(), sb = 0.5 + 1.5 * rng.uniform();
  return {a.scaled(sa / norm(a)), b.scaled(sb / norm(b))};
}

}  // namespace detail

/// Recurrence, brute force and necklace engines on random positive pairs;
/// n cycles through 1..4 and p through 1..10. Exact instances compare brute
/// force and necklace rationals for equality.
inline SuiteResult cross_engine_suite(std::uint64_t seed, int instances,
                                      int exact_instances,
                                      const HermitianMatrix* extra_a = nullptr,
                                      const HermitianMatrix* extra_b = nullptr) {
  constexpr double kTol = 1e-9;
  SuiteResult res{"cross-engine", 0, 0, 0.0, kTol};
  const Philox root(seed);
  struct Case {
    double worst = 0.0;
    bool exact_equal = true;
  };
  const int extra = (extra_a && extra_b) ? 1 : 0;
  const int total = instances + exact_instances + extra;
  std::vector<Case> cases(static_cast<std::size_t>(total));
  parallel_for(cases.size(), [&](std::size_t i) {
    Philox rng = root.split(detail::suite_stream(1, i));
    const int k = static_cast<int>(i);
    if (k < instances || k >= instances + exact_instances) {
      HermitianMatrix a, b;
      int p = 1 + (k / 4) % 10;
      if (k < instances) {
        const int n = 1 + k % 4;
        a = random_psd(n, n, rng);
        b = random_psd(n, n, rng);
      } else {
        a = *extra_a;
        b = *extra_b;
        p = 8;
      }
      auto dp = trace_poly(a, b, p);
      double worst = 0.0;
      for (int r = 0; r <= p; ++r) {
        double br = coeff_bruteforce(a, b, p, r);
        double nk = coeff_by_necklaces(a, b, p, r);
        double c = dp.coeffs[static_cast<std::size_t>(r)];
        worst = std::max({worst, detail::rel_gap(c, br), detail::rel_gap(c, nk),
                          detail::rel_gap(br, nk)});
      }
      cases[i].worst = worst;
    } else {
      const int j = k - instances;
      const int n = 1 + j % 3;
      const int p = 1 + j % 10;
      auto a = random_psd(n, n, rng, true);
      auto b = random_psd(n, n, rng, true);
      for (int r = 0; r <= p; ++r) {
        if (coeff_bruteforce_exact(a, b, p, r) !=
            coeff_by_necklaces_exact(a, b, p, r)) {
          cases[i].exact_equal = false;
        }
      }
    }
  });
  int exact_failures = 0;
  for (const auto& c : cases) {
    ++res.cases;
    res.worst = std::max(res.worst, c.worst);
    if (c.worst > kTol || !c.exact_equal) ++res.failures;
    if (!c.exact_equal) ++exact_failures;
  }
  res.pass = res.failures == 0;
  res.details = {{"float_instances", instances + extra},
                 {"exact_instances", exact_instances},
                 {"exact_mismatches", exact_failures}};
  return res;
}

/// Two-sided check of the inverse-power identity for every (p, r) with
/// p >= 1, r >= 0, p + r <= max_sum; `per_pair` instances each with
/// n cycling 1..4, plus the scalar closed form binomial(p+r-1, r).
inline SuiteResult lemma1_suite(std::uint64_t seed, int per_pair,
                                int max_sum = 12, int max_n = 4) {
  constexpr double kTol = 1e-8;
  constexpr double kScalarTol = 1e-12;
  SuiteResult res{"lemma1", 0, 0, 0.0, kTol};
  struct Job {
    int p, r, k;
  };
  std::vector<Job> jobs;
  for (int s = 1; s <= max_sum; ++s)
    for (int p = 1; p <= s; ++p)
      for (int k = 0; k < per_pair; ++k) jobs.push_back({p, s - p, k});
  std::vector<double> worst(jobs.size(), 0.0);
  const Philox root(seed);
  parallel_for(jobs.size(), [&](std::size_t i) {
    Philox rng = root.split(detail::suite_stream(2, i));
    const auto& job = jobs[i];
    const int n = 1 + job.k % max_n;
    auto a = random_pd(n, rng);
    auto b = random_hermitian(n, rng);
    worst[i] = verify_lemma1(a, b, job.p, job.r, kTol).rel_residual;
  });
  for (double w : worst) {
    ++res.cases;
    res.worst = std::max(res.worst, w);
    if (!(w <= kTol)) ++res.failures;
  }
  // Scalar closed form.
  double scalar_worst = 0.0;
  Philox rng = root.split(detail::suite_stream(3, 0));
  for (int s = 1; s <= max_sum; ++s) {
    for (int p = 1; p <= s; ++p) {
      const int r = s - p;
      const double av = 0.5 + 2.0 * rng.uniform(), bv = 0.5 + 2.0 * rng.uniform();
      CMatrix am(1, 1), bm(1, 1);
      am << av;
      bm << bv;
      double lhs = inverse_power_derivative(HermitianMatrix(am),
                                            HermitianMatrix(bm), p, r);
      double denom = ((r % 2 == 0) ? 1.0 : -1.0) * factorial(r) *
                     std::pow(bv, r) * std::pow(av, -p - r);
      double ratio = lhs / denom;
      double want = static_cast<double>(binomial(p + r - 1, r));
      double err = std::abs(ratio - want) / want;
      scalar_worst = std::max(scalar_worst, err);
    }
  }
  if (scalar_worst > kScalarTol) ++res.failures;
  res.pass = res.failures == 0;
  res.details = {{"pairs_checked", static_cast<int>(jobs.size())},
                 {"scalar_closed_form_worst", scalar_worst},
                 {"scalar_tol", kScalarTol}};
  return res;
}

/// Gamma-integral representation: quadrature with 64 nodes within 1e-6 of
/// the direct inverse power, and the 128-node error no larger than the
/// 32-node error. Instances have n in {2, 3} and cond(A + lambda B) in
/// [8, 12]: a scalar or near-scalar pencil makes the integrand constant, every
/// rule exact, and the 32/128 comparison a comparison of rounding noise.
inline SuiteResult quadrature_suite(std::uint64_t seed, int instances) {
  constexpr double kTol = 1e-6;
  constexpr std::array<double, 4> kPowers{1.0, 2.0, 2.5, 4.0};
  constexpr std::array<double, 3> kLambdas{0.0, 0.3, 1.0};
  SuiteResult res{"quadrature", 0, 0, 0.0, kTol};
  struct Case {
    double err64 = 0.0;
    bool monotone = true;
  };
  std::vector<Case> cases(static_cast<std::size_t>(instances) * kPowers.size());
  const Philox root(seed);
  parallel_for(static_cast<std::size_t>(instances), [&](std::size_t i) {
    Philox rng = root.split(detail::suite_stream(4, i));
    const int n = 2 + static_cast<int>(i % 2);
    const double l = kLambdas[i % kLambdas.size()];
    auto [a, b] = detail::conditioned_pair(n, l, 8.0, 12.0, rng);
    for (std::size_t k = 0; k < kPowers.size(); ++k) {
      auto& c = cases[i * kPowers.size() + k];
      double e32 = laplace_rep_check(a, b, l, kPowers[k], 32).rel_error;
      double e64 = laplace_rep_check(a, b, l, kPowers[k], 64).rel_error;
      double e128 = laplace_rep_check(a, b, l, kPowers[k], 128).rel_error;
      c.err64 = e64;
      c.monotone = e128 <= e32;
    }
  });
  int non_monotone = 0;
  for (const auto& c : cases) {
    ++res.cases;
    res.worst = std::max(res.worst, c.err64);
    if (!(c.err64 <= kTol) || !c.monotone) ++res.failures;
    if (!c.monotone) ++non_monotone;
  }
  res.pass = res.failures == 0;
  res.details = {{"non_monotone", non_monotone}};
  return res;
}

/// Shifted exponential series reaches relative gap 1e-10 at some K <= 80.
/// Norms are O(1): the remainder after K terms is about ||M||^{K+1}/(K+1)!
/// with ||M|| up to 2||A|| + lambda ||B||, so K = 80 cannot reach 1e-10 once
/// ||M|| is much above 25.
inline SuiteResult series_suite(std::uint64_t seed, int instances) {
  constexpr double kTol = 1e-10;
  constexpr int kCap = 80;
  constexpr std::array<double, 3> kLambdas{0.0, 0.5, 2.0};
  SuiteResult res{"series", 0, 0, 0.0, kTol};
  std::vector<SeriesReport> reps(static_cast<std::size_t>(instances) *
                                 kLambdas.size());
  const Philox root(seed);
  parallel_for(static_cast<std::size_t>(instances), [&](std::size_t i) {
    Philox rng = root.split(detail::suite_stream(5, i));
    const int n = 1 + static_cast<int>(i % 3);
    auto [a, b] = detail::unit_scale_pair(n, rng);
    for (std::size_t k = 0; k < kLambdas.size(); ++k) {
      reps[i * kLambdas.size() + k] =
          series_identity_check(a, b, kLambdas[k], kCap);
    }
  });
  int max_terms = 0;
  for (const auto& r : reps) {
    ++res.cases;
    res.worst = std::max(res.worst, r.rel_gap);
    max_terms = std::max(max_terms, r.terms);
    if (!r.converged) ++res.failures;
  }
  res.pass = res.failures == 0;
  res.details = {{"max_terms_used", max_terms}, {"term_cap", kCap}};
  return res;
}

inline nlohmann::ordered_json to_json(const SuiteResult& r) {
  return {{"name", r.name},   {"cases", r.cases},
          {"failures", r.failures}, {"worst", r.worst},
          {"threshold", r.threshold}, {"pass", r.pass},
          {"details", r.details}};
}

}  // namespace bmv

#endif  // BMV_SUITES_HPP
