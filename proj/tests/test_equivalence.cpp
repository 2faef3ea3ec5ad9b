#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "bmv/equivalence.hpp"
#include "bmv/numeric.hpp"
#include "bmv/trace_poly.hpp"
#include "test_util.hpp"

namespace bmv {
namespace {

using test::rel_diff;

HermitianMatrix scalar(double x) {
  CMatrix m(1, 1);
  m << x;
  return HermitianMatrix(m);
}

HermitianMatrix diag(std::initializer_list<double> v) {
  RVector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return HermitianMatrix::diagonal(d);
}

std::vector<double> grid_0_5() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(0.25 * k);
  return g;
}

// Compositions

TEST(Compositions, CountMatchesStarsAndBars) {
  for (int p = 1; p <= 8; ++p) {
    for (int r = 0; r <= 6; ++r) {
      EXPECT_EQ(count_compositions(p + r, r + 1), binomial(p + r - 1, r))
          << p << "," << r;
    }
  }
}

TEST(Compositions, PartsPositiveAndDistinct) {
  std::set<std::vector<int>> seen;
  for_each_composition(7, 3, [&](const Composition& c) {
    EXPECT_EQ(c.total(), 7);
    for (int v : c.parts) EXPECT_GE(v, 1);
    EXPECT_TRUE(seen.insert(c.parts).second);
  });
  EXPECT_EQ(seen.size(), 15u);
}

// Inverse-power derivative

TEST(InversePower, ScalarExample) {
  EXPECT_NEAR(inverse_power_derivative(scalar(2), scalar(1), 2, 1), -0.25,
              1e-15);
}

TEST(InversePower, ZeroDirection) {
  Philox rng(3);
  auto a = random_pd(3, rng);
  for (int r = 1; r <= 4; ++r) {
    EXPECT_EQ(inverse_power_derivative(a, HermitianMatrix::zero(3), 2, r), 0.0);
  }
}

TEST(InversePower, MatchesFiniteDifferences) {
  Philox root(11);
  for (int i = 0; i < 20; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_pd(3, rng);
    auto b = random_hermitian(3, rng);
    auto f = [&](double l) {
      return matfn(HermitianMatrix(CMatrix(a.mat() + l * b.mat())), Power{-3.0})
          .mat()
          .trace()
          .real();
    };
    auto fd = richardson_derivative(f, 0.0, 2, 0.05);
    auto v = inverse_power_derivative_scaled(a, b, 3, 2);
    EXPECT_LE(std::abs(v.value - fd.value), 1e-7 * v.scale) << i;
  }
}

TEST(InversePower, SingularBaseRejected) {
  EXPECT_THROW(inverse_power_derivative(diag({1, 0}), diag({1, 1}), 1, 1),
               std::domain_error);
}

// Inverse-power identity

TEST(InverseIdentity, ScalarExample) {
  auto rep = verify_lemma1(scalar(2), scalar(1), 2, 1, 1e-8);
  EXPECT_NEAR(rep.lhs, -0.25, 1e-15);
  EXPECT_NEAR(rep.rhs, -0.25, 1e-15);
  EXPECT_TRUE(rep.pass);
}

TEST(InverseIdentity, ZeroDirectionBothSidesZero) {
  Philox rng(5);
  auto a = random_pd(3, rng);
  auto rep = verify_lemma1(a, HermitianMatrix::zero(3), 3, 2, 1e-8);
  EXPECT_EQ(rep.lhs, 0.0);
  EXPECT_EQ(rep.rhs, 0.0);
  EXPECT_TRUE(rep.pass);
}

TEST(InverseIdentity, RandomFourByFour) {
  Philox root(17);
  for (int i = 0; i < 10; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_pd(4, rng);
    auto b = random_hermitian(4, rng);
    auto rep = verify_lemma1(a, b, 3, 3, 1e-8);
    EXPECT_LE(rep.rel_residual, 1e-8) << i;
  }
}

TEST(InverseIdentity, ScalarClosedForm) {
  for (int p = 1; p <= 6; ++p) {
    for (int r = 0; r <= 6; ++r) {
      const double av = 1.7, bv = 0.6;
      double lhs = inverse_power_derivative(scalar(av), scalar(bv), p, r);
      double denom = ((r % 2 == 0) ? 1.0 : -1.0) * factorial(r) *
                     std::pow(bv, r) * std::pow(av, -p - r);
      EXPECT_NEAR(lhs / denom, static_cast<double>(binomial(p + r - 1, r)),
                  1e-12 * binomial(p + r - 1, r));
    }
  }
}

// Exponential derivatives

TEST(ExpDerivative, ZeroDirection) {
  Philox rng(2);
  auto a = random_hermitian(3, rng);
  for (int r = 1; r <= 4; ++r) {
    EXPECT_EQ(exp_trace_derivative(a, HermitianMatrix::zero(3), r, 0.3), 0.0);
  }
}

TEST(ExpDerivative, CommutingDiagonalClosedForm) {
  auto a = diag({0.3, -1.2, 2.0});
  auto b = diag({1.5, 0.25, 0.7});
  const double as[] = {0.3, -1.2, 2.0}, bs[] = {1.5, 0.25, 0.7};
  for (int r = 0; r <= 5; ++r) {
    for (double l : {0.0, 0.4, 2.5}) {
      double want = 0.0;
      for (int i = 0; i < 3; ++i)
        want += std::pow(-bs[i], r) * std::exp(as[i] - l * bs[i]);
      EXPECT_LE(rel_diff(exp_trace_derivative(a, b, r, l), want), 1e-12)
          << r << " " << l;
    }
  }
}

TEST(ExpDerivative, MatchesFiniteDifferences) {
  Philox root(23);
  for (int i = 0; i < 10; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_hermitian(3, rng);
    auto b = random_psd(3, 3, rng);
    double block = exp_trace_derivative(a, b, 2, 0.7);
    auto fd = exp_trace_derivative_fd(a, b, 2, 0.7);
    EXPECT_LE(rel_diff(block, fd.value), 1e-6) << i;
  }
}

TEST(ExpDerivative, OverflowGuard) {
  auto a = diag({150, 0});
  auto b = diag({30, 1});
  EXPECT_THROW(exp_trace_derivative(a, b, 1, 2.0), std::domain_error);
  EXPECT_NO_THROW(exp_trace_derivative(a, b, 1, 1.0));
}

// Complete-monotonicity probes

TEST(CMProbe, TwoByTwoExpHasNoViolations) {
  Philox root(31);
  for (int i = 0; i < 40; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_hermitian(2, rng);
    auto b = random_psd(2, 2, rng);
    auto rep = cm_probe_exp(a, b, 5, grid_0_5(), 1e-12);
    EXPECT_TRUE(rep.violations.empty()) << i;
  }
}

TEST(CMProbe, DiagonalExpNonnegative) {
  auto rep = cm_probe_exp(diag({1.0, -0.5}), diag({0.3, 2.0}), 5, grid_0_5(),
                          0.0);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_GE(rep.min_signed_value, 0.0);
}

TEST(CMProbe, ValuesAndScalesShape) {
  auto g = grid_0_5();
  auto rep = cm_probe_exp(diag({1.0, 0.0}), diag({1.0, 1.0}), 3, g, 1e-12);
  ASSERT_EQ(rep.values.size(), g.size());
  ASSERT_EQ(rep.scales.size(), g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    ASSERT_EQ(rep.values[k].size(), 4u);
    ASSERT_EQ(rep.scales[k].size(), 4u);
  }
  EXPECT_EQ(rep.orders, (std::vector<int>{0, 1, 2, 3}));
}

TEST(CMProbe, ViolationsAreExactlyTheEntriesBelowTolerance) {
  // B must be positive.
  auto rep = cm_probe_exp(diag({0.0, 0.0}), diag({0.0, 0.0}), 2, {0.0}, 1e-12);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_THROW(cm_probe_exp(diag({0.0, 0.0}), diag({-1.0, 0.0}), 2, {0.0}, 1e-12),
               std::domain_error);
  Philox root(37);
  for (int i = 0; i < 10; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto rep2 = cm_probe_exp(random_hermitian(3, rng), random_psd(3, 2, rng), 4,
                             {0.0, 1.0, 3.0}, 1e-12);
    std::size_t count = 0;
    for (std::size_t g = 0; g < rep2.lambda_grid.size(); ++g)
      for (std::size_t r = 0; r < rep2.orders.size(); ++r)
        if (rep2.values[g][r] < -rep2.tol * rep2.scales[g][r]) ++count;
    EXPECT_EQ(count, rep2.violations.size());
  }
}

TEST(CMProbe, EmptyGridRejected) {
  EXPECT_THROW(cm_probe_exp(diag({1, 1}), diag({1, 1}), 2, {}, 1e-12),
               std::invalid_argument);
  EXPECT_THROW(cm_probe_general_f(diag({1, 1}), diag({1, 1}), {{1.0, 1.0}}, {},
                                  2, 1e-12),
               std::invalid_argument);
}

TEST(CMProbe, CrossCheckAgainstFiniteDifferences) {
  Philox rng(41);
  auto rep = cm_probe_exp(random_hermitian(3, rng), random_psd(3, 3, rng), 4,
                          {0.0, 0.5, 1.0}, 1e-12, true);
  ASSERT_TRUE(rep.fd_max_deviation.has_value());
  EXPECT_LE(*rep.fd_max_deviation, 1e-5);
}

TEST(CMProbe, InvPowDiagonalClosedForm) {
  auto a = diag({1.0, 2.5});
  auto b = diag({0.5, 3.0});
  const double as[] = {1.0, 2.5}, bs[] = {0.5, 3.0};
  for (int p = 1; p <= 3; ++p) {
    auto rep = cm_probe_invpow(a, b, p, 4, 0.0, {0.0, 1.0});
    EXPECT_TRUE(rep.violations.empty());
    for (std::size_t g = 0; g < 2; ++g) {
      const double l = rep.lambda_grid[g];
      for (int r = 0; r <= 4; ++r) {
        // (-1)^r d^r/dl^r (a + l b)^{-p} = (p)_r b^r (a + l b)^{-p-r}
        double want = 0.0;
        for (int i = 0; i < 2; ++i) {
          double rising = 1.0;
          for (int k = 0; k < r; ++k) rising *= p + k;
          want += rising * std::pow(bs[i], r) * std::pow(as[i] + l * bs[i], -p - r);
        }
        EXPECT_LE(rel_diff(rep.values[g][r], want), 1e-12) << p << r << g;
      }
    }
  }
}

TEST(CMProbe, InvPowTwoByTwoNoViolations) {
  Philox root(43);
  for (int i = 0; i < 30; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_pd(2, rng);
    auto b = random_psd(2, 2, rng);
    for (int p = 1; p <= 4; ++p) {
      auto rep = cm_probe_invpow(a, b, p, 5, 1e-12, grid_0_5());
      EXPECT_TRUE(rep.violations.empty()) << i << " " << p;
    }
  }
}

TEST(CMProbe, InvPowZeroPowerIsConstant) {
  auto rep = cm_probe_invpow(diag({1, 2, 3}), diag({1, 0, 0}), 0, 3, 1e-12, {0, 1});
  EXPECT_EQ(rep.values[0][0], 3.0);
  EXPECT_EQ(rep.values[1][2], 0.0);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(CMProbe, InvPowSingularRejected) {
  EXPECT_THROW(cm_probe_invpow(diag({0, 1}), diag({0, 1}), 1, 2, 1e-12, {0.0, 1.0}),
               std::domain_error);
}

TEST(CMProbe, SingleTermMixtureReducesToExp) {
  Philox rng(47);
  auto a = random_psd(3, 3, rng);
  auto b = random_psd(3, 2, rng);
  std::vector<double> grid{0.0, 0.5, 1.5};
  auto mix = cm_probe_general_f(a, b, {{1.0, 1.0}}, grid, 4, 1e-12);
  auto ref = cm_probe_exp(a.scaled(-1.0), b, 4, grid, 1e-12);
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (int r = 0; r <= 4; ++r)
      EXPECT_LE(rel_diff(mix.values[g][r], ref.values[g][r]), 1e-13);
}

TEST(CMProbe, MixtureApproachesInversePower) {
  Philox rng(53);
  auto a = random_pd(2, rng);
  auto b = random_psd(2, 2, rng);
  const double mu = eigh(a).min();
  auto exact = cm_probe_invpow(a, b, 2, 3, 1e-12, {0.0});
  double prev = 1e300;
  for (int nodes : {8, 16, 32, 64}) {
    auto mix = cm_probe_general_f(a, b, inverse_power_mixture(2.0, nodes, mu),
                                  {0.0}, 3, 1e-12);
    double err = 0.0;
    for (int r = 0; r <= 3; ++r)
      err = std::max(err, rel_diff(mix.values[0][r], exact.values[0][r]));
    EXPECT_LE(err, 2.0 * prev + 1e-14) << nodes;
    prev = err;
  }
  EXPECT_LE(prev, 1e-6);
}

TEST(CMProbe, MixtureRejectsNegativeTerms) {
  EXPECT_THROW(cm_probe_general_f(diag({1, 1}), diag({1, 1}), {{-1.0, 1.0}},
                                  {0.0}, 2, 1e-12),
               std::invalid_argument);
  EXPECT_THROW(cm_probe_general_f(diag({1, 1}), diag({1, 1}), {{1.0, -1.0}},
                                  {0.0}, 2, 1e-12),
               std::invalid_argument);
}

// Series identity

TEST(Series, Scalar) {
  auto rep = series_identity_check(scalar(1.0), scalar(0.8), 0.5, 80);
  EXPECT_NEAR(rep.lhs, std::exp(1.0 - 0.4), 1e-14);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.rel_gap, 1e-10);
}

TEST(Series, ZeroMatrix) {
  auto rep = series_identity_check(HermitianMatrix::zero(3),
                                   HermitianMatrix::zero(3), 0.0, 10);
  EXPECT_EQ(rep.lhs, 3.0);
  EXPECT_EQ(rep.rhs_partial, 3.0);
  EXPECT_TRUE(rep.converged);
}

TEST(Series, RandomThreeByThree) {
  Philox root(59);
  for (int i = 0; i < 10; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto rep = series_identity_check(random_hermitian(3, rng),
                                     random_psd(3, 3, rng), 0.5, 80);
    EXPECT_TRUE(rep.converged) << i;
    EXPECT_LE(rep.terms, 80);
  }
}

TEST(Series, CapReportedWhenTooShort) {
  auto rep = series_identity_check(diag({3.0, -3.0}), diag({1, 1}), 0.0, 3);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.terms, 3);
}

// Integral representation

TEST(Laplace, ScalarGammaIntegral) {
  auto rep = laplace_rep_check(scalar(3.0), scalar(1.0), 0.0, 2.0, 16);
  EXPECT_NEAR(rep.direct, 1.0 / 9.0, 1e-16);
  EXPECT_LE(rel_diff(rep.quadrature, 1.0 / 9.0), 1e-13);
}

TEST(Laplace, DiagonalPowerOne) {
  auto rep = laplace_rep_check(diag({1.0, 2.0, 4.0}), diag({0, 0, 0}), 0.0, 1.0, 64);
  EXPECT_LE(rel_diff(rep.direct, 1.75), 1e-15);
  EXPECT_LE(rep.rel_error, 1e-6);
}

TEST(Laplace, RandomFractionalPower) {
  Philox root(61);
  for (int i = 0; i < 10; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto rep = laplace_rep_check(random_pd(3, rng), random_psd(3, 3, rng), 0.3,
                                 2.5, 64);
    EXPECT_LE(rep.rel_error, 1e-6) << i;
  }
}

TEST(Laplace, ErrorShrinksAsNodesDouble) {
  Philox root(67);
  for (int i = 0; i < 10; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_pd(3, rng);
    auto b = random_psd(3, 3, rng);
    double prev = 1e300;
    for (int nodes : {16, 32, 64, 128}) {
      double e = laplace_rep_check(a, b, 0.5, 2.0, nodes).rel_error;
      EXPECT_LE(e, std::max(2.0 * prev, 1e-14)) << i << " " << nodes;
      prev = e;
    }
  }
}

// Two-by-two non-negative basis

double min_entry(const CMatrix& m) {
  double v = 1e300;
  for (Eigen::Index i = 0; i < m.size(); ++i) v = std::min(v, m(i).real());
  return v;
}

double max_imag(const CMatrix& m) { return m.imag().cwiseAbs().maxCoeff(); }

TEST(NonnegBasis, DiagonalWithNonnegativeB) {
  CMatrix bm(2, 2);
  bm << 2.0, 0.5, 0.5, 1.0;
  auto nb = nonneg_basis_2x2(diag({2.0, 1.0}), HermitianMatrix(bm));
  EXPECT_LE(test::max_abs(nb.u - CMatrix::Identity(2, 2)), 1e-15);
}

TEST(NonnegBasis, SignFlip) {
  CMatrix bm(2, 2);
  bm << 1.0, -1.0, -1.0, 1.0;
  auto nb = nonneg_basis_2x2(diag({2.0, 1.0}), HermitianMatrix(bm));
  CMatrix u(2, 2);
  u << 1.0, 0.0, 0.0, -1.0;
  CMatrix want(2, 2);
  want << 1.0, 1.0, 1.0, 1.0;
  EXPECT_LE(test::max_abs(nb.u - u), 1e-15);
  EXPECT_LE(test::max_abs(nb.b_prime - want), 1e-15);
}

TEST(NonnegBasis, RandomPairs) {
  Philox root(71);
  for (int i = 0; i < 200; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_psd(2, 1 + i % 2, rng);
    auto b = random_psd(2, 1 + (i / 2) % 2, rng);
    auto nb = nonneg_basis_2x2(a, b);
    const double sa = norm(a), sb = norm(b);
    EXPECT_GE(min_entry(nb.a_prime), -1e-12 * sa);
    EXPECT_GE(min_entry(nb.b_prime), -1e-12 * sb);
    EXPECT_LE(max_imag(nb.a_prime), 1e-12 * sa);
    EXPECT_LE(max_imag(nb.b_prime), 1e-12 * sb);
    EXPECT_LE(test::max_abs(nb.u.adjoint() * nb.u - CMatrix::Identity(2, 2)),
              1e-13);
    auto ea = eigh(HermitianMatrix(nb.a_prime)).eigenvalues;
    auto eb = eigh(HermitianMatrix(nb.b_prime)).eigenvalues;
    EXPECT_LE((ea - eigh(a).eigenvalues).cwiseAbs().maxCoeff(), 1e-10 * std::max(sa, 1.0));
    EXPECT_LE((eb - eigh(b).eigenvalues).cwiseAbs().maxCoeff(), 1e-10 * std::max(sb, 1.0));
  }
}

TEST(NonnegBasis, PreservesCoefficientsWhichAreNonnegative) {
  Philox root(73);
  for (int i = 0; i < 30; ++i) {
    Philox rng = root.split(static_cast<std::uint64_t>(i));
    auto a = random_psd(2, 2, rng);
    auto b = random_psd(2, 2, rng);
    auto nb = nonneg_basis_2x2(a, b);
    HermitianMatrix ap(nb.a_prime), bp(nb.b_prime);
    const int p = 1 + i % 10;
    auto before = trace_poly(a, b, p);
    auto after = trace_poly(ap, bp, p);
    const double na = norm(a), nbm = norm(b);
    for (int r = 0; r <= p; ++r) {
      const double scale = binomial(p, r) * detail::coefficient_scale(na, nbm, 2, p, r);
      EXPECT_LE(std::abs(before.coeffs[r] - after.coeffs[r]), 1e-12 * scale);
      EXPECT_GE(after.coeffs[r], -1e-12 * scale);
    }
  }
}

TEST(NonnegBasis, RejectsBadInput) {
  EXPECT_THROW(nonneg_basis_2x2(diag({1, 1, 1}), diag({1, 1, 1})),
               std::invalid_argument);
  EXPECT_THROW(nonneg_basis_2x2(diag({1, -1}), diag({1, 1})), std::domain_error);
}

}  // namespace
}  // namespace bmv
