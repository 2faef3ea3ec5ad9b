#include <gtest/gtest.h>

#include <cmath>

#include "bmv/numeric.hpp"
#include "bmv/trace_poly.hpp"
#include "bmv/words.hpp"
#include "test_util.hpp"

namespace bmv {
namespace {

using test::rel_diff;

TEST(TracePoly, IdentityPair) {
  auto id = HermitianMatrix::identity(2);
  auto poly = trace_poly(id, id, 3);
  ASSERT_EQ(poly.coeffs.size(), 4u);
  std::vector<double> want{2, 6, 6, 2};
  for (int r = 0; r <= 3; ++r) EXPECT_DOUBLE_EQ(poly.coeffs[r], want[r]);
}

TEST(TracePoly, ComplementaryProjectors) {
  auto a = HermitianMatrix::diagonal(RVector(Eigen::Vector2d(1, 0)));
  auto b = HermitianMatrix::diagonal(RVector(Eigen::Vector2d(0, 1)));
  auto poly = trace_poly(a, b, 4);
  std::vector<double> want{1, 0, 0, 0, 1};
  for (int r = 0; r <= 4; ++r) EXPECT_DOUBLE_EQ(poly.coeffs[r], want[r]);
}

TEST(TracePoly, MatchesBruteForce) {
  Philox rng(100);
  auto a = random_hermitian(3, rng), b = random_hermitian(3, rng);
  auto poly = trace_poly(a, b, 6);
  for (int r = 0; r <= 6; ++r) {
    double scale = std::pow(norm(a), 6 - r) * std::pow(norm(b), r) * 3;
    EXPECT_LE(std::abs(poly.coeffs[r] - coeff_bruteforce(a, b, 6, r)),
              1e-12 * scale)
        << "r=" << r;
  }
}

TEST(TracePoly, EndpointsArePowerTraces) {
  Philox rng(101);
  auto a = random_psd(3, 3, rng), b = random_psd(3, 3, rng);
  auto poly = trace_poly(a, b, 7);
  double ta = matfn(a, Power{7}).mat().trace().real();
  double tb = matfn(b, Power{7}).mat().trace().real();
  EXPECT_LE(rel_diff(poly.coeffs[0], ta), 1e-12);
  EXPECT_LE(rel_diff(poly.coeffs[7], tb), 1e-12);
}

TEST(TracePoly, RMaxTruncates) {
  Philox rng(102);
  auto a = random_hermitian(2, rng), b = random_hermitian(2, rng);
  auto full = trace_poly(a, b, 5);
  auto part = trace_poly(a, b, 5, 2);
  ASSERT_EQ(part.coeffs.size(), 3u);
  for (int r = 0; r <= 2; ++r) EXPECT_DOUBLE_EQ(part.coeffs[r], full.coeffs[r]);
}

TEST(TracePoly, Errors) {
  auto a = HermitianMatrix::identity(2), b = HermitianMatrix::identity(3);
  EXPECT_THROW(trace_poly(a, b, 3), std::invalid_argument);
  EXPECT_THROW(trace_poly(a, a, -1), std::invalid_argument);
  EXPECT_THROW(trace_poly(a, a, 2, 3), std::invalid_argument);
}

TEST(TracePoly, PowerZero) {
  auto a = HermitianMatrix::identity(3);
  auto poly = trace_poly(a, a, 0);
  ASSERT_EQ(poly.coeffs.size(), 1u);
  EXPECT_DOUBLE_EQ(poly.coeffs[0], 3.0);
}

TEST(TracePoly, SwapSymmetry) {
  Philox rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4, p = 1 + trial % 9;
    auto a = random_psd(n, n, rng), b = random_psd(n, n, rng);
    auto ab = trace_poly(a, b, p), ba = trace_poly(b, a, p);
    for (int r = 0; r <= p; ++r)
      ASSERT_LE(rel_diff(ab.coeffs[r], ba.coeffs[p - r]), 1e-12);
  }
}

TEST(TracePoly, Homogeneity) {
  Philox rng(104);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4, p = 1 + trial % 8;
    auto a = random_psd(n, n, rng), b = random_psd(n, n, rng);
    const double s = 0.5 + rng.uniform() * 1.5, t = 0.5 + rng.uniform() * 1.5;
    auto base = trace_poly(a, b, p);
    auto sc = trace_poly(a.scaled(s), b.scaled(t), p);
    for (int r = 0; r <= p; ++r) {
      ASSERT_LE(rel_diff(sc.coeffs[r],
                         std::pow(s, p - r) * std::pow(t, r) * base.coeffs[r]),
                1e-12);
    }
  }
}

TEST(TracePoly, UnitaryInvariance) {
  Philox rng(105);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4, p = 1 + trial % 8;
    auto a = random_psd(n, n, rng), b = random_psd(n, n, rng);
    CMatrix u = test::random_unitary(n, rng);
    auto base = trace_poly(a, b, p);
    auto rot = trace_poly(test::conjugate(a, u), test::conjugate(b, u), p);
    for (int r = 0; r <= p; ++r)
      ASSERT_LE(rel_diff(rot.coeffs[r], base.coeffs[r]), 1e-10);
  }
}

TEST(TracePoly, CommutingCaseIsBinomial) {
  Philox rng(106);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4, p = 1 + trial % 9;
    RVector da(n), db(n);
    for (int i = 0; i < n; ++i) {
      da(i) = rng.uniform() * 2;
      db(i) = rng.uniform() * 2;
    }
    auto a = HermitianMatrix::diagonal(da), b = HermitianMatrix::diagonal(db);
    auto poly = trace_poly(a, b, p);
    for (int r = 0; r <= p; ++r) {
      double want = 0;
      for (int i = 0; i < n; ++i)
        want += std::pow(da(i), p - r) * std::pow(db(i), r);
      want *= static_cast<double>(binomial(p, r));
      ASSERT_LE(rel_diff(poly.coeffs[r], want), 1e-10);
    }
  }
}

TEST(DerivativeAtZero, OrderZeroIsPowerTrace) {
  Philox rng(107);
  auto a = random_psd(3, 3, rng), b = random_psd(3, 3, rng);
  double tr = matfn(a, Power{4}).mat().trace().real();
  EXPECT_LE(rel_diff(derivative_at_zero(a, b, 4, 0).value, tr), 1e-12);
}

TEST(DerivativeAtZero, IdentityPair) {
  auto id = HermitianMatrix::identity(2);
  EXPECT_DOUBLE_EQ(derivative_at_zero(id, id, 3, 2).value, 12.0);
}

TEST(DerivativeAtZero, BeyondDegreeIsFlaggedZero) {
  auto id = HermitianMatrix::identity(2);
  auto d = derivative_at_zero(id, id, 3, 4);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_TRUE(d.beyond_degree);
}

TEST(DerivativeAtZero, MatchesFiniteDifferences) {
  Philox rng(108);
  auto a = random_hermitian(3, rng), b = random_hermitian(3, rng);
  auto f = [&](double l) {
    return matfn(HermitianMatrix(CMatrix(a.mat() + l * b.mat())), Power{5})
        .mat()
        .trace()
        .real();
  };
  auto fd = richardson_derivative(f, 0.0, 3, 0.5);
  double d = derivative_at_zero(a, b, 5, 3).value;
  double scale = 6 * std::pow(norm(a), 2) * std::pow(norm(b), 3) * 3;
  EXPECT_LE(std::abs(fd.value - d), 1e-7 * scale);
}

double directional(const HermitianMatrix& a, const HermitianMatrix& b,
                   const HermitianMatrix& h, bool wrt_a, int p, int r) {
  const double eps = 1e-4;
  auto at = [&](double t) {
    HermitianMatrix x(CMatrix((wrt_a ? a : b).mat() + t * h.mat()));
    return wrt_a ? trace_poly(x, b, p).coeffs[r] : trace_poly(a, x, p).coeffs[r];
  };
  // fourth-order central difference
  return (-at(2 * eps) + 8 * at(eps) - 8 * at(-eps) + at(-2 * eps)) /
         (12 * eps);
}

TEST(CoeffGradient, PureAPower) {
  Philox rng(109);
  auto a = random_hermitian(3, rng);
  auto zero = HermitianMatrix::zero(3);
  auto [ga, gb] = coeff_gradient(a, zero, 5, 0);
  CMatrix want = 5.0 * matfn(a, Power{4}).mat();
  EXPECT_LE(test::max_abs(ga.mat() - want), 1e-12 * want.norm());
  EXPECT_EQ(test::max_abs(gb.mat()), 0.0);
}

TEST(CoeffGradient, PureBPower) {
  Philox rng(110);
  auto a = random_hermitian(3, rng), b = random_hermitian(3, rng);
  auto [ga, gb] = coeff_gradient(a, b, 4, 4);
  CMatrix want = 4.0 * matfn(b, Power{3}).mat();
  EXPECT_LE(test::max_abs(gb.mat() - want), 1e-12 * want.norm());
  EXPECT_EQ(test::max_abs(ga.mat()), 0.0);
}

TEST(CoeffGradient, MatchesFiniteDifferences) {
  Philox rng(111);
  auto a = random_psd(3, 3, rng), b = random_psd(3, 3, rng);
  auto [ga, gb] = coeff_gradient(a, b, 6, 3);
  for (int dir = 0; dir < 20; ++dir) {
    auto h = random_hermitian(3, rng);
    double pa = (ga.mat() * h.mat()).trace().real();
    double pb = (gb.mat() * h.mat()).trace().real();
    EXPECT_LE(rel_diff(pa, directional(a, b, h, true, 6, 3)), 1e-5);
    EXPECT_LE(rel_diff(pb, directional(a, b, h, false, 6, 3)), 1e-5);
  }
}

TEST(CoeffGradient, Errors) {
  auto id = HermitianMatrix::identity(2);
  EXPECT_THROW(coeff_gradient(id, id, 0, 0), std::invalid_argument);
  EXPECT_THROW(coeff_gradient(id, id, 3, 4), std::invalid_argument);
}

}  // namespace
}  // namespace bmv
