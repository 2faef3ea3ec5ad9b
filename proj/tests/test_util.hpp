#ifndef BMV_TEST_UTIL_HPP
#define BMV_TEST_UTIL_HPP

#include <cmath>
#include <complex>

#include "bmv/matcore.hpp"
#include "bmv/rng.hpp"

namespace bmv::test {

inline double rel_diff(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using bmv::random_pd;

/// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline CMatrix random_unitary(int n, Philox& rng) {
  CMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(z);
  return qr.householderQ() * CMatrix::Identity(n, n);
}

inline HermitianMatrix conjugate(const HermitianMatrix& m, const CMatrix& u) {
  return HermitianMatrix(CMatrix(u * m.mat() * u.adjoint()), m.classification());
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace bmv::test

#endif  // BMV_TEST_UTIL_HPP
