#ifndef BMV_TRACE_POLY_HPP
#define BMV_TRACE_POLY_HPP

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bmv/matcore.hpp"

namespace bmv {

/// Thrown when a computed quantity violates an internal numerical contract
/// (for example a trace that should be real carries a large imaginary part).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficients c_{p,0..r_max} of lambda -> Tr(A + lambda B)^p.
struct TracePolynomial {
  int p = 0;
  std::vector<double> coeffs;
};

/// Matrix polynomial truncated at degree `deg`: sum_j data[j] * lambda^j.
class TruncatedPolyMatrix {
 public:
  TruncatedPolyMatrix(int n, int deg)
      : n_(n), data_(static_cast<std::size_t>(deg) + 1, CMatrix::Zero(n, n)) {}

  static TruncatedPolyMatrix identity(int n, int deg) {
    TruncatedPolyMatrix t(n, deg);
    t.data_[0] = CMatrix::Identity(n, n);
    return t;
  }

  int n() const { return n_; }
  int deg() const { return static_cast<int>(data_.size()) - 1; }
  CMatrix& operator[](int j) { return data_[static_cast<std::size_t>(j)]; }
  const CMatrix& operator[](int j) const {
    return data_[static_cast<std::size_t>(j)];
  }

  /// (a + lambda b) * this, truncated; only degrees <= max_deg are nonzero.
  TruncatedPolyMatrix left_multiply(const CMatrix& a, const CMatrix& b,
                                    int max_deg) const {
    TruncatedPolyMatrix out(n_, deg());
    const int top = std::min(max_deg, deg());
    for (int j = 0; j <= top; ++j) {
      out[j].noalias() = a * (*this)[j];
      if (j > 0) out[j].noalias() += b * (*this)[j - 1];
    }
    return out;
  }

 private:
  int n_;
  std::vector<CMatrix> data_;
};

namespace detail {

inline void check_pair(const HermitianMatrix& a, const HermitianMatrix& b,
                       const char* op) {
  if (a.n() != b.n()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.n()) + " vs " +
                                std::to_string(b.n()) + ")");
  }
}

/// T_0..T_p where T_k holds the weight-j word sums of length k, j <= r_max.
inline std::vector<TruncatedPolyMatrix> power_table(const HermitianMatrix& a,
                                                    const HermitianMatrix& b,
                                                    int p, int r_max) {
  std::vector<TruncatedPolyMatrix> t;
  t.reserve(static_cast<std::size_t>(p) + 1);
  t.push_back(TruncatedPolyMatrix::identity(a.n(), r_max));
  for (int k = 1; k <= p; ++k) {
    t.push_back(t.back().left_multiply(a.mat(), b.mat(), std::min(k, r_max)));
  }
  return t;
}

inline double coefficient_scale(double na, double nb, int n, int p, int r) {
  return std::pow(na, p - r) * std::pow(nb, r) * n;
}

/// Real part of a trace that must be real up to rounding.
inline double real_trace(Complex tr, double scale, const char* what) {
  if (std::abs(tr.imag()) > 1e-9 * scale) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": imaginary residue " << tr.imag() << " exceeds 1e-9 * "
       << scale;
    throw NumericalError(os.str());
  }
  return tr.real();
}

}  // namespace detail

/// Coefficients of Tr(A + lambda B)^p up to lambda^{r_max} (default p), by
/// the recurrence T_k[j] = A T_{k-1}[j] + B T_{k-1}[j-1], T_0 = I.
inline TracePolynomial trace_poly(const HermitianMatrix& a,
                                  const HermitianMatrix& b, int p,
                                  int r_max = -1) {
  detail::check_pair(a, b, "trace_poly");
  if (p < 0) throw std::invalid_argument("trace_poly: p must be >= 0");
  if (r_max < 0) r_max = p;
  if (r_max > p) throw std::invalid_argument("trace_poly: r_max must be <= p");

  TruncatedPolyMatrix t = TruncatedPolyMatrix::identity(a.n(), r_max);
  for (int k = 1; k <= p; ++k) {
    t = t.left_multiply(a.mat(), b.mat(), std::min(k, r_max));
  }
  const double na = norm(a), nb = norm(b);
  TracePolynomial out{p, std::vector<double>(static_cast<std::size_t>(r_max) + 1)};
  for (int j = 0; j <= r_max; ++j) {
    double scale = detail::coefficient_scale(na, nb, a.n(), p, j);
    out.coeffs[static_cast<std::size_t>(j)] =
        detail::real_trace(t[j].trace(), scale, "trace_poly");
  }
  return out;
}

struct DerivativeAtZero {
  double value = 0.0;
  bool beyond_degree = false;  // r > p: the derivative vanishes identically
};

/// r-th lambda-derivative of Tr(A + lambda B)^p at lambda = 0, i.e. r! c_{p,r}.
inline DerivativeAtZero derivative_at_zero(const HermitianMatrix& a,
                                           const HermitianMatrix& b, int p,
                                           int r) {
  detail::check_pair(a, b, "derivative_at_zero");
  if (p < 0 || r < 0) {
    throw std::invalid_argument("derivative_at_zero: p and r must be >= 0");
  }
  if (r > p) return {0.0, true};
  auto poly = trace_poly(a, b, p, r);
  return {std::tgamma(r + 1.0) * poly.coeffs.back(), false};
}

/// Hermitian gradients of c_{p,r} with respect to A and B.
///
/// Differentiating one letter of every word leaves Tr(H * suffix * prefix);
/// prefix and suffix sums are entries of the same power table, so
///   S_A = sum_m sum_j T_{p-1-m}[r-j] T_m[j],
///   S_B = sum_m sum_j T_{p-1-m}[r-1-j] T_m[j],
/// and the gradient is the Hermitian part of S.
inline std::pair<HermitianMatrix, HermitianMatrix> coeff_gradient(
    const HermitianMatrix& a, const HermitianMatrix& b, int p, int r) {
  detail::check_pair(a, b, "coeff_gradient");
  if (p < 1) throw std::invalid_argument("coeff_gradient: p must be >= 1");
  if (r < 0 || r > p) {
    throw std::invalid_argument("coeff_gradient: r must lie in [0, p]");
  }
  auto table = detail::power_table(a, b, p - 1, r);
  const int n = a.n();
  CMatrix sa = CMatrix::Zero(n, n);
  CMatrix sb = CMatrix::Zero(n, n);
  for (int m = 0; m < p; ++m) {
    const auto& pre = table[static_cast<std::size_t>(m)];
    const auto& suf = table[static_cast<std::size_t>(p - 1 - m)];
    for (int j = 0; j <= std::min(m, r); ++j) {
      if (r - j <= p - 1 - m) sa.noalias() += suf[r - j] * pre[j];
      if (r - 1 - j >= 0 && r - 1 - j <= p - 1 - m)
        sb.noalias() += suf[r - 1 - j] * pre[j];
    }
  }
  return {HermitianMatrix(sa), HermitianMatrix(sb)};
}

}  // namespace bmv

#endif  // BMV_TRACE_POLY_HPP
