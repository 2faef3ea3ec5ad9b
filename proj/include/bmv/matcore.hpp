#ifndef BMV_MATCORE_HPP
#define BMV_MATCORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "bmv/exact.hpp"
#include "bmv/rng.hpp"

namespace bmv {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Relative eigenvalue tolerance for the positive classification.
inline constexpr double kEpsPsd = 1e-10;

enum class Classification { hermitian, positive, positive_definite };

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::hermitian: return "hermitian";
    case Classification::positive: return "positive";
    case Classification::positive_definite: return "positive-definite";
  }
  return "hermitian";
}

inline Classification classification_from_string(std::string_view s) {
  if (s == "hermitian") return Classification::hermitian;
  if (s == "positive" || s == "psd") return Classification::positive;
  if (s == "positive-definite" || s == "pd")
    return Classification::positive_definite;
  throw std::invalid_argument("unknown classification '" + std::string(s) +
                              "'");
}

/// Dense Hermitian matrix. Entries are symmetrized on construction so that
/// m(i,j) == conj(m(j,i)) holds bitwise. The classification is advisory
/// metadata; use sites that need positivity check the spectrum.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const CMatrix& m,
                           Classification c = Classification::hermitian)
      : m_(symmetrize(m)), class_(c) {}

  /// Exact Gaussian-rational matrix; the floating entries are its rounding.
  explicit HermitianMatrix(ExactMatrix exact,
                           Classification c = Classification::hermitian)
      : class_(c) {
    if (!exact.is_hermitian()) {
      throw std::invalid_argument("exact matrix is not Hermitian");
    }
    const int n = exact.n();
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = exact(i, j).to_complex();
    m_ = symmetrize(m);
    exact_ = std::move(exact);
  }

  static HermitianMatrix identity(int n) {
    if (n < 1) throw std::invalid_argument("dimension must be positive");
    return HermitianMatrix(ExactMatrix::identity(n),
                           Classification::positive_definite);
  }

  static HermitianMatrix zero(int n) {
    if (n < 1) throw std::invalid_argument("dimension must be positive");
    return HermitianMatrix(ExactMatrix(n), Classification::positive);
  }

  static HermitianMatrix diagonal(const RVector& d,
                                  Classification c = Classification::hermitian) {
    return HermitianMatrix(CMatrix(d.cast<Complex>().asDiagonal()), c);
  }

  int n() const { return static_cast<int>(m_.rows()); }
  const CMatrix& mat() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  Classification classification() const { return class_; }
  bool has_exact() const { return exact_.has_value(); }
  const ExactMatrix& exact() const {
    if (!exact_) throw std::invalid_argument("matrix carries no exact entries");
    return *exact_;
  }

  HermitianMatrix scaled(double s) const {
    Classification c = class_;
    if (s < 0) c = Classification::hermitian;
    if (s == 0 && c == Classification::positive_definite)
      c = Classification::positive;
    return HermitianMatrix(CMatrix(m_ * s), c);
  }

  friend HermitianMatrix operator+(const HermitianMatrix& a,
                                   const HermitianMatrix& b) {
    if (a.n() != b.n()) throw std::invalid_argument("dimension mismatch");
    Classification c = Classification::hermitian;
    if (a.class_ != Classification::hermitian &&
        b.class_ != Classification::hermitian) {
      c = (a.class_ == Classification::positive_definite ||
           b.class_ == Classification::positive_definite)
              ? Classification::positive_definite
              : Classification::positive;
    }
    return HermitianMatrix(CMatrix(a.m_ + b.m_), c);
  }

 private:
  static CMatrix symmetrize(const CMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("matrix not square");
    if (m.rows() < 1) throw std::invalid_argument("dimension must be positive");
    const auto n = m.rows();
    CMatrix s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s(i, i) = Complex(m(i, i).real(), 0.0);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        Complex v = (m(i, j) + std::conj(m(j, i))) * 0.5;
        s(i, j) = v;
        s(j, i) = std::conj(v);
      }
    }
    return s;
  }

  CMatrix m_;
  Classification class_ = Classification::hermitian;
  std::optional<ExactMatrix> exact_;
};

struct Spectrum {
  RVector eigenvalues;  // ascending
  CMatrix basis;        // columns are eigenvectors

  double norm() const {
    return std::max(std::abs(eigenvalues(0)),
                    std::abs(eigenvalues(eigenvalues.size() - 1)));
  }
  double min() const { return eigenvalues(0); }
  double max() const { return eigenvalues(eigenvalues.size() - 1); }
};

inline Spectrum eigh(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m.mat());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("Hermitian eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Spectral norm, max |eigenvalue|.
inline double norm(const HermitianMatrix& m) { return eigh(m).norm(); }

inline bool is_positive(const HermitianMatrix& m, double eps = kEpsPsd) {
  auto s = eigh(m);
  return s.min() >= -eps * s.norm();
}

inline bool is_positive_definite(const HermitianMatrix& m) {
  return eigh(m).min() > 0.0;
}

inline Classification classify(const HermitianMatrix& m) {
  auto s = eigh(m);
  if (s.min() > 0.0) return Classification::positive_definite;
  if (s.min() >= -kEpsPsd * s.norm()) return Classification::positive;
  return Classification::hermitian;
}

inline HermitianMatrix with_classification(const HermitianMatrix& m) {
  if (m.has_exact()) return HermitianMatrix(m.exact(), classify(m));
  return HermitianMatrix(m.mat(), classify(m));
}

// Matrix function tags.
struct Exp {};
struct Power {
  double q;
};
struct InvSqrt {};
using MatFn = std::variant<Exp, Power, InvSqrt>;

namespace detail {

[[noreturn]] inline void eigen_domain_error(const char* what, double ev) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": eigenvalue " << ev << " outside the function's domain";
  throw std::domain_error(os.str());
}

inline double apply_scalar(const MatFn& f, double x, double norm) {
  return std::visit(
      [&](const auto& tag) -> double {
        using T = std::decay_t<decltype(tag)>;
        if constexpr (std::is_same_v<T, Exp>) {
          return std::exp(x);
        } else if constexpr (std::is_same_v<T, InvSqrt>) {
          if (!(x > 0.0)) eigen_domain_error("inv_sqrt", x);
          return 1.0 / std::sqrt(x);
        } else {
          const double q = tag.q;
          if (q == std::floor(q) && q >= 0) return std::pow(x, q);
          if (q < 0) {
            if (!(x > 0.0)) eigen_domain_error("power (negative exponent)", x);
            return std::pow(x, q);
          }
          if (x < 0.0) {
            if (x < -kEpsPsd * norm) eigen_domain_error("power (fractional)", x);
            return 0.0;
          }
          return std::pow(x, q);
        }
      },
      f);
}

inline CMatrix from_spectrum(const Spectrum& s, const RVector& fvals) {
  return s.basis * fvals.cast<Complex>().asDiagonal() * s.basis.adjoint();
}

}  // namespace detail

inline HermitianMatrix matfn(const Spectrum& s, const MatFn& f) {
  RVector fv(s.eigenvalues.size());
  const double nrm = s.norm();
  for (Eigen::Index i = 0; i < fv.size(); ++i)
    fv(i) = detail::apply_scalar(f, s.eigenvalues(i), nrm);
  Classification c = Classification::hermitian;
  if (std::holds_alternative<Exp>(f) || std::holds_alternative<InvSqrt>(f) ||
      (std::holds_alternative<Power>(f) && std::get<Power>(f).q < 0)) {
    c = Classification::positive_definite;
  }
  return HermitianMatrix(detail::from_spectrum(s, fv), c);
}

/// f(M) = basis * diag(f(eigenvalues)) * basis^*.
inline HermitianMatrix matfn(const HermitianMatrix& m, const MatFn& f) {
  return matfn(eigh(m), f);
}

inline HermitianMatrix random_hermitian(int n, Philox& rng) {
  if (n < 1) throw std::invalid_argument("random_hermitian: n must be >= 1");
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.complex_normal();
  return HermitianMatrix(m);
}

/// Gram matrix G*G^* from an n x rank factor. In exact mode the factor has
/// small Gaussian-integer entries and the result carries exact entries.
inline HermitianMatrix random_psd(int n, int rank, Philox& rng,
                                  bool exact = false) {
  if (n < 1) throw std::invalid_argument("random_psd: n must be >= 1");
  if (rank < 1 || rank > n) {
    throw std::invalid_argument("random_psd: rank must lie in [1, n]");
  }
  if (exact) {
    ExactMatrix g(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < rank; ++j) {
        g(i, j) = GaussianRational(Rational(rng.uniform_int(-2, 2)),
                                   Rational(rng.uniform_int(-2, 2)));
      }
    }
    return HermitianMatrix(ExactMatrix::gram(g), Classification::positive);
  }
  CMatrix g(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) g(i, j) = rng.complex_normal();
  return HermitianMatrix(CMatrix(g * g.adjoint()), Classification::positive);
}

/// Positive-definite test instance G G^* / n + shift I; the shift bounds the
/// condition number.
inline HermitianMatrix random_pd(int n, Philox& rng, double shift = 0.5) {
  if (!(shift > 0.0)) throw std::invalid_argument("random_pd: shift must be > 0");
  auto g = random_psd(n, n, rng);
  return HermitianMatrix(CMatrix(g.mat() / static_cast<double>(n) +
                                 shift * CMatrix::Identity(n, n)),
                         Classification::positive_definite);
}

/// (a^-1, a^-1/2 b a^-1/2) from a single eigendecomposition of a.
inline std::pair<HermitianMatrix, HermitianMatrix> lemma1_transform(
    const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.n() != b.n()) {
    throw std::invalid_argument("lemma1_transform: dimension mismatch");
  }
  auto s = eigh(a);
  if (!(s.min() > 0.0)) {
    detail::eigen_domain_error("lemma1_transform: a is not positive-definite",
                               s.min());
  }
  HermitianMatrix inv = matfn(s, Power{-1.0});
  HermitianMatrix isq = matfn(s, InvSqrt{});
  Classification cb = b.classification() == Classification::hermitian
                          ? Classification::hermitian
                          : b.classification();
  return {inv, HermitianMatrix(CMatrix(isq.mat() * b.mat() * isq.mat()), cb)};
}

}  // namespace bmv

#endif  // BMV_MATCORE_HPP
