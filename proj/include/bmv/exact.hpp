#ifndef BMV_EXACT_HPP
#define BMV_EXACT_HPP

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bmv {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// Exact value of a finite double (every finite double is a dyadic rational).
inline Rational to_rational(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("cannot represent non-finite value " +
                            std::to_string(x) + " as a rational");
  }
  int exp = 0;
  double mant = std::frexp(x, &exp);
  // mant * 2^53 is an exact integer.
  auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r{BigInt(scaled)};
  BigInt pow2 = BigInt(1) << std::abs(exp);
  if (exp >= 0) {
    r *= Rational(pow2);
  } else {
    r /= Rational(pow2);
  }
  return r;
}

/// Nearest multiple of 2^-bits to x.
inline Rational round_dyadic(double x, int bits) {
  double scaled = std::nearbyint(std::ldexp(x, bits));
  Rational r = to_rational(scaled);
  r /= Rational(BigInt(1) << bits);
  return r;
}

/// Complex number with rational real and imaginary parts.
struct GaussianRational {
  Rational re{0};
  Rational im{0};

  GaussianRational() = default;
  GaussianRational(Rational r, Rational i = Rational(0))
      : re(std::move(r)), im(std::move(i)) {}

  GaussianRational& operator+=(const GaussianRational& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  GaussianRational& operator-=(const GaussianRational& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  friend GaussianRational operator+(GaussianRational a,
                                    const GaussianRational& b) {
    return a += b;
  }
  friend GaussianRational operator-(GaussianRational a,
                                    const GaussianRational& b) {
    return a -= b;
  }
  friend GaussianRational operator*(const GaussianRational& a,
                                    const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const GaussianRational& a,
                         const GaussianRational& b) {
    return a.re == b.re && a.im == b.im;
  }

  GaussianRational conj() const { return {re, -im}; }
  std::complex<double> to_complex() const {
    return {re.convert_to<double>(), im.convert_to<double>()};
  }
};

/// Dense square matrix over the Gaussian rationals, row-major.
class ExactMatrix {
 public:
  ExactMatrix() = default;
  explicit ExactMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n) {}

  static ExactMatrix identity(int n) {
    ExactMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = GaussianRational(Rational(1));
    return m;
  }

  int n() const { return n_; }

  GaussianRational& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * n_ + j];
  }
  const GaussianRational& operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * n_ + j];
  }

  friend ExactMatrix operator*(const ExactMatrix& a, const ExactMatrix& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("exact matrix size mismatch");
    ExactMatrix c(a.n_);
    for (int i = 0; i < a.n_; ++i) {
      for (int k = 0; k < a.n_; ++k) {
        const auto& aik = a(i, k);
        if (aik.re == 0 && aik.im == 0) continue;
        for (int j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    }
    return c;
  }

  friend bool operator==(const ExactMatrix& a, const ExactMatrix& b) {
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

  GaussianRational trace() const {
    GaussianRational t;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  /// G * G^*.
  static ExactMatrix gram(const ExactMatrix& g) {
    ExactMatrix c(g.n_);
    for (int i = 0; i < g.n_; ++i) {
      for (int j = 0; j < g.n_; ++j) {
        GaussianRational s;
        for (int k = 0; k < g.n_; ++k) s += g(i, k) * g(j, k).conj();
        c(i, j) = std::move(s);
      }
    }
    return c;
  }

  bool is_hermitian() const {
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        if (!((*this)(i, j) == (*this)(j, i).conj())) return false;
      }
    }
    return true;
  }

 private:
  int n_ = 0;
  std::vector<GaussianRational> data_;
};

}  // namespace bmv

#endif  // BMV_EXACT_HPP
