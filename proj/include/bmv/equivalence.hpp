#ifndef BMV_EQUIVALENCE_HPP
#define BMV_EQUIVALENCE_HPP

#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "bmv/matcore.hpp"
#include "bmv/numeric.hpp"
#include "bmv/trace_poly.hpp"

namespace bmv {

/// Upper bound on ||A|| + |lambda| ||B|| accepted by the exponential routines.
inline constexpr double kExpNormGuard = 200.0;

/// Ordered positive parts i_1..i_{r+1}.
struct Composition {
  std::vector<int> parts;
  int total() const {
    int s = 0;
    for (int v : parts) s += v;
    return s;
  }
};

/// Visits compositions of `total` into `count` positive parts in
/// lexicographic order.
template <typename Fn>
void for_each_composition(int total, int count, Fn&& fn) {
  if (count < 1 || total < count) return;
  Composition c{std::vector<int>(static_cast<std::size_t>(count), 1)};
  auto rec = [&](auto&& self, int slot, int remaining) -> void {
    if (slot == count - 1) {
      c.parts[static_cast<std::size_t>(slot)] = remaining;
      fn(static_cast<const Composition&>(c));
      return;
    }
    const int slots_after = count - 1 - slot;
    for (int v = 1; v <= remaining - slots_after; ++v) {
      c.parts[static_cast<std::size_t>(slot)] = v;
      self(self, slot + 1, remaining - v);
    }
  };
  rec(rec, 0, total);
}

inline std::int64_t count_compositions(int total, int count) {
  std::int64_t k = 0;
  for_each_composition(total, count, [&](const Composition&) { ++k; });
  return k;
}

/// A derivative value together with the sum of absolute values of the terms
/// that produced it.
struct ScaledValue {
  double value = 0.0;
  double scale = 0.0;
};

namespace detail {

inline void require_pd(const Spectrum& s, const char* what) {
  if (!(s.min() > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": matrix is not positive-definite (smallest eigenvalue "
       << s.min() << ")";
    throw std::domain_error(os.str());
  }
}

/// (-1)^r r! sum over compositions of p+r into r+1 parts of
/// Tr(a^{-i1} b a^{-i2} b ... b a^{-i_{r+1}}).
inline ScaledValue inverse_power_derivative_scaled(const Spectrum& sa,
                                                   const CMatrix& b, int p,
                                                   int r) {
  const auto n = b.rows();
  // inv[k] = a^{-k}, invb[k] = a^{-k} b for k = 1..p
  std::vector<CMatrix> inv(static_cast<std::size_t>(p) + 1);
  std::vector<CMatrix> invb(static_cast<std::size_t>(p) + 1);
  for (int k = 1; k <= p; ++k) {
    Eigen::VectorXd d = sa.eigenvalues.array().pow(-static_cast<double>(k));
    inv[k] = sa.basis * d.cast<Complex>().asDiagonal() * sa.basis.adjoint();
    invb[k] = inv[k] * b;
  }
  std::vector<double> terms;
  double imag = 0.0;
  std::vector<CMatrix> prefix(static_cast<std::size_t>(r) + 1);
  prefix[0] = CMatrix::Identity(n, n);
  // Depth-first over compositions, sharing prefix products.
  auto rec = [&](auto&& self, int slot, int remaining) -> void {
    if (slot == r) {
      Complex t = (prefix[r] * inv[remaining]).trace();
      terms.push_back(t.real());
      imag += t.imag();
      return;
    }
    const int slots_after = r - slot;
    for (int v = 1; v <= remaining - slots_after; ++v) {
      prefix[slot + 1].noalias() = prefix[slot] * invb[v];
      self(self, slot + 1, remaining - v);
    }
  };
  rec(rec, 0, p + r);
  double abs_sum = 0.0;
  for (double t : terms) abs_sum += std::abs(t);
  const double fac = factorial(r);
  const double sign = (r % 2 == 0) ? 1.0 : -1.0;
  double sum = pairwise_sum(terms);
  real_trace(Complex(sum, imag), abs_sum + 1e-300, "inverse_power_derivative");
  return {sign * fac * sum, fac * abs_sum};
}

}  // namespace detail

/// r-th lambda-derivative of Tr(a + lambda b)^{-p} at lambda = 0.
inline ScaledValue inverse_power_derivative_scaled(const HermitianMatrix& a,
                                                   const HermitianMatrix& b,
                                                   int p, int r) {
  detail::check_pair(a, b, "inverse_power_derivative");
  if (p < 1) throw std::invalid_argument("inverse_power_derivative: p >= 1");
  if (r < 0) throw std::invalid_argument("inverse_power_derivative: r >= 0");
  auto sa = eigh(a);
  detail::require_pd(sa, "inverse_power_derivative");
  return detail::inverse_power_derivative_scaled(sa, b.mat(), p, r);
}

inline double inverse_power_derivative(const HermitianMatrix& a,
                                       const HermitianMatrix& b, int p, int r) {
  return inverse_power_derivative_scaled(a, b, p, r).value;
}

struct Lemma1Report {
  int p = 0;
  int r = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  double rel_residual = 0.0;  // abs_residual / scale
  double scale = 0.0;         // r! * sum |terms| of the composition sum
  double tol = 0.0;
  bool pass = false;
};

/// Checks d^r/dl^r Tr(a + l b)^{-p} at 0 against
/// p/(p+r) (-1)^r d^r/dl^r Tr(A + l B)^{p+r} at 0, A = a^-1,
/// B = a^{-1/2} b a^{-1/2}. The two sides share no code beyond eigh.
inline Lemma1Report verify_lemma1(const HermitianMatrix& a,
                                  const HermitianMatrix& b, int p, int r,
                                  double tol) {
  if (p < 1) throw std::invalid_argument("verify_lemma1: p must be >= 1");
  if (r < 0) throw std::invalid_argument("verify_lemma1: r must be >= 0");
  Lemma1Report rep;
  rep.p = p;
  rep.r = r;
  rep.tol = tol;
  auto left = inverse_power_derivative_scaled(a, b, p, r);
  auto [big_a, big_b] = lemma1_transform(a, b);
  const double sign = (r % 2 == 0) ? 1.0 : -1.0;
  const double factor = static_cast<double>(p) / (p + r) * sign;
  rep.lhs = left.value;
  rep.rhs = factor * derivative_at_zero(big_a, big_b, p + r, r).value;
  rep.abs_residual = std::abs(rep.lhs - rep.rhs);
  rep.scale = left.scale;
  rep.rel_residual = rep.scale > 0.0 ? rep.abs_residual / rep.scale
                                     : (rep.abs_residual == 0.0 ? 0.0 : 1.0);
  rep.pass = rep.rel_residual <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Derivatives of Tr exp(A - lambda B)

namespace detail {

inline void exp_guard(double na, double nb, double lambda) {
  if (na + std::abs(lambda) * nb > kExpNormGuard) {
    std::ostringstream os;
    os << "exponential overflow guard: ||A|| + |lambda| ||B|| = "
       << na + std::abs(lambda) * nb << " exceeds " << kExpNormGuard;
    throw std::domain_error(os.str());
  }
}

}  // namespace detail

namespace detail {

// Block-augmentation kernel without the norm guard. Callers either check the
// guard or know the exponent is negative semidefinite.
inline double exp_trace_derivative_kernel(const HermitianMatrix& a,
                                          const HermitianMatrix& b, int r,
                                          double lambda, double nb) {
  const auto n = a.n();
  const CMatrix x = a.mat() - lambda * b.mat();
  auto sx = eigh(HermitianMatrix(x));
  if (r == 0) return sx.eigenvalues.array().exp().sum();
  const auto big = (r + 1) * n;
  CMatrix aug = CMatrix::Zero(big, big);
  for (int k = 0; k <= r; ++k) {
    aug.block(k * n, k * n, n, n) = x;
    if (k < r) aug.block(k * n, (k + 1) * n, n, n) = -b.mat();
  }
  CMatrix e = aug.exp();
  Complex tr = e.block(0, r * n, n, n).trace() * factorial(r);
  const double scale = std::pow(nb, r) * n * std::exp(sx.max());
  return real_trace(tr, scale, "exp_trace_derivative");
}

}  // namespace detail

/// r-th derivative of lambda -> Tr exp(A - lambda B) by block augmentation:
/// the exponential of the block-bidiagonal matrix with A - lambda B on the
/// diagonal and -B above it carries f^{(r)} / r! (as a matrix) in its top
/// right block.
inline double exp_trace_derivative(const HermitianMatrix& a,
                                   const HermitianMatrix& b, int r,
                                   double lambda) {
  detail::check_pair(a, b, "exp_trace_derivative");
  if (r < 0) throw std::invalid_argument("exp_trace_derivative: r >= 0");
  const double na = norm(a), nb = norm(b);
  detail::exp_guard(na, nb, lambda);
  return detail::exp_trace_derivative_kernel(a, b, r, lambda, nb);
}

/// Same derivative by Richardson-extrapolated central differences of the
/// spectrally evaluated trace; independent of the block construction.
inline DerivativeEstimate exp_trace_derivative_fd(const HermitianMatrix& a,
                                                  const HermitianMatrix& b,
                                                  int r, double lambda) {
  detail::check_pair(a, b, "exp_trace_derivative_fd");
  const double nb = norm(b);
  auto f = [&](double l) {
    HermitianMatrix x(CMatrix(a.mat() - l * b.mat()));
    return eigh(x).eigenvalues.array().exp().sum();
  };
  const double h = 1.0 / (1.0 + nb);
  return richardson_derivative(f, lambda, r, h);
}

// ---------------------------------------------------------------------------
// Complete monotonicity probes

struct CMViolation {
  double lambda = 0.0;
  int order = 0;
  double value = 0.0;
  double scale = 0.0;
};

/// (-1)^r f^{(r)}(lambda) on a grid. values[g][r] and scales[g][r] are indexed
/// by grid point and order; a violation is any value < -tol * scale.
struct CMReport {
  std::string mode;
  std::vector<double> lambda_grid;
  std::vector<int> orders;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> scales;
  double min_signed_value = 0.0;
  double tol = 0.0;
  std::vector<CMViolation> violations;
  // Largest relative disagreement with finite differences (orders <= 4),
  // when the cross-check was requested.
  std::optional<double> fd_max_deviation;
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("empty lambda grid");
  for (double l : grid) {
    if (!(l >= 0.0)) {
      throw std::invalid_argument("lambda grid values must be >= 0");
    }
  }
}

inline CMReport make_report(std::string mode, const std::vector<double>& grid,
                            int r_max, double tol) {
  if (r_max < 0) throw std::invalid_argument("r_max must be >= 0");
  CMReport rep;
  rep.mode = std::move(mode);
  rep.lambda_grid = grid;
  for (int r = 0; r <= r_max; ++r) rep.orders.push_back(r);
  rep.tol = tol;
  rep.values.assign(grid.size(), std::vector<double>(r_max + 1, 0.0));
  rep.scales.assign(grid.size(), std::vector<double>(r_max + 1, 0.0));
  return rep;
}

inline void finalize_report(CMReport& rep) {
  bool first = true;
  for (std::size_t g = 0; g < rep.lambda_grid.size(); ++g) {
    for (std::size_t r = 0; r < rep.orders.size(); ++r) {
      double v = rep.values[g][r];
      if (first || v < rep.min_signed_value) rep.min_signed_value = v;
      first = false;
      if (v < -rep.tol * rep.scales[g][r]) {
        rep.violations.push_back({rep.lambda_grid[g], rep.orders[r], v,
                                  rep.scales[g][r]});
      }
    }
  }
}

inline double relative_gap(double a, double b, double scale) {
  double d = std::abs(a - b);
  return scale > 0.0 ? d / scale : d;
}

}  // namespace detail

/// Probe of lambda -> Tr exp(A - lambda B). The scale for order r is
/// ||B||^r Tr exp(A - lambda B), an upper bound on |f^{(r)}(lambda)|.
inline CMReport cm_probe_exp(const HermitianMatrix& a, const HermitianMatrix& b,
                             int r_max, const std::vector<double>& grid,
                             double tol, bool cross_check = false) {
  detail::check_pair(a, b, "cm_probe_exp");
  detail::check_grid(grid);
  if (!is_positive(b)) throw std::domain_error("cm_probe_exp: B must be positive");
  auto rep = detail::make_report("exp", grid, r_max, tol);
  const double nb = norm(b);
  double fd_dev = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double l = grid[g];
    const double f0 = exp_trace_derivative(a, b, 0, l);
    for (int r = 0; r <= r_max; ++r) {
      double d = exp_trace_derivative(a, b, r, l);
      double sign = (r % 2 == 0) ? 1.0 : -1.0;
      rep.values[g][r] = sign * d;
      rep.scales[g][r] = std::pow(nb, r) * f0;
      if (cross_check && r <= 4) {
        auto fd = exp_trace_derivative_fd(a, b, r, l);
        fd_dev = std::max(fd_dev, detail::relative_gap(d, fd.value,
                                                       rep.scales[g][r]));
      }
    }
  }
  if (cross_check) rep.fd_max_deviation = fd_dev;
  detail::finalize_report(rep);
  return rep;
}

/// Probe of lambda -> Tr(A + lambda B)^{-p} for integer p >= 0; derivatives at
/// lambda > 0 come from re-basing a = A + lambda B.
inline CMReport cm_probe_invpow(const HermitianMatrix& a,
                                const HermitianMatrix& b, int p, int r_max,
                                double tol,
                                const std::vector<double>& grid = {0.0}) {
  detail::check_pair(a, b, "cm_probe_invpow");
  detail::check_grid(grid);
  if (p < 0) throw std::invalid_argument("cm_probe_invpow: p must be >= 0");
  if (!is_positive(b)) {
    throw std::domain_error("cm_probe_invpow: B must be positive");
  }
  auto rep = detail::make_report("invpow", grid, r_max, tol);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double l = grid[g];
    auto s = eigh(HermitianMatrix(CMatrix(a.mat() + l * b.mat())));
    if (!(s.min() > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "cm_probe_invpow: A + lambda B is singular at lambda = " << l;
      throw std::domain_error(os.str());
    }
    for (int r = 0; r <= r_max; ++r) {
      if (p == 0) {
        // Tr(A + lambda B)^0 = n.
        rep.values[g][r] = r == 0 ? a.n() : 0.0;
        rep.scales[g][r] = a.n();
        continue;
      }
      auto v = detail::inverse_power_derivative_scaled(s, b.mat(), p, r);
      double sign = (r % 2 == 0) ? 1.0 : -1.0;
      rep.values[g][r] = sign * v.value;
      rep.scales[g][r] = v.scale;
    }
  }
  detail::finalize_report(rep);
  return rep;
}

struct MixtureTerm {
  double weight = 0.0;
  double decay = 0.0;
};

/// Probe of lambda -> Tr f(A + lambda B) for f(x) = sum_k w_k exp(-t_k x),
/// by linearity over exp_trace_derivative(-t_k A, t_k B, r, lambda).
inline CMReport cm_probe_general_f(const HermitianMatrix& a,
                                   const HermitianMatrix& b,
                                   const std::vector<MixtureTerm>& mixture,
                                   const std::vector<double>& grid, int r_max,
                                   double tol) {
  detail::check_pair(a, b, "cm_probe_general_f");
  detail::check_grid(grid);
  if (mixture.empty()) throw std::invalid_argument("mixture must be non-empty");
  for (const auto& m : mixture) {
    if (!(m.weight >= 0.0) || !(m.decay >= 0.0)) {
      throw std::invalid_argument("mixture weights and decays must be >= 0");
    }
  }
  if (!is_positive(a) || !is_positive(b)) {
    throw std::domain_error("cm_probe_general_f: A and B must be positive");
  }
  auto rep = detail::make_report("mixture", grid, r_max, tol);
  const double nb = norm(b);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double l = grid[g];
    for (int r = 0; r <= r_max; ++r) {
      std::vector<double> terms, scales;
      for (const auto& m : mixture) {
        // -t (A + lambda B) is negative semidefinite, so the exponential
        // cannot overflow whatever the decay.
        HermitianMatrix ta = a.scaled(-m.decay);
        HermitianMatrix tb = b.scaled(m.decay);
        const double tnb = m.decay * nb;
        double d = detail::exp_trace_derivative_kernel(ta, tb, r, l, tnb);
        double f0 = detail::exp_trace_derivative_kernel(ta, tb, 0, l, tnb);
        terms.push_back(m.weight * d);
        scales.push_back(m.weight * std::pow(m.decay * nb, r) * f0);
      }
      double sign = (r % 2 == 0) ? 1.0 : -1.0;
      rep.values[g][r] = sign * pairwise_sum(terms);
      rep.scales[g][r] = pairwise_sum(scales);
    }
  }
  detail::finalize_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Series and integral representations

struct SeriesReport {
  double lhs = 0.0;
  double rhs_partial = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  int terms = 0;         // K of the reported partial sum
  bool converged = false;
};

/// Tr exp(A - lambda B) against
/// e^{-||A||} sum_{k=0}^{K} Tr(A + ||A|| I - lambda B)^k / k!.
/// Stops at the first K where the relative gap is <= 1e-10 for two
/// consecutive partial sums, else reports the cap.
inline SeriesReport series_identity_check(const HermitianMatrix& a,
                                          const HermitianMatrix& b,
                                          double lambda, int k_cap) {
  detail::check_pair(a, b, "series_identity_check");
  if (k_cap < 1) throw std::invalid_argument("series_identity_check: K >= 1");
  const double na = norm(a), nb = norm(b);
  detail::exp_guard(na, nb, lambda);
  constexpr double kTarget = 1e-10;
  SeriesReport rep;
  rep.lhs = matfn(HermitianMatrix(CMatrix(a.mat() - lambda * b.mat())), Exp{})
                .mat()
                .trace()
                .real();
  const auto n = a.n();
  const CMatrix shifted =
      a.mat() + na * CMatrix::Identity(n, n) - lambda * b.mat();
  const double pref = std::exp(-na);
  CMatrix power = CMatrix::Identity(n, n);
  double sum = 0.0;
  double inv_fact = 1.0;
  int streak = 0;
  for (int k = 0; k <= k_cap; ++k) {
    if (k > 0) {
      power = power * shifted;
      inv_fact /= k;
    }
    sum += power.trace().real() * inv_fact;
    double rhs = pref * sum;
    double gap = std::abs(rhs - rep.lhs);
    double rel = gap / std::abs(rep.lhs);
    rep.rhs_partial = rhs;
    rep.abs_gap = gap;
    rep.rel_gap = rel;
    rep.terms = k;
    streak = rel <= kTarget ? streak + 1 : 0;
    if (streak >= 2) {
      rep.converged = true;
      break;
    }
  }
  return rep;
}

struct LaplaceReport {
  double direct = 0.0;
  double quadrature = 0.0;
  double rel_error = 0.0;
};

/// Tr (A + lambda B)^{-p} directly and through
/// (1/Gamma(p)) int_0^inf Tr exp(-t (A + lambda B)) t^{p-1} dt.
/// With t = s / mu_min the integral becomes
/// mu_min^{-p} int s^{p-1} e^{-s} sum_i exp(-s (mu_i / mu_min - 1)) ds,
/// evaluated by Gauss-Laguerre with weight s^{p-1} e^{-s}.
inline LaplaceReport laplace_rep_check(const HermitianMatrix& a,
                                       const HermitianMatrix& b, double lambda,
                                       double p, int nodes) {
  detail::check_pair(a, b, "laplace_rep_check");
  if (!(p > 0.0)) throw std::invalid_argument("laplace_rep_check: p > 0");
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("laplace_rep_check: lambda >= 0");
  }
  HermitianMatrix m(CMatrix(a.mat() + lambda * b.mat()));
  auto s = eigh(m);
  detail::require_pd(s, "laplace_rep_check: A + lambda B");
  LaplaceReport rep;
  rep.direct = matfn(s, Power{-p}).mat().trace().real();

  const double mu_min = s.min();
  auto rule = gauss_laguerre(nodes, p - 1.0);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
      g += std::exp(-rule.nodes[k] * (s.eigenvalues(i) / mu_min - 1.0));
    }
    terms[k] = rule.weights[k] * g;
  }
  rep.quadrature = pairwise_sum(terms) * std::pow(mu_min, -p) / std::tgamma(p);
  rep.rel_error = std::abs(rep.quadrature - rep.direct) / std::abs(rep.direct);
  return rep;
}

/// Finite exponential mixture approximating x^{-p} on x > 0: Gauss-Laguerre
/// nodes and weights of the Gamma-integral representation, with the
/// substitution t = s / mu.
inline std::vector<MixtureTerm> inverse_power_mixture(double p, int nodes,
                                                      double mu) {
  auto rule = gauss_laguerre(nodes, p - 1.0);
  std::vector<MixtureTerm> out;
  const double pref = std::pow(mu, -p) / std::tgamma(p);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    // x^{-p} = mu^{-p}/Gamma(p) int s^{p-1} e^{-s} e^{-s (x/mu - 1)} ds
    out.push_back({pref * rule.weights[k] * std::exp(rule.nodes[k]),
                   rule.nodes[k] / mu});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-by-two non-negative basis

struct NonnegBasis {
  CMatrix u;
  CMatrix a_prime;
  CMatrix b_prime;
};

/// Unitary U with U^* A U diagonal and U^* B U entrywise non-negative.
/// Eigenvectors of A are phase-fixed (largest component real positive) and
/// ordered by the index of that component, so diagonal A yields U = I before
/// the final phase on the second basis vector.
inline NonnegBasis nonneg_basis_2x2(const HermitianMatrix& a,
                                    const HermitianMatrix& b) {
  if (a.n() != 2 || b.n() != 2) {
    throw std::invalid_argument("nonneg_basis_2x2: inputs must be 2x2");
  }
  if (!is_positive(a) || !is_positive(b)) {
    throw std::domain_error("nonneg_basis_2x2: inputs must be positive");
  }
  auto s = eigh(a);
  CMatrix u(2, 2);
  std::array<int, 2> lead{};
  for (int k = 0; k < 2; ++k) {
    Eigen::Vector2cd v = s.basis.col(k);
    int idx = std::abs(v(1)) > std::abs(v(0)) ? 1 : 0;
    lead[k] = idx;
    v *= std::conj(v(idx)) / std::abs(v(idx));
    u.col(k) = v;
  }
  if (lead[0] > lead[1]) u.col(0).swap(u.col(1));
  Complex b12 = (u.col(0).adjoint() * b.mat() * u.col(1))(0, 0);
  if (std::abs(b12) > 0.0) u.col(1) *= std::conj(b12) / std::abs(b12);
  NonnegBasis out;
  out.u = u;
  out.a_prime = u.adjoint() * a.mat() * u;
  out.b_prime = u.adjoint() * b.mat() * u;
  return out;
}

}  // namespace bmv

#endif  // BMV_EQUIVALENCE_HPP
