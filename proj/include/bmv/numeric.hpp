#ifndef BMV_NUMERIC_HPP
#define BMV_NUMERIC_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace bmv {

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t c = 1;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline double factorial(int k) { return std::tgamma(k + 1.0); }

/// Pairwise (tree) summation in index order; the result depends only on the
/// order of `terms`, never on scheduling.
inline double pairwise_sum(std::span<const double> terms) {
  if (terms.empty()) return 0.0;
  if (terms.size() <= 8) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

struct DerivativeEstimate {
  double value = 0.0;
  double error = std::numeric_limits<double>::infinity();
};

/// r-th derivative of f at x by central differences of step h, h/2, h/4, ...
/// with Richardson extrapolation in h^2 (Ridders' scheme). Points sampled
/// lie within x +- r*h/2.
template <typename F>
DerivativeEstimate richardson_derivative(F&& f, double x, int r, double h,
                                         int levels = 8) {
  if (r < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (r == 0) return {f(x), 0.0};
  std::vector<double> binom(static_cast<std::size_t>(r) + 1);
  for (int k = 0; k <= r; ++k) binom[k] = static_cast<double>(binomial(r, k));
  auto central = [&](double step) {
    double s = 0.0;
    for (int k = 0; k <= r; ++k) {
      double sign = (k % 2 == 0) ? 1.0 : -1.0;
      s += sign * binom[k] * f(x + (0.5 * r - k) * step);
    }
    return s / std::pow(step, r);
  };
  std::vector<std::vector<double>> t(static_cast<std::size_t>(levels));
  DerivativeEstimate best;
  double step = h;
  for (int i = 0; i < levels; ++i, step *= 0.5) {
    t[i].resize(static_cast<std::size_t>(i) + 1);
    t[i][0] = central(step);
    double fac = 1.0;
    for (int j = 1; j <= i; ++j) {
      fac *= 4.0;
      t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (fac - 1.0);
      double err = std::max(std::abs(t[i][j] - t[i][j - 1]),
                            std::abs(t[i][j] - t[i - 1][j - 1]));
      if (err <= best.error) best = {t[i][j], err};
    }
    if (i > 0 &&
        std::abs(t[i][i] - t[i - 1][i - 1]) >= 2.0 * best.error) {
      break;
    }
  }
  return best;
}

/// Generalized Gauss-Laguerre rule for the weight t^alpha e^{-t} on [0, inf),
/// by the Golub-Welsch eigenvalue method.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline QuadratureRule gauss_laguerre(int count, double alpha = 0.0) {
  if (count < 1) throw std::invalid_argument("quadrature needs >= 1 node");
  if (!(alpha > -1.0)) throw std::invalid_argument("alpha must exceed -1");
  Eigen::VectorXd diag(count), sub(std::max(count - 1, 1));
  for (int k = 0; k < count; ++k) {
    diag(k) = 2.0 * k + 1.0 + alpha;
    if (k + 1 < count) sub(k) = std::sqrt((k + 1.0) * (k + 1.0 + alpha));
  }
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(count));
  rule.weights.resize(static_cast<std::size_t>(count));
  if (count == 1) {
    rule.nodes[0] = 1.0 + alpha;
    rule.weights[0] = std::tgamma(alpha + 1.0);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(count - 1),
                                Eigen::ComputeEigenvectors);
  const double mu0 = std::tgamma(alpha + 1.0);
  for (int k = 0; k < count; ++k) {
    rule.nodes[k] = solver.eigenvalues()(k);
    double v = solver.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v * v;
  }
  return rule;
}

}  // namespace bmv

#endif  // BMV_NUMERIC_HPP
