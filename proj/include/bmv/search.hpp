#ifndef BMV_SEARCH_HPP
#define BMV_SEARCH_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bmv/exact.hpp"
#include "bmv/matcore.hpp"
#include "bmv/parallel.hpp"
#include "bmv/rng.hpp"
#include "bmv/trace_poly.hpp"
#include "bmv/words.hpp"

namespace bmv {

enum class Objective { coefficient, single_term };
enum class Normalization { trace_one, operator_norm_one };
enum class Field { complex, real };
enum class Structure { dense, diagonal };

inline constexpr int kSearchMaxDim = 8;
inline constexpr int kSearchMaxDegree = 16;

struct SearchConfig {
  int n = 3;
  int p = 6;
  int r = 3;
  Objective objective = Objective::coefficient;
  BinaryWord word;  // single-term objective only
  int restarts = 100;
  int max_iters = 200;
  // Armijo line search
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
  int max_backtracks = 60;
  Normalization normalization = Normalization::trace_one;
  // Minimize objective / Tr(A^{p-r} B^r) instead of the raw objective. The
  // ratio is invariant under A -> sA, B -> tB, so descent cannot drift into
  // the trivial zero set where A and B annihilate each other.
  bool relative = true;
  Field field = Field::complex;
  Structure structure = Structure::dense;
  // Every `perturb_period`-th restart starts from the perturbed best so far.
  int perturb_period = 10;
  double perturb_scale = 0.1;
  std::uint64_t seed = 0;
  bool stop_on_negative = false;
  bool certify = false;
  bool record_history = false;

  void validate() const {
    if (n < 1 || n > kSearchMaxDim) {
      throw std::invalid_argument("search: n must lie in [1, " +
                                  std::to_string(kSearchMaxDim) + "]");
    }
    if (p < 1 || p > kSearchMaxDegree) {
      throw std::invalid_argument("search: p must lie in [1, " +
                                  std::to_string(kSearchMaxDegree) + "]");
    }
    if (r < 0 || r > p) throw std::invalid_argument("search: need 0 <= r <= p");
    if (restarts < 1) throw std::invalid_argument("search: restarts >= 1");
    if (max_iters < 0) throw std::invalid_argument("search: max_iters >= 0");
    if (perturb_period < 1) {
      throw std::invalid_argument("search: perturb_period >= 1");
    }
    if (objective == Objective::single_term &&
        (word.length() != p || word.weight() != r)) {
      throw std::invalid_argument("search: word '" + word.str() +
                                  "' must have length p and weight r");
    }
  }
};

enum class CertificationStatus { none, rational_certified };

struct Certification {
  CertificationStatus status = CertificationStatus::none;
  std::optional<Rational> exact_value;  // exact objective, when computed
  int precision_bits = 0;               // dyadic rounding of the factors
  std::optional<HermitianMatrix> exact_a;
  std::optional<HermitianMatrix> exact_b;
  std::string note;
};

struct IterationSummary {
  int restart = -1;
  int iterations = 0;
  int accepted_steps = 0;
  int backtracks = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::vector<double> history;  // objective after each accepted step
};

struct SearchRecord {
  SearchConfig config;
  double best_value = std::numeric_limits<double>::infinity();
  double relative_value = std::numeric_limits<double>::infinity();
  double reference_value = 0.0;  // Tr(A^{p-r} B^r) at the stored matrices
  double scale = 0.0;            // ||A||^{p-r} ||B||^r n
  HermitianMatrix a;
  HermitianMatrix b;
  CMatrix factor_a;
  CMatrix factor_b;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int restarts_run = 0;
  IterationSummary trace;
  std::vector<IterationSummary> restart_summaries;
  Certification certification;
};

namespace detail {

inline BinaryWord reference_word(int p, int r) {
  return BinaryWord(std::string(static_cast<std::size_t>(p - r), 'A') +
                    std::string(static_cast<std::size_t>(r), 'B'));
}

/// Raw objective at (A, B).
inline double raw_objective(const SearchConfig& cfg, const HermitianMatrix& a,
                            const HermitianMatrix& b) {
  if (cfg.objective == Objective::coefficient) {
    return trace_poly(a, b, cfg.p, cfg.r).coeffs.back();
  }
  return word_trace(a, b, cfg.word).real();
}

struct Evaluation {
  double objective = 0.0;  // minimized quantity (raw or relative)
  double raw = 0.0;
  double reference = 0.0;
};

class FactorObjective {
 public:
  explicit FactorObjective(const SearchConfig& cfg)
      : cfg_(cfg), ref_word_(reference_word(cfg.p, cfg.r)) {}

  static std::pair<HermitianMatrix, HermitianMatrix> matrices(
      const CMatrix& g, const CMatrix& h) {
    return {HermitianMatrix(CMatrix(g * g.adjoint()), Classification::positive),
            HermitianMatrix(CMatrix(h * h.adjoint()), Classification::positive)};
  }

  Evaluation evaluate(const CMatrix& g, const CMatrix& h) const {
    auto [a, b] = matrices(g, h);
    Evaluation e;
    e.raw = raw_objective(cfg_, a, b);
    e.reference = word_trace(a, b, ref_word_).real();
    if (cfg_.relative) {
      e.objective = e.reference > 0.0
                        ? e.raw / e.reference
                        : std::numeric_limits<double>::infinity();
    } else {
      e.objective = e.raw;
    }
    return e;
  }

  /// Gradients of the minimized quantity with respect to the factors, using
  /// d/dG f(G G^*) = 2 grad_A(f) G for Hermitian grad_A.
  std::pair<CMatrix, CMatrix> factor_gradient(const CMatrix& g,
                                              const CMatrix& h,
                                              const Evaluation& e) const {
    auto [a, b] = matrices(g, h);
    auto [ga, gb] = cfg_.objective == Objective::coefficient
                        ? coeff_gradient(a, b, cfg_.p, cfg_.r)
                        : word_trace_gradient(a, b, cfg_.word);
    CMatrix da = ga.mat(), db = gb.mat();
    if (cfg_.relative) {
      auto [ra, rb] = word_trace_gradient(a, b, ref_word_);
      da = (da - e.objective * ra.mat()) / e.reference;
      db = (db - e.objective * rb.mat()) / e.reference;
    }
    CMatrix dg = 2.0 * da * g;
    CMatrix dh = 2.0 * db * h;
    restrict(dg);
    restrict(dh);
    return {dg, dh};
  }

  void restrict(CMatrix& m) const {
    if (cfg_.field == Field::real) m = m.real().cast<Complex>();
    if (cfg_.structure == Structure::diagonal) {
      m = CMatrix(m.diagonal().asDiagonal());
    }
  }

  void normalize(CMatrix& m) const {
    double s = 0.0;
    if (cfg_.normalization == Normalization::trace_one) {
      s = m.norm();
    } else {
      Eigen::JacobiSVD<CMatrix> svd(m);
      s = svd.singularValues()(0);
    }
    if (s > 0.0) m /= s;
  }

 private:
  const SearchConfig& cfg_;
  BinaryWord ref_word_;
};

inline CMatrix random_factor(const SearchConfig& cfg, Philox& rng) {
  CMatrix g = CMatrix::Zero(cfg.n, cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.n; ++j) {
      if (cfg.structure == Structure::diagonal && i != j) continue;
      g(i, j) = cfg.field == Field::real ? Complex(rng.normal(), 0.0)
                                         : rng.complex_normal();
    }
  }
  return g;
}

struct RestartResult {
  CMatrix g, h;
  Evaluation eval;
  IterationSummary summary;
};

inline double tangent_dot(const CMatrix& x, const CMatrix& y) {
  return (x.adjoint() * y).trace().real();
}

/// One restart of Armijo-backtracked gradient descent on the factors with
/// the normalization re-imposed after every step.
inline RestartResult run_restart(const SearchConfig& cfg, CMatrix g, CMatrix h,
                                 int index) {
  FactorObjective obj(cfg);
  obj.restrict(g);
  obj.restrict(h);
  obj.normalize(g);
  obj.normalize(h);
  RestartResult res;
  res.summary.restart = index;
  Evaluation cur = obj.evaluate(g, h);
  res.summary.initial_objective = cur.objective;
  for (int it = 0; it < cfg.max_iters && std::isfinite(cur.objective); ++it) {
    res.summary.iterations = it + 1;
    auto [dg, dh] = obj.factor_gradient(g, h, cur);
    if (cfg.normalization == Normalization::trace_one) {
      // Project onto the tangent space of the unit sphere.
      dg -= tangent_dot(g, dg) * g;
      dh -= tangent_dot(h, dh) * h;
    }
    const double g2 = dg.squaredNorm() + dh.squaredNorm();
    if (!(g2 > 1e-30)) break;
    double step = cfg.initial_step;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt, step *= cfg.backtrack) {
      CMatrix g2m = g - step * dg;
      CMatrix h2m = h - step * dh;
      obj.normalize(g2m);
      obj.normalize(h2m);
      Evaluation trial = obj.evaluate(g2m, h2m);
      if (trial.objective <= cur.objective - cfg.armijo_c * step * g2) {
        g = std::move(g2m);
        h = std::move(h2m);
        cur = trial;
        accepted = true;
        break;
      }
      ++res.summary.backtracks;
    }
    if (!accepted) break;
    ++res.summary.accepted_steps;
    if (cfg.record_history) res.summary.history.push_back(cur.objective);
  }
  res.summary.final_objective = cur.objective;
  res.g = std::move(g);
  res.h = std::move(h);
  res.eval = cur;
  return res;
}

inline std::pair<HermitianMatrix, HermitianMatrix> exact_pair_from_factors(
    const CMatrix& g, const CMatrix& h, int bits) {
  auto round_factor = [bits](const CMatrix& f) {
    const int n = static_cast<int>(f.rows());
    ExactMatrix e(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        e(i, j) = GaussianRational(round_dyadic(f(i, j).real(), bits),
                                   round_dyadic(f(i, j).imag(), bits));
      }
    }
    return HermitianMatrix(ExactMatrix::gram(e), Classification::positive);
  };
  return {round_factor(g), round_factor(h)};
}

/// Square-root factor of a positive matrix, negative rounding clamped.
inline CMatrix psd_factor(const HermitianMatrix& m) {
  auto s = eigh(m);
  RVector d = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return s.basis * d.cast<Complex>().asDiagonal();
}

inline Rational exact_objective(const SearchConfig& cfg,
                                const HermitianMatrix& a,
                                const HermitianMatrix& b) {
  if (cfg.objective == Objective::coefficient) {
    return cfg.p <= 12 ? coeff_bruteforce_exact(a, b, cfg.p, cfg.r)
                       : coeff_by_necklaces_exact(a, b, cfg.p, cfg.r);
  }
  GaussianRational v = word_trace_exact(a, b, cfg.word);
  return v.re;
}

}  // namespace detail

/// Exact re-evaluation of a record's objective on rationalized inputs.
/// Factors are rounded to dyadic rationals at 16, 24 and 32 bits (so Gram
/// denominators stay within 2^64) until the exact value is negative; the
/// floating best_value is never touched.
inline SearchRecord certify_instance(SearchRecord rec) {
  const auto& cfg = rec.config;
  auto& cert = rec.certification;
  auto conclude = [&](const HermitianMatrix& ea, const HermitianMatrix& eb,
                      int bits) {
    Rational v = detail::exact_objective(cfg, ea, eb);
    cert.exact_value = v;
    cert.precision_bits = bits;
    cert.exact_a = ea;
    cert.exact_b = eb;
    cert.status = v < 0 ? CertificationStatus::rational_certified
                        : CertificationStatus::none;
    return v < 0;
  };
  if (cert.exact_a && cert.exact_b) {
    HermitianMatrix ea = *cert.exact_a, eb = *cert.exact_b;
    conclude(ea, eb, cert.precision_bits);
    return rec;
  }
  if (rec.a.has_exact() && rec.b.has_exact()) {
    conclude(rec.a, rec.b, 0);
    return rec;
  }
  CMatrix g = rec.factor_a.size() ? rec.factor_a : detail::psd_factor(rec.a);
  CMatrix h = rec.factor_b.size() ? rec.factor_b : detail::psd_factor(rec.b);
  for (int bits : {16, 24, 32}) {
    auto [ea, eb] = detail::exact_pair_from_factors(g, h, bits);
    if (conclude(ea, eb, bits)) {
      cert.note.clear();
      return rec;
    }
    if (rec.best_value >= 0) break;  // nothing negative to certify
  }
  if (rec.best_value < 0) {
    cert.note = "rounded instance not negative at 32-bit precision";
  }
  return rec;
}

namespace detail {

inline SearchRecord run_search(const SearchConfig& cfg) {
  cfg.validate();
  SearchRecord rec;
  rec.config = cfg;
  rec.seed = cfg.seed;
  const Philox root(cfg.seed, 0);
  const auto batch = static_cast<std::size_t>(cfg.perturb_period);
  std::optional<RestartResult> best;
  for (std::size_t start = 0; start < static_cast<std::size_t>(cfg.restarts);
       start += batch) {
    const std::size_t count =
        std::min(batch, static_cast<std::size_t>(cfg.restarts) - start);
    std::vector<RestartResult> results(count);
    parallel_for(count, [&](std::size_t k) {
      const std::size_t index = start + k;
      Philox rng = root.split(index);
      CMatrix g, h;
      if (best && (index + 1) % batch == 0) {
        g = best->g;
        h = best->h;
        CMatrix ng = random_factor(cfg, rng), nh = random_factor(cfg, rng);
        g += cfg.perturb_scale * ng / std::max(ng.norm(), 1e-300) * g.norm();
        h += cfg.perturb_scale * nh / std::max(nh.norm(), 1e-300) * h.norm();
      } else {
        g = random_factor(cfg, rng);
        h = random_factor(cfg, rng);
      }
      results[k] = run_restart(cfg, std::move(g), std::move(h),
                               static_cast<int>(index));
    });
    for (auto& res : results) {
      if (!best || res.eval.objective < best->eval.objective) best = res;
      res.summary.history.clear();
      rec.restart_summaries.push_back(res.summary);
    }
    rec.restarts_run = static_cast<int>(start + count);
    if (cfg.stop_on_negative && best && best->eval.raw < 0) {
      if (!cfg.certify) break;
      SearchRecord probe;
      probe.config = cfg;
      probe.best_value = best->eval.raw;
      probe.factor_a = best->g;
      probe.factor_b = best->h;
      auto [a, b] = FactorObjective::matrices(best->g, best->h);
      probe.a = a;
      probe.b = b;
      if (certify_instance(probe).certification.status ==
          CertificationStatus::rational_certified) {
        break;
      }
    }
  }
  auto [a, b] = FactorObjective::matrices(best->g, best->h);
  rec.a = a;
  rec.b = b;
  rec.factor_a = best->g;
  rec.factor_b = best->h;
  rec.best_value = raw_objective(cfg, rec.a, rec.b);
  rec.reference_value = best->eval.reference;
  rec.relative_value = best->eval.objective;
  rec.stream = static_cast<std::uint64_t>(best->summary.restart);
  rec.trace = best->summary;
  rec.scale = std::pow(norm(rec.a), cfg.p - cfg.r) *
              std::pow(norm(rec.b), cfg.r) * cfg.n;
  if (cfg.certify) rec = certify_instance(std::move(rec));
  return rec;
}

}  // namespace detail

/// Minimizes c_{p,r} over pairs of Gram products.
inline SearchRecord search_min_coeff(SearchConfig cfg) {
  if (cfg.objective != Objective::coefficient) {
    throw std::invalid_argument("search_min_coeff: objective must be coefficient");
  }
  return detail::run_search(cfg);
}

/// Minimizes one trace monomial and certifies any negative value exactly.
inline SearchRecord search_negative_term(SearchConfig cfg) {
  if (cfg.objective != Objective::single_term) {
    throw std::invalid_argument("search_negative_term: objective must be single-term");
  }
  cfg.stop_on_negative = true;
  cfg.certify = true;
  return detail::run_search(cfg);
}

}  // namespace bmv

#endif  // BMV_SEARCH_HPP
