#ifndef BMV_WORDS_HPP
#define BMV_WORDS_HPP

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bmv/matcore.hpp"
#include "bmv/numeric.hpp"

namespace bmv {

inline constexpr int kBruteForceCap = 22;
inline constexpr int kNecklaceCap = 26;
inline constexpr int kCanonicalizationLimit = 14;

/// A word over {A, B}; the letter string is its external form.
class BinaryWord {
 public:
  BinaryWord() = default;
  explicit BinaryWord(std::string letters) : letters_(std::move(letters)) {
    for (char c : letters_) {
      if (c != 'A' && c != 'B') {
        throw std::invalid_argument("word '" + letters_ +
                                    "' contains a letter other than A/B");
      }
    }
  }

  const std::string& str() const { return letters_; }
  int length() const { return static_cast<int>(letters_.size()); }
  int weight() const {
    return static_cast<int>(std::count(letters_.begin(), letters_.end(), 'B'));
  }
  char operator[](int i) const { return letters_[static_cast<std::size_t>(i)]; }

  BinaryWord rotated(int k) const {
    if (letters_.empty()) return *this;
    std::string s = letters_;
    const int len = length();
    std::rotate(s.begin(), s.begin() + ((k % len) + len) % len, s.end());
    return BinaryWord(std::move(s));
  }

  /// Smallest d > 0 with rotation by d equal to the word.
  int period() const {
    const int len = length();
    for (int d = 1; d < len; ++d) {
      if (len % d == 0 && rotated(d) == *this) return d;
    }
    return std::max(len, 1);
  }

  BinaryWord least_rotation() const {
    BinaryWord best = *this;
    for (int k = 1; k < length(); ++k) best = std::min(best, rotated(k));
    return best;
  }

  friend auto operator<=>(const BinaryWord&, const BinaryWord&) = default;

 private:
  std::string letters_;
};

struct NecklaceClass {
  BinaryWord representative;  // least rotation
  int orbit_size = 0;         // smallest period = number of distinct rotations
};

namespace detail {

inline void check_pr(int p, int r, const char* op) {
  if (p < 0 || r < 0 || r > p) {
    throw std::invalid_argument(std::string(op) + ": need 0 <= r <= p (p=" +
                                std::to_string(p) + ", r=" +
                                std::to_string(r) + ")");
  }
}

}  // namespace detail

/// Calls `fn` on every word of length p with r B's, in lexicographic order.
template <typename Fn>
void for_each_word(int p, int r, Fn&& fn) {
  detail::check_pr(p, r, "enumerate_words");
  std::string s(static_cast<std::size_t>(p - r), 'A');
  s.append(static_cast<std::size_t>(r), 'B');
  do {
    fn(BinaryWord(s));
  } while (std::next_permutation(s.begin(), s.end()));
}

inline std::vector<BinaryWord> enumerate_words(int p, int r) {
  std::vector<BinaryWord> out;
  out.reserve(static_cast<std::size_t>(binomial(p, r)));
  for_each_word(p, r, [&](BinaryWord w) { out.push_back(std::move(w)); });
  return out;
}

/// Necklaces by canonicalizing every word; obviously correct, O(C(p,r) p^2).
inline std::vector<NecklaceClass> necklaces_by_canonicalization(int p, int r) {
  std::vector<NecklaceClass> out;
  for_each_word(p, r, [&](const BinaryWord& w) {
    if (w.least_rotation() == w) {
      out.push_back({w, w.period()});
    }
  });
  return out;
}

/// Fixed-density necklaces via the Fredricksen-Kessler-Maiorana recursion,
/// pruned on the number of B's. Output is lexicographic.
inline std::vector<NecklaceClass> necklaces_fkm(int p, int r) {
  detail::check_pr(p, r, "necklaces");
  std::vector<NecklaceClass> out;
  if (p == 0) return {{BinaryWord(""), 1}};
  std::vector<int> a(static_cast<std::size_t>(p) + 1, 0);
  std::function<void(int, int, int)> gen = [&](int t, int per, int ones) {
    if (ones > r || ones + (p - t + 1) < r) return;
    if (t > p) {
      if (p % per == 0 && ones == r) {
        std::string s;
        for (int i = 1; i <= p; ++i) s.push_back(a[i] ? 'B' : 'A');
        out.push_back({BinaryWord(std::move(s)), per});
      }
      return;
    }
    a[t] = a[t - per];
    gen(t + 1, per, ones + a[t]);
    if (a[t - per] == 0) {
      a[t] = 1;
      gen(t + 1, t, ones + 1);
    }
  };
  gen(1, 1, 0);
  return out;
}

/// Cyclic equivalence classes of words of length p with r B's.
inline std::vector<NecklaceClass> necklaces(int p, int r) {
  detail::check_pr(p, r, "necklaces");
  if (p <= kCanonicalizationLimit) return necklaces_by_canonicalization(p, r);
  return necklaces_fkm(p, r);
}

// ---------------------------------------------------------------------------
// Trace monomials

namespace detail {

inline CMatrix word_product(const HermitianMatrix& a, const HermitianMatrix& b,
                            const BinaryWord& w) {
  CMatrix m = CMatrix::Identity(a.n(), a.n());
  for (int i = 0; i < w.length(); ++i) {
    m = m * (w[i] == 'A' ? a.mat() : b.mat());
  }
  return m;
}

inline ExactMatrix exact_word_product(const HermitianMatrix& a,
                                      const HermitianMatrix& b,
                                      const BinaryWord& w) {
  ExactMatrix m = ExactMatrix::identity(a.n());
  for (int i = 0; i < w.length(); ++i) {
    m = m * (w[i] == 'A' ? a.exact() : b.exact());
  }
  return m;
}

inline void require_exact(const HermitianMatrix& a, const HermitianMatrix& b,
                          const char* op) {
  if (!a.has_exact() || !b.has_exact()) {
    throw std::invalid_argument(std::string(op) +
                                ": exact mode needs rational-entry matrices");
  }
}

}  // namespace detail

/// Tr of the ordered product. Complex in general; its conjugate is the trace
/// of the reversed word.
inline Complex word_trace(const HermitianMatrix& a, const HermitianMatrix& b,
                          const BinaryWord& w) {
  detail::check_pair(a, b, "word_trace");
  return detail::word_product(a, b, w).trace();
}

inline GaussianRational word_trace_exact(const HermitianMatrix& a,
                                         const HermitianMatrix& b,
                                         const BinaryWord& w) {
  detail::check_pair(a, b, "word_trace");
  detail::require_exact(a, b, "word_trace");
  return detail::exact_word_product(a, b, w).trace();
}

/// Hermitian gradients of Re Tr(w) with respect to A and B.
inline std::pair<HermitianMatrix, HermitianMatrix> word_trace_gradient(
    const HermitianMatrix& a, const HermitianMatrix& b, const BinaryWord& w) {
  detail::check_pair(a, b, "word_trace_gradient");
  const int n = a.n();
  const int len = w.length();
  auto letter = [&](int i) -> const CMatrix& {
    return w[i] == 'A' ? a.mat() : b.mat();
  };
  // prefix[k] = w_0 ... w_{k-1}, suffix[k] = w_{k+1} ... w_{len-1}
  std::vector<CMatrix> prefix(static_cast<std::size_t>(len) + 1);
  prefix[0] = CMatrix::Identity(n, n);
  for (int k = 0; k < len; ++k) prefix[k + 1] = prefix[k] * letter(k);
  CMatrix suffix = CMatrix::Identity(n, n);
  CMatrix ga = CMatrix::Zero(n, n), gb = CMatrix::Zero(n, n);
  for (int k = len - 1; k >= 0; --k) {
    CMatrix term = suffix * prefix[k];
    (w[k] == 'A' ? ga : gb) += term;
    suffix = letter(k) * suffix;
  }
  return {HermitianMatrix(ga), HermitianMatrix(gb)};
}

/// Sum of Re Tr(w) over every word of length p and weight r, reduced pairwise
/// in enumeration order.
inline double coeff_bruteforce(const HermitianMatrix& a,
                               const HermitianMatrix& b, int p, int r) {
  detail::check_pair(a, b, "coeff_bruteforce");
  detail::check_pr(p, r, "coeff_bruteforce");
  if (p > kBruteForceCap) {
    throw std::invalid_argument("coeff_bruteforce: p exceeds cap " +
                                std::to_string(kBruteForceCap));
  }
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(binomial(p, r)));
  for_each_word(p, r, [&](const BinaryWord& w) {
    terms.push_back(word_trace(a, b, w).real());
  });
  return pairwise_sum(terms);
}

namespace detail {

inline Rational real_exact(const GaussianRational& z, const char* op) {
  if (z.im != 0) {
    throw std::logic_error(std::string(op) +
                           ": exact coefficient has nonzero imaginary part");
  }
  return z.re;
}

}  // namespace detail

inline Rational coeff_bruteforce_exact(const HermitianMatrix& a,
                                       const HermitianMatrix& b, int p, int r) {
  detail::check_pair(a, b, "coeff_bruteforce");
  detail::check_pr(p, r, "coeff_bruteforce");
  detail::require_exact(a, b, "coeff_bruteforce");
  if (p > kBruteForceCap) {
    throw std::invalid_argument("coeff_bruteforce: p exceeds cap " +
                                std::to_string(kBruteForceCap));
  }
  GaussianRational sum;
  for_each_word(p, r, [&](const BinaryWord& w) {
    sum += detail::exact_word_product(a, b, w).trace();
  });
  return detail::real_exact(sum, "coeff_bruteforce");
}

/// Sum over necklace classes of orbit_size * Re Tr(representative).
inline double coeff_by_necklaces(const HermitianMatrix& a,
                                 const HermitianMatrix& b, int p, int r) {
  detail::check_pair(a, b, "coeff_by_necklaces");
  detail::check_pr(p, r, "coeff_by_necklaces");
  if (p > kNecklaceCap) {
    throw std::invalid_argument("coeff_by_necklaces: p exceeds cap " +
                                std::to_string(kNecklaceCap));
  }
  std::vector<double> terms;
  for (const auto& cls : necklaces(p, r)) {
    terms.push_back(cls.orbit_size *
                    word_trace(a, b, cls.representative).real());
  }
  return pairwise_sum(terms);
}

inline Rational coeff_by_necklaces_exact(const HermitianMatrix& a,
                                         const HermitianMatrix& b, int p,
                                         int r) {
  detail::check_pair(a, b, "coeff_by_necklaces");
  detail::check_pr(p, r, "coeff_by_necklaces");
  detail::require_exact(a, b, "coeff_by_necklaces");
  if (p > kNecklaceCap) {
    throw std::invalid_argument("coeff_by_necklaces: p exceeds cap " +
                                std::to_string(kNecklaceCap));
  }
  GaussianRational sum;
  for (const auto& cls : necklaces(p, r)) {
    GaussianRational t = word_trace_exact(a, b, cls.representative);
    sum += GaussianRational(t.re * cls.orbit_size, t.im * cls.orbit_size);
  }
  return detail::real_exact(sum, "coeff_by_necklaces");
}

struct TermValue {
  NecklaceClass cls;
  double value = 0.0;  // Re Tr(representative)
  double imag = 0.0;
};

/// Every class of (p, r) with its trace monomial value.
inline std::vector<TermValue> term_values(const HermitianMatrix& a,
                                          const HermitianMatrix& b, int p,
                                          int r) {
  detail::check_pair(a, b, "term_values");
  if (p > kNecklaceCap) {
    throw std::invalid_argument("term_values: p exceeds cap " +
                                std::to_string(kNecklaceCap));
  }
  std::vector<TermValue> out;
  for (auto& cls : necklaces(p, r)) {
    Complex v = word_trace(a, b, cls.representative);
    out.push_back({std::move(cls), v.real(), v.imag()});
  }
  return out;
}

/// Class with the smallest Re Tr(representative); ties go to the
/// lexicographically smaller representative.
inline TermValue min_term(const HermitianMatrix& a, const HermitianMatrix& b,
                          int p, int r) {
  auto all = term_values(a, b, p, r);
  if (all.empty()) throw std::invalid_argument("min_term: no classes");
  auto best = all.begin();
  for (auto it = all.begin() + 1; it != all.end(); ++it) {
    if (it->value < best->value ||
        (it->value == best->value &&
         it->cls.representative < best->cls.representative)) {
      best = it;
    }
  }
  return *best;
}

}  // namespace bmv

#endif  // BMV_WORDS_HPP
