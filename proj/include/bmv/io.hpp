#ifndef BMV_IO_HPP
#define BMV_IO_HPP

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmv/equivalence.hpp"
#include "bmv/matcore.hpp"
#include "bmv/search.hpp"
#include "bmv/trace_poly.hpp"
#include "bmv/words.hpp"

namespace bmv {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "bmv 0.1.0";

/// Malformed or unreadable input (file, flag, or document).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Text rendering

/// 17 significant digits, always in exponent form so every value carries the
/// full round-trip precision.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

namespace detail {

inline void dump_string(std::ostream& os, const std::string& s) {
  os << json(s).dump();
}

inline void dump(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad;
        dump_string(os, it.key());
        os << ": ";
        dump(os, it.value(), indent, depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat &= !v.is_structured();
      if (flat) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          dump(os, j[i], indent, depth + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump(os, j[i], indent, depth + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      if (std::isfinite(v)) {
        os << format_double(v);
      } else {
        dump_string(os, format_double(v));
      }
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

/// Deterministic JSON text with floats at 17 significant digits.
inline std::string to_text(const json& j) {
  std::ostringstream os;
  detail::dump(os, j, 2, 0);
  os << "\n";
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0')
       << static_cast<int>(md[i]);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Matrix documents

namespace detail {

inline json big_to_json(const BigInt& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() &&
      v <= std::numeric_limits<std::int64_t>::max()) {
    return v.convert_to<std::int64_t>();
  }
  return v.str();
}

inline BigInt big_from_json(const json& j, const std::string& where) {
  if (j.is_number_integer()) return BigInt(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return BigInt(j.get<std::uint64_t>());
  if (j.is_string()) {
    try {
      return BigInt(j.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw InputError(where + ": expected an integer");
}

inline json grid_json(int n, auto&& get) {
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(get(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline json matrix_to_json(const HermitianMatrix& m) {
  const int n = m.n();
  json j;
  j["n"] = n;
  j["re"] = detail::grid_json(n, [&](int r, int c) { return m(r, c).real(); });
  j["im"] = detail::grid_json(n, [&](int r, int c) { return m(r, c).imag(); });
  j["classification"] = std::string(to_string(m.classification()));
  if (m.has_exact()) {
    const auto& e = m.exact();
    j["num"] = {
        {"re", detail::grid_json(n, [&](int r, int c) {
           return detail::big_to_json(numerator(e(r, c).re));
         })},
        {"im", detail::grid_json(n, [&](int r, int c) {
           return detail::big_to_json(numerator(e(r, c).im));
         })}};
    j["den"] = {
        {"re", detail::grid_json(n, [&](int r, int c) {
           return detail::big_to_json(denominator(e(r, c).re));
         })},
        {"im", detail::grid_json(n, [&](int r, int c) {
           return detail::big_to_json(denominator(e(r, c).im));
         })}};
  }
  return j;
}

/// Complex n x n matrix from a pair of real grids.
inline CMatrix complex_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("n") || !j.contains("re") ||
      !j.contains("im")) {
    throw InputError(where + ": matrix document needs n, re, im");
  }
  if (!j["n"].is_number_integer()) throw InputError(where + ": n not an integer");
  const int n = j["n"].get<int>();
  if (n < 1 || n > 64) throw InputError(where + ": n out of range [1, 64]");
  CMatrix m(n, n);
  for (const char* part : {"re", "im"}) {
    const json& g = j[part];
    if (!g.is_array() || static_cast<int>(g.size()) != n) {
      throw InputError(where + ": '" + part + "' must be an n x n array");
    }
    for (int r = 0; r < n; ++r) {
      if (!g[r].is_array() || static_cast<int>(g[r].size()) != n) {
        throw InputError(where + ": '" + part + "' must be an n x n array");
      }
      for (int c = 0; c < n; ++c) {
        if (!g[r][c].is_number()) {
          throw InputError(where + ": non-numeric entry in '" + part + "'");
        }
        double v = g[r][c].get<double>();
        if (part[0] == 'r') {
          m(r, c).real(v);
        } else {
          m(r, c).imag(v);
        }
      }
    }
  }
  return m;
}

inline HermitianMatrix matrix_from_json(const json& j,
                                        const std::string& where) {
  CMatrix m = complex_from_json(j, where);
  const int n = static_cast<int>(m.rows());
  double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  double mag = std::max(1e-300, m.cwiseAbs().maxCoeff());
  if (asym > 1e-12 * mag) throw InputError(where + ": matrix is not Hermitian");
  Classification cls = Classification::hermitian;
  if (j.contains("classification")) {
    try {
      cls = classification_from_string(j["classification"].get<std::string>());
    } catch (const std::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  if (j.contains("num") || j.contains("den")) {
    if (!j.contains("num") || !j.contains("den")) {
      throw InputError(where + ": exact matrices need both num and den");
    }
    ExactMatrix e(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        Rational parts[2];
        for (int k = 0; k < 2; ++k) {
          const char* key = k == 0 ? "re" : "im";
          try {
            BigInt num = detail::big_from_json(j.at("num").at(key).at(r).at(c),
                                               where);
            BigInt den = detail::big_from_json(j.at("den").at(key).at(r).at(c),
                                               where);
            if (den == 0) throw InputError(where + ": zero denominator");
            parts[k] = Rational(num, den);
          } catch (const json::exception&) {
            throw InputError(where + ": malformed num/den arrays");
          }
        }
        e(r, c) = GaussianRational(parts[0], parts[1]);
      }
    }
    if (!e.is_hermitian()) {
      throw InputError(where + ": exact matrix is not Hermitian");
    }
    return HermitianMatrix(std::move(e), cls);
  }
  return HermitianMatrix(m, cls);
}

inline HermitianMatrix load_matrix(const std::string& path) {
  std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
  return matrix_from_json(j, "'" + path + "'");
}

inline void save_matrix(const std::string& path, const HermitianMatrix& m) {
  write_file(path, to_text(matrix_to_json(m)));
}

inline json factor_to_json(const CMatrix& g) {
  const int n = static_cast<int>(g.rows());
  json j;
  j["n"] = n;
  j["re"] = detail::grid_json(n, [&](int r, int c) { return g(r, c).real(); });
  j["im"] = detail::grid_json(n, [&](int r, int c) { return g(r, c).imag(); });
  return j;
}

inline json rational_json(const Rational& q) {
  return {{"num", numerator(q).str()}, {"den", denominator(q).str()}};
}

// ---------------------------------------------------------------------------
// Reports

struct RunManifest {
  std::string subcommand;
  json parameters = json::object();
  std::vector<std::uint64_t> seeds;
  std::string tool_version = kToolVersion;
  std::optional<double> wall_seconds;  // only when timing was requested
  json input_digests = json::object();
  json output_digests = json::object();

  json to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["parameters"] = parameters;
    j["seeds"] = seeds;
    j["tool_version"] = tool_version;
    if (wall_seconds) j["wall_clock_seconds"] = *wall_seconds;
    j["input_digests"] = input_digests;
    j["output_digests"] = output_digests;
    return j;
  }
};

inline json to_json(const Lemma1Report& r) {
  return {{"p", r.p},
          {"r", r.r},
          {"lhs", r.lhs},
          {"rhs", r.rhs},
          {"abs_residual", r.abs_residual},
          {"rel_residual", r.rel_residual},
          {"scale", r.scale},
          {"tol", r.tol},
          {"pass", r.pass}};
}

inline json to_json(const CMReport& r) {
  json j;
  j["mode"] = r.mode;
  j["lambda_grid"] = r.lambda_grid;
  j["orders"] = r.orders;
  j["values"] = r.values;
  j["scales"] = r.scales;
  j["min_signed_value"] = r.min_signed_value;
  j["tol"] = r.tol;
  json v = json::array();
  for (const auto& x : r.violations) {
    v.push_back({{"lambda", x.lambda},
                 {"order", x.order},
                 {"value", x.value},
                 {"scale", x.scale}});
  }
  j["violations"] = v;
  if (r.fd_max_deviation) j["fd_max_deviation"] = *r.fd_max_deviation;
  return j;
}

inline json to_json(const SeriesReport& r) {
  return {{"lhs", r.lhs},           {"rhs_partial", r.rhs_partial},
          {"abs_gap", r.abs_gap},   {"rel_gap", r.rel_gap},
          {"terms", r.terms},       {"converged", r.converged}};
}

inline json to_json(const LaplaceReport& r) {
  return {{"direct", r.direct},
          {"quadrature", r.quadrature},
          {"rel_error", r.rel_error}};
}

inline std::string_view to_string(Objective o) {
  return o == Objective::coefficient ? "coefficient" : "single-term";
}
inline std::string_view to_string(Normalization o) {
  return o == Normalization::trace_one ? "trace-one" : "operator-norm-one";
}
inline std::string_view to_string(Field f) {
  return f == Field::complex ? "complex" : "real";
}
inline std::string_view to_string(Structure s) {
  return s == Structure::dense ? "dense" : "diagonal";
}
inline std::string_view to_string(CertificationStatus s) {
  return s == CertificationStatus::none ? "none" : "rational-certified";
}

inline json to_json(const SearchConfig& c) {
  return {{"n", c.n},
          {"p", c.p},
          {"r", c.r},
          {"objective", std::string(to_string(c.objective))},
          {"word", c.word.str()},
          {"restarts", c.restarts},
          {"max_iters", c.max_iters},
          {"armijo_c", c.armijo_c},
          {"backtrack", c.backtrack},
          {"initial_step", c.initial_step},
          {"max_backtracks", c.max_backtracks},
          {"normalization", std::string(to_string(c.normalization))},
          {"relative", c.relative},
          {"field", std::string(to_string(c.field))},
          {"structure", std::string(to_string(c.structure))},
          {"perturb_period", c.perturb_period},
          {"perturb_scale", c.perturb_scale},
          {"seed", c.seed},
          {"stop_on_negative", c.stop_on_negative},
          {"certify", c.certify}};
}

inline SearchConfig search_config_from_json(const json& j) {
  SearchConfig c;
  try {
    c.n = j.at("n").get<int>();
    c.p = j.at("p").get<int>();
    c.r = j.at("r").get<int>();
    c.objective = j.at("objective").get<std::string>() == "coefficient"
                      ? Objective::coefficient
                      : Objective::single_term;
    c.word = BinaryWord(j.value("word", std::string()));
    c.restarts = j.value("restarts", c.restarts);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.armijo_c = j.value("armijo_c", c.armijo_c);
    c.backtrack = j.value("backtrack", c.backtrack);
    c.initial_step = j.value("initial_step", c.initial_step);
    c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
    c.normalization = j.value("normalization", std::string("trace-one")) ==
                              "trace-one"
                          ? Normalization::trace_one
                          : Normalization::operator_norm_one;
    c.relative = j.value("relative", c.relative);
    c.field = j.value("field", std::string("complex")) == "real" ? Field::real
                                                                 : Field::complex;
    c.structure = j.value("structure", std::string("dense")) == "diagonal"
                      ? Structure::diagonal
                      : Structure::dense;
    c.perturb_period = j.value("perturb_period", c.perturb_period);
    c.perturb_scale = j.value("perturb_scale", c.perturb_scale);
    c.seed = j.value("seed", c.seed);
    c.stop_on_negative = j.value("stop_on_negative", c.stop_on_negative);
    c.certify = j.value("certify", c.certify);
  } catch (const json::exception& e) {
    throw InputError(std::string("search config: ") + e.what());
  }
  c.validate();
  return c;
}

inline json to_json(const IterationSummary& s) {
  return {{"restart", s.restart},
          {"iterations", s.iterations},
          {"accepted_steps", s.accepted_steps},
          {"backtracks", s.backtracks},
          {"initial_objective", s.initial_objective},
          {"final_objective", s.final_objective}};
}

/// Metadata document of a search record. Matrix files are referenced by
/// name; factors are embedded so certification can round them.
inline json record_metadata(const SearchRecord& rec, const std::string& a_file,
                            const std::string& b_file) {
  json j;
  j["config"] = to_json(rec.config);
  j["best_value"] = rec.best_value;
  j["relative_value"] = rec.relative_value;
  j["reference_value"] = rec.reference_value;
  j["scale"] = rec.scale;
  j["seed"] = rec.seed;
  j["stream"] = rec.stream;
  j["restarts_run"] = rec.restarts_run;
  j["iteration_trace"] = to_json(rec.trace);
  j["a_file"] = a_file;
  j["b_file"] = b_file;
  if (rec.factor_a.size()) j["factor_a"] = factor_to_json(rec.factor_a);
  if (rec.factor_b.size()) j["factor_b"] = factor_to_json(rec.factor_b);
  const auto& c = rec.certification;
  json cert;
  cert["status"] = std::string(to_string(c.status));
  if (c.exact_value) cert["value"] = rational_json(*c.exact_value);
  cert["precision_bits"] = c.precision_bits;
  if (!c.note.empty()) cert["note"] = c.note;
  j["certification"] = cert;
  return j;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string coeff_csv(const std::vector<std::string>& engines,
                             const std::vector<std::vector<double>>& columns,
                             const std::vector<std::string>& exact_column) {
  std::ostringstream os;
  os << "r";
  for (const auto& e : engines) os << "," << e;
  if (!exact_column.empty()) os << ",exact";
  os << "\n";
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (std::size_t r = 0; r < rows; ++r) {
    os << r;
    for (const auto& col : columns) os << "," << format_double(col[r]);
    if (!exact_column.empty()) os << "," << exact_column[r];
    os << "\n";
  }
  return os.str();
}

/// Term-level rows: p, r, representative, orbit_size, value, exact_num,
/// exact_den (the exact fields are empty without exact inputs).
inline std::string term_csv(const HermitianMatrix& a, const HermitianMatrix& b,
                            int p, int r, bool exact) {
  std::ostringstream os;
  os << "p,r,representative,orbit_size,value,exact_num,exact_den\n";
  for (const auto& t : term_values(a, b, p, r)) {
    os << p << "," << r << "," << t.cls.representative.str() << ","
       << t.cls.orbit_size << "," << format_double(t.value) << ",";
    if (exact) {
      auto v = word_trace_exact(a, b, t.cls.representative);
      os << numerator(v.re).str() << "," << denominator(v.re).str();
    } else {
      os << ",";
    }
    os << "\n";
  }
  return os.str();
}

inline std::string cm_csv(const CMReport& r) {
  std::ostringstream os;
  os << "lambda,order,value,scale,violation\n";
  for (std::size_t g = 0; g < r.lambda_grid.size(); ++g) {
    for (std::size_t k = 0; k < r.orders.size(); ++k) {
      os << format_double(r.lambda_grid[g]) << "," << r.orders[k] << ","
         << format_double(r.values[g][k]) << ","
         << format_double(r.scales[g][k]) << ","
         << (r.values[g][k] < -r.tol * r.scales[g][k] ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

}  // namespace bmv

#endif  // BMV_IO_HPP
