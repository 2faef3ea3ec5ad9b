// bmv: batch front end for the trace-polynomial toolkit.
//
// Exit codes: 0 success or report-only, 2 input error, 3 failed check.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bmv/equivalence.hpp"
#include "bmv/io.hpp"
#include "bmv/matcore.hpp"
#include "bmv/search.hpp"
#include "bmv/suites.hpp"
#include "bmv/trace_poly.hpp"
#include "bmv/words.hpp"

namespace {

using bmv::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitCheck = 3;

struct Common {
  std::string out;
  std::string format = "json";
  bool timing = false;
};

struct Context {
  bmv::RunManifest manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  const Common* common = nullptr;

  bmv::HermitianMatrix load(const std::string& path) {
    auto m = bmv::load_matrix(path);
    manifest.input_digests[path] = bmv::sha256_hex(bmv::read_file(path));
    return m;
  }

  void wrote(const std::string& path, const std::string& text) {
    bmv::write_file(path, text);
    manifest.output_digests[path] = bmv::sha256_hex(text);
  }

  // Emits the report to --out or standard output.
  void emit(json result, const std::string& csv = {}) {
    if (common->timing) {
      manifest.wall_seconds = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
    }
    std::string text;
    if (common->format == "csv") {
      text = csv;
    } else {
      json doc;
      doc["manifest"] = manifest.to_json();
      doc["result"] = std::move(result);
      text = bmv::to_text(doc);
    }
    if (common->out.empty()) {
      std::cout << text;
      std::cout.flush();
    } else {
      bmv::write_file(common->out, text);
    }
  }
};

// Full parameter echo: every option of the subcommand with its effective
// value (given or default).
json echo_parameters(const CLI::App& sub,
                     const std::set<const CLI::Option*>& flags) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (flags.count(opt)) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      auto res = opt->results();
      j[name] = res.size() == 1 ? json(res[0]) : json(res);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

bool parse_engine(const std::string& e) {
  return e == "dp" || e == "brute" || e == "necklace" || e == "all";
}

// "start:stop:step", endpoints included within half a step.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t colon = spec.find(':', pos);
    std::string tok = spec.substr(pos, colon == std::string::npos
                                           ? std::string::npos
                                           : colon - pos);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw bmv::InputError("grid '" + spec + "': bad number '" + tok + "'");
    }
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() == 1) return {parts[0]};
  if (parts.size() != 3) {
    throw bmv::InputError("grid '" + spec + "': expected start:stop:step");
  }
  const double a = parts[0], b = parts[1], h = parts[2];
  if (!(h > 0.0) || !(b >= a) || a < 0.0) {
    throw bmv::InputError("grid '" + spec +
                          "': need 0 <= start <= stop and step > 0");
  }
  std::vector<double> g;
  for (long k = 0;; ++k) {
    double x = a + static_cast<double>(k) * h;
    if (x > b + 0.5 * h) break;
    g.push_back(std::min(x, b));
    if (x >= b) break;
    if (k > 1000000) throw bmv::InputError("grid '" + spec + "': too many points");
  }
  if (g.back() < b - 0.5 * h) g.push_back(b);
  return g;
}

double engine_gap(double x, double y, double floor) {
  double d = std::abs(x - y);
  double m = std::max({std::abs(x), std::abs(y), floor});
  return m > 0.0 ? d / m : 0.0;
}

// ---------------------------------------------------------------------------

struct CoeffsArgs {
  std::string a, b, engine = "dp";
  int p = 0;
  int r_max = -1;
  bool exact = false;
};

int cmd_coeffs(const CoeffsArgs& args, Context& ctx) {
  if (!parse_engine(args.engine)) {
    throw bmv::InputError("unknown engine '" + args.engine + "'");
  }
  auto a = ctx.load(args.a);
  auto b = ctx.load(args.b);
  if (a.n() != b.n()) throw bmv::InputError("--a and --b differ in dimension");
  if (args.p < 0) throw bmv::InputError("--p must be >= 0");
  const int p = args.p;
  const int r_max = args.r_max < 0 ? p : std::min(args.r_max, p);
  if (args.exact && !(a.has_exact() && b.has_exact())) {
    throw bmv::InputError("--exact needs matrix files with num/den entries");
  }

  std::vector<std::string> engines;
  if (args.engine == "all") {
    engines = {"dp", "brute", "necklace"};
  } else {
    engines = {args.engine};
  }
  std::vector<std::vector<double>> cols;
  for (const auto& e : engines) {
    std::vector<double> col(static_cast<std::size_t>(r_max) + 1);
    if (e == "dp") {
      auto tp = bmv::trace_poly(a, b, p, r_max);
      std::copy(tp.coeffs.begin(), tp.coeffs.begin() + r_max + 1, col.begin());
    } else {
      for (int r = 0; r <= r_max; ++r) {
        col[static_cast<std::size_t>(r)] = e == "brute"
                                               ? bmv::coeff_bruteforce(a, b, p, r)
                                               : bmv::coeff_by_necklaces(a, b, p, r);
      }
    }
    cols.push_back(std::move(col));
  }
  std::vector<std::string> exact_col;
  json exact_json = json::array();
  if (args.exact) {
    for (int r = 0; r <= r_max; ++r) {
      auto q = bmv::coeff_by_necklaces_exact(a, b, p, r);
      exact_col.push_back(numerator(q).str() + "/" + denominator(q).str());
      exact_json.push_back(bmv::rational_json(q));
    }
  }

  double deviation = 0.0;
  const double na = bmv::norm(a), nb = bmv::norm(b);
  for (int r = 0; r <= r_max; ++r) {
    const double floor = std::numeric_limits<double>::epsilon() *
                         static_cast<double>(bmv::binomial(p, r)) *
                         bmv::detail::coefficient_scale(na, nb, a.n(), p, r);
    for (std::size_t i = 0; i < cols.size(); ++i)
      for (std::size_t k = i + 1; k < cols.size(); ++k)
        deviation = std::max(deviation,
                             engine_gap(cols[i][static_cast<std::size_t>(r)],
                                        cols[k][static_cast<std::size_t>(r)],
                                        floor));
    if (args.exact) {
      double q = bmv::coeff_by_necklaces_exact(a, b, p, r).convert_to<double>();
      for (const auto& col : cols)
        deviation = std::max(
            deviation, engine_gap(col[static_cast<std::size_t>(r)], q, floor));
    }
  }
  constexpr double kTol = 1e-9;
  json result;
  result["n"] = a.n();
  result["p"] = p;
  result["r_max"] = r_max;
  json coeffs;
  for (std::size_t i = 0; i < engines.size(); ++i) coeffs[engines[i]] = cols[i];
  result["coefficients"] = coeffs;
  if (args.exact) result["exact"] = exact_json;
  result["max_deviation"] = deviation;
  result["tolerance"] = kTol;
  result["pass"] = deviation <= kTol;
  ctx.emit(result, bmv::coeff_csv(engines, cols, exact_col));
  return deviation <= kTol ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------------------

struct Lemma1Args {
  std::string a, b;
  int p = -1, r = -1;
  double tol = 1e-8;
  int random = 0;
  int dim = 2;
  std::uint64_t seed = 0;
  int pmax = 3, rmax = 3;
};

int cmd_verify_lemma1(const Lemma1Args& args, Context& ctx) {
  std::vector<bmv::Lemma1Report> rows;
  json cases = json::array();
  if (args.random > 0) {
    if (args.dim < 1) throw bmv::InputError("--dim must be >= 1");
    if (args.pmax < 1 || args.rmax < 0) {
      throw bmv::InputError("need --pmax >= 1 and --rmax >= 0");
    }
    ctx.manifest.seeds.push_back(args.seed);
    const bmv::Philox root(args.seed);
    std::uint64_t index = 0;
    for (int p = 1; p <= args.pmax; ++p) {
      for (int r = 0; r <= args.rmax; ++r) {
        for (int k = 0; k < args.random; ++k, ++index) {
          bmv::Philox rng = root.split(index);
          auto a = bmv::random_pd(args.dim, rng);
          auto b = bmv::random_hermitian(args.dim, rng);
          rows.push_back(bmv::verify_lemma1(a, b, p, r, args.tol));
        }
      }
    }
  } else {
    if (args.a.empty() || args.b.empty() || args.p < 1 || args.r < 0) {
      throw bmv::InputError(
          "verify-lemma1 needs --a, --b, --p >= 1, --r >= 0 or --random N");
    }
    auto a = ctx.load(args.a);
    auto b = ctx.load(args.b);
    if (a.n() != b.n()) throw bmv::InputError("--a and --b differ in dimension");
    if (!bmv::is_positive_definite(a)) {
      throw bmv::InputError("'" + args.a + "': a must be positive-definite");
    }
    rows.push_back(bmv::verify_lemma1(a, b, args.p, args.r, args.tol));
  }
  int failures = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    cases.push_back(bmv::to_json(r));
    if (!r.pass) ++failures;
    worst = std::max(worst, r.rel_residual);
  }
  json result;
  result["cases"] = cases;
  result["count"] = static_cast<int>(rows.size());
  result["failures"] = failures;
  result["worst_rel_residual"] = worst;
  std::ostringstream csv;
  csv << "p,r,lhs,rhs,abs_residual,rel_residual,pass\n";
  for (const auto& r : rows) {
    csv << r.p << "," << r.r << "," << bmv::format_double(r.lhs) << ","
        << bmv::format_double(r.rhs) << "," << bmv::format_double(r.abs_residual)
        << "," << bmv::format_double(r.rel_residual) << ","
        << (r.pass ? "true" : "false") << "\n";
  }
  ctx.emit(result, csv.str());
  return failures == 0 ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  std::string mode = "exp", a, b, mixture, grid = "0:5:0.25";
  std::optional<double> p;
  int rmax = 4;
  double tol = 1e-12;
  bool cross_check = false;
  int nodes = 64;
};

std::vector<bmv::MixtureTerm> load_mixture(const std::string& path,
                                           Context& ctx) {
  std::string text = bmv::read_file(path);
  ctx.manifest.input_digests[path] = bmv::sha256_hex(text);
  std::vector<bmv::MixtureTerm> out;
  try {
    json j = json::parse(text);
    for (const auto& t : j.at("terms")) {
      out.push_back({t.at("weight").get<double>(), t.at("decay").get<double>()});
    }
  } catch (const json::exception& e) {
    throw bmv::InputError("'" + path + "': " + e.what());
  }
  if (out.empty()) throw bmv::InputError("'" + path + "': no mixture terms");
  return out;
}

int cmd_probe_cm(const ProbeArgs& args, Context& ctx) {
  auto grid = parse_grid(args.grid);
  auto a = ctx.load(args.a);
  auto b = ctx.load(args.b);
  if (a.n() != b.n()) throw bmv::InputError("--a and --b differ in dimension");
  if (!bmv::is_positive(b)) {
    throw bmv::InputError("'" + args.b + "': b must be positive");
  }
  if (args.rmax < 0) throw bmv::InputError("--rmax must be >= 0");
  bmv::CMReport rep;
  json extra = json::object();
  if (args.mode == "exp") {
    rep = bmv::cm_probe_exp(a, b, args.rmax, grid, args.tol, args.cross_check);
  } else if (args.mode == "invpow") {
    if (!args.p) throw bmv::InputError("--mode invpow needs --p");
    const double p = *args.p;
    if (!(p >= 0.0)) throw bmv::InputError("--p must be >= 0");
    if (!bmv::is_positive_definite(a)) {
      throw bmv::InputError("'" + args.a + "': a must be positive-definite");
    }
    if (p == std::floor(p)) {
      rep = bmv::cm_probe_invpow(a, b, static_cast<int>(p), args.rmax,
                                 args.tol, grid);
    } else {
      // Non-integer powers go through the Gamma-integral mixture; A + lambda B
      // dominates A on the grid, so the smallest eigenvalue of A anchors it.
      auto mix = bmv::inverse_power_mixture(p, args.nodes, bmv::eigh(a).min());
      rep = bmv::cm_probe_general_f(a, b, mix, grid, args.rmax, args.tol);
      rep.mode = "invpow";
      extra["approximation"] = "gauss-laguerre mixture";
      extra["nodes"] = args.nodes;
    }
  } else if (args.mode == "mixture") {
    if (args.mixture.empty()) throw bmv::InputError("--mode mixture needs --mixture");
    auto mix = load_mixture(args.mixture, ctx);
    rep = bmv::cm_probe_general_f(a, b, mix, grid, args.rmax, args.tol);
  } else {
    throw bmv::InputError("unknown mode '" + args.mode + "'");
  }
  const bool assertive = a.n() <= 2;
  json result = bmv::to_json(rep);
  result["n"] = a.n();
  result["assertive"] = assertive;
  for (auto& [k, v] : extra.items()) result[k] = v;
  ctx.emit(result, bmv::cm_csv(rep));
  if (assertive && !rep.violations.empty()) return kExitCheck;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SearchArgs {
  std::string objective = "coeff", word, field, out_dir = ".", prefix = "bmv";
  int n = 3;
  std::optional<int> p, r;
  int restarts = 100;
  int iters = 200;
  std::uint64_t seed = 0;
  bool certify = false;
  bool raw = false;
};

void write_record(const bmv::SearchRecord& rec, const std::string& dir,
                  const std::string& prefix, Context& ctx, json& files) {
  std::filesystem::create_directories(dir);
  const auto base = (std::filesystem::path(dir) / prefix).string();
  const std::string fa = base + "_a.json", fb = base + "_b.json";
  ctx.wrote(fa, bmv::to_text(bmv::matrix_to_json(rec.a)));
  ctx.wrote(fb, bmv::to_text(bmv::matrix_to_json(rec.b)));
  files["a"] = fa;
  files["b"] = fb;
  const auto& c = rec.certification;
  if (c.exact_a && c.exact_b) {
    const std::string ea = base + "_a_exact.json", eb = base + "_b_exact.json";
    ctx.wrote(ea, bmv::to_text(bmv::matrix_to_json(*c.exact_a)));
    ctx.wrote(eb, bmv::to_text(bmv::matrix_to_json(*c.exact_b)));
    files["a_exact"] = ea;
    files["b_exact"] = eb;
  }
  const std::string fr = base + "_record.json";
  ctx.wrote(fr, bmv::to_text(bmv::record_metadata(rec, fa, fb)));
  files["record"] = fr;
}

json record_summary(const bmv::SearchRecord& rec) {
  json j;
  j["best_value"] = rec.best_value;
  j["relative_value"] = rec.relative_value;
  j["reference_value"] = rec.reference_value;
  j["scale"] = rec.scale;
  j["restarts_run"] = rec.restarts_run;
  j["stream"] = rec.stream;
  j["iteration_trace"] = bmv::to_json(rec.trace);
  const auto& c = rec.certification;
  json cert;
  cert["status"] = std::string(bmv::to_string(c.status));
  if (c.exact_value) {
    cert["value"] = bmv::rational_json(*c.exact_value);
    cert["value_approx"] = c.exact_value->convert_to<double>();
  }
  cert["precision_bits"] = c.precision_bits;
  if (!c.note.empty()) cert["note"] = c.note;
  j["certification"] = cert;
  return j;
}

int cmd_search(const SearchArgs& args, Context& ctx) {
  bmv::SearchConfig cfg;
  cfg.n = args.n;
  cfg.restarts = args.restarts;
  cfg.max_iters = args.iters;
  cfg.seed = args.seed;
  cfg.certify = args.certify;
  cfg.relative = !args.raw;
  ctx.manifest.seeds.push_back(args.seed);
  if (args.objective == "term") {
    cfg.objective = bmv::Objective::single_term;
    if (args.word.empty()) throw bmv::InputError("--objective term needs --word");
    try {
      cfg.word = bmv::BinaryWord(args.word);
    } catch (const std::invalid_argument& e) {
      throw bmv::InputError(std::string("--word: ") + e.what());
    }
    cfg.p = args.p.value_or(cfg.word.length());
    cfg.r = args.r.value_or(cfg.word.weight());
    cfg.field = bmv::Field::real;
  } else if (args.objective == "coeff") {
    cfg.objective = bmv::Objective::coefficient;
    if (!args.p || !args.r) throw bmv::InputError("--objective coeff needs --p and --r");
    cfg.p = *args.p;
    cfg.r = *args.r;
  } else {
    throw bmv::InputError("unknown objective '" + args.objective + "'");
  }
  if (args.field == "complex") cfg.field = bmv::Field::complex;
  else if (args.field == "real") cfg.field = bmv::Field::real;
  else if (!args.field.empty()) throw bmv::InputError("unknown field '" + args.field + "'");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw bmv::InputError(e.what());
  }
  bmv::SearchRecord rec = cfg.objective == bmv::Objective::single_term
                              ? bmv::search_negative_term(cfg)
                              : bmv::search_min_coeff(cfg);
  json files;
  write_record(rec, args.out_dir, args.prefix, ctx, files);
  json result = record_summary(rec);
  result["config"] = bmv::to_json(rec.config);
  result["files"] = files;
  if (cfg.objective == bmv::Objective::single_term) {
    // The full coefficient at the same instance, for the record.
    result["coefficient"] = bmv::coeff_by_necklaces(rec.a, rec.b, cfg.p, cfg.r);
    const auto& c = rec.certification;
    if (c.exact_a && c.exact_b) {
      auto q = bmv::coeff_by_necklaces_exact(*c.exact_a, *c.exact_b, cfg.p, cfg.r);
      result["coefficient_exact"] = bmv::rational_json(q);
      result["coefficient_exact_approx"] = q.convert_to<double>();
    }
  }
  std::ostringstream csv;
  csv << "objective,n,p,r,best_value,relative_value,scale,certification\n"
      << bmv::to_string(cfg.objective) << "," << cfg.n << "," << cfg.p << ","
      << cfg.r << "," << bmv::format_double(rec.best_value) << ","
      << bmv::format_double(rec.relative_value) << ","
      << bmv::format_double(rec.scale) << ","
      << bmv::to_string(rec.certification.status) << "\n";
  ctx.emit(result, csv.str());
  if (cfg.objective == bmv::Objective::coefficient && cfg.n <= 2 &&
      rec.best_value < -1e-10 * rec.scale) {
    return kExitCheck;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CertifyArgs {
  std::string record, out_dir = ".", prefix = "certified";
};

int cmd_certify(const CertifyArgs& args, Context& ctx) {
  std::string text = bmv::read_file(args.record);
  ctx.manifest.input_digests[args.record] = bmv::sha256_hex(text);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw bmv::InputError("'" + args.record + "': " + e.what());
  }
  bmv::SearchRecord rec;
  try {
    rec.config = bmv::search_config_from_json(j.at("config"));
    rec.best_value = j.at("best_value").get<double>();
    const auto dir = std::filesystem::path(args.record).parent_path();
    auto resolve = [&](const std::string& f) {
      auto p = std::filesystem::path(f);
      if (p.is_absolute() || std::filesystem::exists(p)) return p.string();
      return (dir / p.filename()).string();
    };
    rec.a = ctx.load(resolve(j.at("a_file").get<std::string>()));
    rec.b = ctx.load(resolve(j.at("b_file").get<std::string>()));
    if (j.contains("factor_a") && j.contains("factor_b")) {
      rec.factor_a = bmv::complex_from_json(j["factor_a"], "factor_a");
      rec.factor_b = bmv::complex_from_json(j["factor_b"], "factor_b");
    }
  } catch (const json::exception& e) {
    throw bmv::InputError("'" + args.record + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw bmv::InputError("'" + args.record + "': " + e.what());
  }
  rec.scale = std::pow(bmv::norm(rec.a), rec.config.p - rec.config.r) *
              std::pow(bmv::norm(rec.b), rec.config.r) * rec.config.n;
  rec = bmv::certify_instance(std::move(rec));
  json files;
  write_record(rec, args.out_dir, args.prefix, ctx, files);
  json result = record_summary(rec);
  result["files"] = files;
  ctx.emit(result);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TermsArgs {
  std::string a, b;
  int p = 0, r = 0;
  bool exact = false;
};

int cmd_terms(const TermsArgs& args, Context& ctx) {
  auto a = ctx.load(args.a);
  auto b = ctx.load(args.b);
  if (a.n() != b.n()) throw bmv::InputError("--a and --b differ in dimension");
  if (args.exact && !(a.has_exact() && b.has_exact())) {
    throw bmv::InputError("--exact needs matrix files with num/den entries");
  }
  if (args.p < 1 || args.r < 0 || args.r > args.p) {
    throw bmv::InputError("need p >= 1 and 0 <= r <= p");
  }
  json rows = json::array();
  for (const auto& t : bmv::term_values(a, b, args.p, args.r)) {
    json row;
    row["representative"] = t.cls.representative.str();
    row["orbit_size"] = t.cls.orbit_size;
    row["value"] = t.value;
    if (args.exact) {
      auto v = bmv::word_trace_exact(a, b, t.cls.representative);
      row["exact"] = bmv::rational_json(v.re);
    }
    rows.push_back(row);
  }
  auto mt = bmv::min_term(a, b, args.p, args.r);
  json result;
  result["p"] = args.p;
  result["r"] = args.r;
  result["terms"] = rows;
  result["min_term"] = {{"representative", mt.cls.representative.str()},
                        {"value", mt.value}};
  result["coefficient"] = bmv::coeff_by_necklaces(a, b, args.p, args.r);
  ctx.emit(result, bmv::term_csv(a, b, args.p, args.r, args.exact));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string kind = "psd";
  int n = 2;
  int rank = 0;
  std::uint64_t seed = 0;
  bool exact = false;
};

int cmd_gen(const GenArgs& args, Context& ctx) {
  if (args.n < 1) throw bmv::InputError("--n must be >= 1");
  ctx.manifest.seeds.push_back(args.seed);
  bmv::Philox rng(args.seed);
  bmv::HermitianMatrix m;
  if (args.kind == "hermitian") {
    m = bmv::random_hermitian(args.n, rng);
  } else if (args.kind == "psd") {
    const int rank = args.rank > 0 ? args.rank : args.n;
    if (rank > args.n) throw bmv::InputError("--rank must be <= n");
    m = bmv::random_psd(args.n, rank, rng, args.exact);
  } else if (args.kind == "pd") {
    m = bmv::random_pd(args.n, rng);
  } else {
    throw bmv::InputError("unknown kind '" + args.kind + "'");
  }
  std::string text = bmv::to_text(bmv::matrix_to_json(m));
  if (ctx.common->out.empty()) {
    std::cout << text;
  } else {
    bmv::write_file(ctx.common->out, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string suite = "quick";
  std::uint64_t seed = 0;
  std::string a, b;
};

int cmd_oracle_diff(const OracleArgs& args, Context& ctx) {
  const bool full = args.suite == "full";
  if (!full && args.suite != "quick") {
    throw bmv::InputError("unknown suite '" + args.suite + "'");
  }
  std::optional<bmv::HermitianMatrix> ea, eb;
  if (!args.a.empty() || !args.b.empty()) {
    if (args.a.empty() || args.b.empty()) {
      throw bmv::InputError("--a and --b go together");
    }
    ea = ctx.load(args.a);
    eb = ctx.load(args.b);
    if (ea->n() != eb->n()) throw bmv::InputError("--a and --b differ in dimension");
  }
  ctx.manifest.seeds.push_back(args.seed);
  std::vector<bmv::SuiteResult> results;
  results.push_back(bmv::cross_engine_suite(args.seed, full ? 200 : 40,
                                            full ? 20 : 6, ea ? &*ea : nullptr,
                                            eb ? &*eb : nullptr));
  results.push_back(bmv::lemma1_suite(args.seed, full ? 50 : 2, full ? 12 : 8));
  results.push_back(bmv::quadrature_suite(args.seed, full ? 50 : 10));
  results.push_back(bmv::series_suite(args.seed, full ? 50 : 10));
  json suites = json::array();
  bool pass = true;
  std::ostringstream csv;
  csv << "suite,cases,failures,worst,threshold,pass\n";
  for (const auto& r : results) {
    suites.push_back(bmv::to_json(r));
    pass = pass && r.pass;
    csv << r.name << "," << r.cases << "," << r.failures << ","
        << bmv::format_double(r.worst) << "," << bmv::format_double(r.threshold)
        << "," << (r.pass ? "true" : "false") << "\n";
    std::fprintf(stderr, "%-14s %6d cases %4d failures  worst %.3e  (<= %.1e)  %s\n",
                 r.name.c_str(), r.cases, r.failures, r.worst, r.threshold,
                 r.pass ? "PASS" : "FAIL");
  }
  json result;
  result["suite"] = args.suite;
  result["suites"] = suites;
  result["pass"] = pass;
  ctx.emit(result, csv.str());
  return pass ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-polynomial and complete-monotonicity toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bmv::kToolVersion));
  app.option_defaults()->always_capture_default();
  std::set<const CLI::Option*> flags;
  auto flag = [&](CLI::App* sub, const std::string& name, bool& target,
                  const std::string& desc = {}) {
    flags.insert(sub->add_flag(name, target, desc));
  };
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Report file (default: stdout)");
    sub->add_option("--format", common.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    flag(sub, "--timing", common.timing, "Record wall-clock time");
  };

  CoeffsArgs coeffs;
  auto* c = app.add_subcommand("coeffs", "Coefficients of Tr(A + l B)^p");
  c->add_option("--a", coeffs.a)->required();
  c->add_option("--b", coeffs.b)->required();
  c->add_option("--p", coeffs.p)->required();
  c->add_option("--r-max", coeffs.r_max);
  c->add_option("--engine", coeffs.engine, "dp, brute, necklace or all");
  flag(c, "--exact", coeffs.exact);
  add_common(c);

  Lemma1Args lemma;
  auto* l = app.add_subcommand("verify-lemma1", "Inverse-power derivative identity");
  l->add_option("--a", lemma.a);
  l->add_option("--b", lemma.b);
  l->add_option("--p", lemma.p);
  l->add_option("--r", lemma.r);
  l->add_option("--tol", lemma.tol);
  l->add_option("--random", lemma.random, "Instances per (p, r)");
  l->add_option("--dim", lemma.dim);
  l->add_option("--seed", lemma.seed);
  l->add_option("--pmax", lemma.pmax);
  l->add_option("--rmax", lemma.rmax);
  add_common(l);

  ProbeArgs probe;
  auto* pc = app.add_subcommand("probe-cm", "Sign pattern of lambda-derivatives");
  pc->add_option("--mode", probe.mode, "exp, invpow or mixture");
  pc->add_option("--a", probe.a)->required();
  pc->add_option("--b", probe.b)->required();
  pc->add_option("--p", probe.p);
  pc->add_option("--rmax", probe.rmax);
  pc->add_option("--grid", probe.grid, "start:stop:step");
  pc->add_option("--mixture", probe.mixture);
  pc->add_option("--tol", probe.tol);
  pc->add_option("--nodes", probe.nodes, "Quadrature nodes for non-integer p");
  flag(pc, "--cross-check", probe.cross_check,
               "Compare exp derivatives with finite differences");
  add_common(pc);

  SearchArgs search;
  auto* s = app.add_subcommand("search", "Minimize a coefficient or one term");
  s->add_option("--objective", search.objective, "coeff or term");
  s->add_option("--word", search.word);
  s->add_option("--n", search.n);
  s->add_option("--p", search.p);
  s->add_option("--r", search.r);
  s->add_option("--restarts", search.restarts);
  s->add_option("--iters", search.iters);
  s->add_option("--seed", search.seed);
  s->add_option("--field", search.field, "complex or real");
  s->add_option("--out-dir", search.out_dir);
  s->add_option("--prefix", search.prefix);
  flag(s, "--certify", search.certify);
  flag(s, "--raw", search.raw, "Minimize the raw value, not the ratio");
  add_common(s);

  CertifyArgs certify;
  auto* ce = app.add_subcommand("certify", "Exact re-evaluation of a search record");
  ce->add_option("--record", certify.record)->required();
  ce->add_option("--out-dir", certify.out_dir);
  ce->add_option("--prefix", certify.prefix);
  add_common(ce);

  TermsArgs terms;
  auto* t = app.add_subcommand("terms", "Necklace term table");
  t->add_option("--a", terms.a)->required();
  t->add_option("--b", terms.b)->required();
  t->add_option("--p", terms.p)->required();
  t->add_option("--r", terms.r)->required();
  flag(t, "--exact", terms.exact);
  add_common(t);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Random matrix file");
  g->add_option("--kind", gen.kind, "hermitian, psd or pd");
  g->add_option("--n", gen.n);
  g->add_option("--rank", gen.rank);
  g->add_option("--seed", gen.seed);
  flag(g, "--exact", gen.exact, "Gaussian-integer Gram factor");
  add_common(g);

  OracleArgs oracle;
  auto* o = app.add_subcommand("oracle-diff", "Regression suites");
  o->add_option("--suite", oracle.suite, "quick or full");
  o->add_option("--seed", oracle.seed);
  o->add_option("--a", oracle.a, "Extra cross-engine instance");
  o->add_option("--b", oracle.b);
  add_common(o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  Context ctx;
  ctx.common = &common;
  ctx.manifest.subcommand = sub->get_name();
  ctx.manifest.parameters = echo_parameters(*sub, flags);
  try {
    if (sub == c) return cmd_coeffs(coeffs, ctx);
    if (sub == l) return cmd_verify_lemma1(lemma, ctx);
    if (sub == pc) return cmd_probe_cm(probe, ctx);
    if (sub == s) return cmd_search(search, ctx);
    if (sub == ce) return cmd_certify(certify, ctx);
    if (sub == t) return cmd_terms(terms, ctx);
    if (sub == g) return cmd_gen(gen, ctx);
    if (sub == o) return cmd_oracle_diff(oracle, ctx);
  } catch (const bmv::InputError& e) {
    std::cerr << "bmv: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bmv: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "bmv: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "bmv: " << e.what() << "\n";
    return kExitCheck;
  }
  return kExitInput;
}
