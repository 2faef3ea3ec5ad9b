#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "bmv/io.hpp"
#include "test_util.hpp"

namespace bmv {
namespace {

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "bmv_test_io";
  std::filesystem::create_directories(d);
  return d;
}

TEST(Text, SeventeenDigitsRoundTrip) {
  Philox rng(1);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.normal() * std::pow(10.0, rng.uniform_int(-30, 30));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "1.0000000000000001e-01");
}

TEST(Text, DumpUsesFullPrecision) {
  json j;
  j["x"] = 0.1;
  j["v"] = {1.0, 2.5};
  auto text = to_text(j);
  EXPECT_NE(text.find("1.0000000000000001e-01"), std::string::npos);
  auto back = json::parse(text);
  EXPECT_EQ(back["x"].get<double>(), 0.1);
}

TEST(Text, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(MatrixFile, FloatRoundTripIsBitwise) {
  Philox rng(2);
  auto m = random_hermitian(4, rng);
  auto path = (temp_dir() / "m.json").string();
  save_matrix(path, m);
  auto back = load_matrix(path);
  EXPECT_TRUE(back.mat() == m.mat());
  EXPECT_EQ(back.classification(), m.classification());
}

TEST(MatrixFile, ExactRoundTrip) {
  Philox rng(3);
  auto m = random_psd(3, 2, rng, true);
  auto path = (temp_dir() / "e.json").string();
  save_matrix(path, m);
  auto back = load_matrix(path);
  ASSERT_TRUE(back.has_exact());
  EXPECT_TRUE(back.exact() == m.exact());
  EXPECT_EQ(back.classification(), Classification::positive);
}

TEST(MatrixFile, HugeIntegersTravelAsStrings) {
  ExactMatrix e(1);
  e(0, 0) = GaussianRational(Rational(BigInt("123456789012345678901234567890"),
                                      BigInt(7)));
  HermitianMatrix m(e);
  auto j = matrix_to_json(m);
  EXPECT_TRUE(j["num"]["re"][0][0].is_string());
  auto back = matrix_from_json(json::parse(to_text(j)), "doc");
  EXPECT_TRUE(back.exact() == e);
}

TEST(MatrixFile, CorruptFilesNameThePath) {
  auto dir = temp_dir();
  const std::pair<const char*, const char*> cases[] = {
      {"bad_syntax.json", "{\"n\": 2, \"re\": [[1, 0], [0"},
      {"bad_shape.json", "{\"n\": 2, \"re\": [[1, 0]], \"im\": [[0, 0], [0, 0]]}"},
      {"not_hermitian.json",
       "{\"n\": 2, \"re\": [[1, 2], [0, 1]], \"im\": [[0, 0], [0, 0]]}"},
      {"bad_class.json",
       "{\"n\": 1, \"re\": [[1]], \"im\": [[0]], \"classification\": \"odd\"}"},
      {"half_exact.json", "{\"n\": 1, \"re\": [[1]], \"im\": [[0]], \"num\": {}}"},
  };
  for (const auto& [name, text] : cases) {
    auto path = (dir / name).string();
    write_file(path, text);
    try {
      load_matrix(path);
      ADD_FAILURE() << name << " loaded";
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(path), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(load_matrix((dir / "missing.json").string()), InputError);
}

TEST(Manifest, WallClockOnlyWhenRequested) {
  RunManifest m;
  m.subcommand = "coeffs";
  m.seeds = {4};
  auto j = m.to_json();
  EXPECT_FALSE(j.contains("wall_clock_seconds"));
  EXPECT_EQ(j["tool_version"], kToolVersion);
  m.wall_seconds = 1.5;
  EXPECT_EQ(m.to_json()["wall_clock_seconds"].get<double>(), 1.5);
}

TEST(SearchRecordDoc, ConfigRoundTrip) {
  SearchConfig c;
  c.n = 4;
  c.p = 6;
  c.r = 3;
  c.objective = Objective::single_term;
  c.word = BinaryWord("AABBAB");
  c.field = Field::real;
  c.normalization = Normalization::operator_norm_one;
  c.seed = 99;
  c.relative = false;
  auto back = search_config_from_json(json::parse(to_text(to_json(c))));
  EXPECT_EQ(to_text(to_json(back)), to_text(to_json(c)));
}

TEST(SearchRecordDoc, BadConfigIsInputError) {
  json j = {{"n", 3}, {"p", 6}};
  EXPECT_THROW(search_config_from_json(j), InputError);
}

TEST(Csv, SameNumbersAsJson) {
  Philox rng(4);
  auto a = random_psd(3, 3, rng);
  auto b = random_psd(3, 3, rng);
  auto tp = trace_poly(a, b, 5);
  auto csv = coeff_csv({"dp"}, {tp.coeffs}, {});
  json j = json::parse(to_text(json(tp.coeffs)));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "r,dp");
  for (std::size_t r = 0; r < tp.coeffs.size(); ++r) {
    std::getline(in, line);
    auto v = std::stod(line.substr(line.find(',') + 1));
    EXPECT_EQ(v, j[r].get<double>());
    EXPECT_EQ(v, tp.coeffs[r]);
  }
}

TEST(Csv, TermRowsCarryExactFields) {
  Philox rng(5);
  auto a = random_psd(2, 2, rng, true);
  auto b = random_psd(2, 2, rng, true);
  auto csv = term_csv(a, b, 4, 2, true);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "p,r,representative,orbit_size,value,exact_num,exact_den");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 2);
}

TEST(Csv, CmRowsPerGridPointAndOrder) {
  CMatrix am(2, 2), bm(2, 2);
  am << 1, 0, 0, 2;
  bm << 1, 0.5, 0.5, 1;
  auto rep = cm_probe_exp(HermitianMatrix(am), HermitianMatrix(bm), 3,
                          {0.0, 1.0}, 1e-12);
  auto csv = cm_csv(rep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
}

}  // namespace
}  // namespace bmv
