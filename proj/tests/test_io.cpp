#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>

#include "dlcz/io.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace dlcz;
using namespace dlcz::io;

TEST_CASE("default configuration is the published experiment") {
  const auto c = parse_config("{}");
  CHECK(c.model.alpha1 == 0.16);
  CHECK(c.model.kappa2 == 1.91);
  CHECK(c.sequence.trial_period == 1e-6);
  CHECK(c.filter.stages.size() == 3);
  CHECK(resolve_p_grid(c).size() == 40);
}

TEST_CASE("configuration round trip") {
  const char* text = R"({
    "model": {"p": 0.02, "kappa1": 0.05, "b2": 2e-4},
    "grid": {"p_log": {"min": 1e-3, "max": 0.1, "count": 7}},
    "montecarlo": {"n_trials": 12345, "seed": 99, "detector": "linearized-rejection", "threads": 2},
    "sequence": {"trials_per_cycle": 500, "metadata": {"temperature_k": 3e-5}},
    "filter": {"stages": [{"name": "a", "isolation_db": 50, "transmission": 0.5}], "input_power_w": 1e-3},
    "fit": {"initial": {"kappa1": 0.1}, "use_qc": false, "starts": 3},
    "aux": {"decay": {"tau_s": 2e-6, "points": 11}, "hbt": {"detector": "threshold", "without_backgrounds": true},
            "timing": {"p1": 0.01, "pc": 0.2}}
  })";
  const auto c = parse_config(text);
  CHECK(c.model.p == 0.02);
  CHECK(c.model.kappa1 == 0.05);
  CHECK(c.model.b2 == 2e-4);
  CHECK(c.grid.p.size() == 7);
  CHECK(c.montecarlo.n_trials == 12345);
  CHECK(c.montecarlo.detector == mc::DetectorMode::linearized_rejection);
  CHECK(c.sequence.trials_per_cycle == 500);
  CHECK(c.filter.stages.size() == 1);
  CHECK(c.aux.filter.input_power_w == 1e-3);
  CHECK_FALSE(c.fit.options.use_qc);
  CHECK(c.fit.options.starts == 3);
  CHECK(c.aux.decay.points == 11);
  CHECK(c.aux.hbt.detector == fock::DetectorKind::threshold);
  CHECK(c.aux.hbt.without_backgrounds);

  const json doc = config_to_json(c);
  const auto back = parse_config(doc.dump());
  CHECK(config_to_json(back) == doc);
  CHECK(back.grid.p == c.grid.p);
  CHECK(back.montecarlo.seed == 99);
}

TEST_CASE("configuration errors locate the problem") {
  SUBCASE("unknown key names its dotted path") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"kapa1": 0.1}})", "cfg.json"),
                         doctest::Contains("cfg.json: model.kapa1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"aux": {"decay": {"tau": 1}}})"), doctest::Contains("aux.decay.tau"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"colour": 1})"), doctest::Contains("colour"), ConfigError);
  }
  SUBCASE("syntax errors give line and column") {
    CHECK_THROWS_WITH_AS(parse_config("{\n  \"model\": {\n    \"p\": 0.1,\n  }\n}", "cfg.json"),
                         doctest::Contains("cfg.json:4:"), ConfigError);
  }
  SUBCASE("wrong types") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"p": "0.1"}})"), doctest::Contains("model.p"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"montecarlo": {"n_trials": -5}})"),
                         doctest::Contains("montecarlo.n_trials"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"montecarlo": {"detector": "pnr"}})"),
                         doctest::Contains("montecarlo.detector"), ConfigError);
  }
  SUBCASE("model validation") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"alpha1": 1.5}})"), doctest::Contains("alpha1"), InvalidArgument);
  }
  SUBCASE("grid values outside [0,1) are rejected by value") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"p": [0.1, 1.0]}})"), doctest::Contains("grid.p[1]"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"p": [0.1, 1.0]}})"), doctest::Contains("grid value 1 "),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"p": [-0.25]}})"), doctest::Contains("-0.25"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"p": []}})"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"p": [0.1], "p1": [0.01]}})"), doctest::Contains("exactly one"),
                         ConfigError);
  }
  SUBCASE("sequence invariants") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"sequence": {"trials_per_cycle": 5000}})"), doctest::Contains("sequence"),
                         InvalidArgument);
  }
  SUBCASE("fit needs an observable") {
    CHECK_THROWS_AS(parse_config(R"({"fit": {"use_g12": false, "use_qc": false}})"), ConfigError);
  }
}

TEST_CASE("p1 grids are inverted through the model") {
  const auto c = parse_config(R"({"grid": {"p1": [1e-3, 5.163e-3, 0.02]}})");
  const auto ps = resolve_p_grid(c);
  REQUIRE(ps.size() == 3);
  CHECK(ps[1] == doctest::Approx(0.030).epsilon(1e-3));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps[i] == doctest::Approx(oracle::invert_p1(c.model.alpha1, c.model.kappa1, c.model.b1, c.grid.p1[i]))
                       .epsilon(1e-9));
  }
  CHECK_THROWS_AS(resolve_p_grid(parse_config(R"({"grid": {"p1": [1e-5]}})")), InvalidArgument);
}

TEST_CASE("format_double reads back exactly") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(1.0, 10.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double x = mant(rng) * std::pow(10.0, ex(rng));
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  const std::string tiny = format_double(std::numeric_limits<double>::denorm_min());
  CHECK(std::strtod(tiny.c_str(), nullptr) == std::numeric_limits<double>::denorm_min());
}

TEST_CASE("CSV write and read") {
  const std::vector<std::vector<double>> rows{{1.0 / 3.0, 2e-300, -7.0}, {0.1, 0.2, 0.30000000000000004}};
  std::stringstream ss;
  write_csv(ss, {"a", "b", "c"}, rows);
  const auto t = read_csv(ss);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::stod(t.rows[r][c]) == rows[r][c]);
  }

  std::istringstream in("# comment\n\n x , y\n1, 2\n\n#\n3 ,4\n");
  const auto u = read_csv(in);
  CHECK(u.header == std::vector<std::string>{"x", "y"});
  REQUIRE(u.rows.size() == 2);
  CHECK(u.rows[1] == std::vector<std::string>{"3", "4"});
  CHECK(u.line_numbers == std::vector<int>{4, 7});
}

TEST_CASE("measured points") {
  SUBCASE("well formed, with an absent observable") {
    std::istringstream in("p1,g12,g12_err,qc,qc_err\n0.005,11.6,0.5,0.27,0.02\n0.01,6,0.3,,\n");
    const auto pts = read_measured_points(in);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].p1 == 0.005);
    CHECK(pts[0].g12->value == 11.6);
    CHECK(pts[0].qc->sigma == 0.02);
    CHECK_FALSE(pts[1].qc.has_value());
  }
  SUBCASE("header mismatch") {
    std::istringstream in("p1,g12,qc\n0.005,11.6,0.27\n");
    CHECK_THROWS_WITH_AS(read_measured_points(in, "d.csv"), doctest::Contains("does not match"), ConfigError);
  }
  SUBCASE("reordered header") {
    std::istringstream in("g12,p1,g12_err,qc,qc_err\n");
    CHECK_THROWS_AS(read_measured_points(in), ConfigError);
  }
  SUBCASE("non-numeric cell names its line and column") {
    std::istringstream in("p1,g12,g12_err,qc,qc_err\n0.005,11.6,0.5,0.27,0.02\n0.01,six,0.3,0.2,0.01\n");
    CHECK_THROWS_WITH_AS(read_measured_points(in, "d.csv"), doctest::Contains("d.csv:3: column 'g12'"), ConfigError);
  }
  SUBCASE("value without its error") {
    std::istringstream in("p1,g12,g12_err,qc,qc_err\n0.005,11.6,,0.27,0.02\n");
    CHECK_THROWS_WITH_AS(read_measured_points(in), doctest::Contains("g12"), ConfigError);
  }
  SUBCASE("missing p1") {
    std::istringstream in("p1,g12,g12_err,qc,qc_err\n,11.6,0.5,0.27,0.02\n");
    CHECK_THROWS_WITH_AS(read_measured_points(in), doctest::Contains("p1"), ConfigError);
  }
  SUBCASE("wrong cell count") {
    std::istringstream in("p1,g12,g12_err,qc,qc_err\n0.005,11.6,0.5\n");
    CHECK_THROWS_WITH_AS(read_measured_points(in), doctest::Contains("cells"), ConfigError);
  }
  SUBCASE("non-positive error") {
    std::istringstream in("p1,g12,g12_err,qc,qc_err\n0.005,11.6,0,0.27,0.02\n");
    CHECK_THROWS_AS(read_measured_points(in), ConfigError);
  }
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.command = "simulate";
  m.parameters = {{"config", config_to_json(Config{})}, {"format", "csv"}};
  m.seeds = {7, 18446744073709551615ULL};
  m.tool_version = "1.2.3";
  m.input_digests = {{"data.csv", sha256_hex("x")}};
  m.timestamp = utc_timestamp();
  CHECK(m.timestamp.size() == 20);
  CHECK(m.timestamp.back() == 'Z');
  const auto back = manifest_from_json(json::parse(to_json(m).dump()));
  CHECK(back.command == m.command);
  CHECK(back.parameters == m.parameters);
  CHECK(back.seeds == m.seeds);
  CHECK(back.tool_version == m.tool_version);
  CHECK(back.input_digests == m.input_digests);
  CHECK(back.timestamp == m.timestamp);
  CHECK_THROWS_AS(manifest_from_json(json::object()), InvalidArgument);
}
