#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "dlcz/diagnostics.hpp"
#include "dlcz/montecarlo.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace dlcz;
using namespace dlcz::mc;

namespace {

oracle::Field field_of(const model::ModelParams& m) {
  return {m.p, m.coherent_mean1() + m.incoherent_mean1(), m.coherent_mean2() + m.incoherent_mean2()};
}

// |k/n - p| in units of the binomial standard error of the count.
double z_score(std::uint64_t k, std::uint64_t n, double p) {
  const double nn = static_cast<double>(n);
  return std::abs(static_cast<double>(k) - nn * p) / std::sqrt(nn * p * (1.0 - p));
}

double stddev(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("no light, no clicks") {
  TrialBatchConfig c;
  c.n_trials = 200'000;
  for (std::uint64_t seed : {0ull, 1ull, 0xdeadbeefull}) {
    c.seed = seed;
    const auto k = sample_trials(model::ideal_params(0.0, 0.16, 0.035, 0.14), c);
    CHECK(k.n_trials == c.n_trials);
    CHECK(k == ClickCounts{c.n_trials});
  }
}

TEST_CASE("determinism") {
  const auto m = model::paper_params(0.05);
  TrialBatchConfig c;
  c.n_trials = 1'000'003;
  c.seed = 42;
  const auto ref = sample_trials(m, c);
  CHECK(sample_trials(m, c) == ref);
  for (std::uint64_t batch : {1ull, 3ull, 100ull}) {
    for (unsigned threads : {1u, 2u, 5u}) {
      auto d = c;
      d.batch_size = batch;
      d.threads = threads;
      CHECK(sample_trials(m, d) == ref);
    }
  }
  std::ostringstream tap;
  auto small = c;
  small.n_trials = 70'000;
  const auto tapped = sample_trials(m, small, &tap);
  CHECK(tapped == sample_trials(m, small));
  auto other = c;
  other.seed = 43;
  CHECK_FALSE(sample_trials(m, other) == ref);
}

TEST_CASE("precondition errors") {
  TrialBatchConfig c;
  c.n_trials = 0;
  CHECK_THROWS_AS(sample_trials(model::paper_params(), c), InvalidArgument);
  c.n_trials = 10;
  c.batch_size = 0;
  CHECK_THROWS_AS(sample_trials(model::paper_params(), c), InvalidArgument);
  c.batch_size = 1;
  CHECK_THROWS_AS(sample_trials(model::paper_params(1.0), c), InvalidArgument);
  c.dark1 = 2.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("click count bookkeeping") {
  ClickCounts k{100, 10, 5, 5, 9, 4, 2, 2, 1, 1};
  CHECK_NOTHROW(k.validate());
  auto bad = k;
  bad.k_triple = 3;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = k;
  bad.k12 = 1;  // fewer than k1_2a
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = k;
  bad.k1 = 101;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  ClickCounts huge{std::numeric_limits<std::uint64_t>::max()};
  CHECK_THROWS_AS(huge += k, NumericalError);
  auto sum = k;
  sum += k;
  CHECK(sum.n_trials == 200);
  CHECK(sum.k_triple == 2);
}

TEST_CASE("estimates and Poisson error propagation") {
  SUBCASE("propagation formula") {
    ClickCounts k{};
    k.n_trials = 1'000'000;
    k.k1 = 10'000;
    k.k2 = 10'000;
    k.k12 = 100;
    const auto e = estimate(k, 0.14);
    REQUIRE(e.g12);
    CHECK(e.g12->value == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(e.g12->sigma);
    CHECK(*e.g12->sigma / e.g12->value == doctest::Approx(std::sqrt(1.0 / 100 + 2.0 / 10000)).epsilon(1e-12));
    CHECK(*e.g12->sigma == doctest::Approx(0.101).epsilon(1e-2));
    REQUIRE(e.pc);
    CHECK(e.pc->value == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(*e.pc->sigma == doctest::Approx(0.01 * std::sqrt(1.0 / 100 + 1.0 / 10000)).epsilon(1e-12));
    CHECK(e.qc->value == doctest::Approx(0.01 / 0.14).epsilon(1e-15));
    CHECK(e.p1.value == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(*e.p1.sigma == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK_FALSE(e.w);  // no split-arm coincidences
  }
  SUBCASE("zero coincidences give a value without an error") {
    ClickCounts k{};
    k.n_trials = 1000;
    k.k1 = 10;
    k.k2 = 10;
    const auto e = estimate(k, 0.14);
    REQUIRE(e.g12);
    CHECK(e.g12->value == 0.0);
    CHECK_FALSE(e.g12->sigma);
    // A plain rate with k = 0 is exactly determined.
    CHECK(e.p12.value == 0.0);
    REQUIRE(e.p12.sigma);
    CHECK(*e.p12.sigma == 0.0);
  }
  SUBCASE("vanishing denominators leave conditional estimates undefined") {
    ClickCounts k{};
    k.n_trials = 1000;
    k.k2 = 4;
    const auto e = estimate(k, 0.14);
    CHECK_FALSE(e.g12);
    CHECK_FALSE(e.pc);
    CHECK_FALSE(e.qc);
    CHECK_FALSE(e.w);
  }
  SUBCASE("antibunching estimate") {
    ClickCounts k{1000, 100, 50, 50, 90, 20, 10, 10, 1, 1};
    const auto e = estimate(k, 0.14);
    REQUIRE(e.w);
    CHECK(e.w->value == doctest::Approx(100.0 * 1.0 / (10.0 * 10.0)).epsilon(1e-15));
    CHECK(*e.w->sigma == doctest::Approx(e.w->value * std::sqrt(1.0 / 100 + 1.0 + 0.1 + 0.1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(estimate(ClickCounts{}, 0.14), InvalidArgument);
}

TEST_CASE("sampled photon numbers carry the squeezed-state correlation") {
  const auto m = model::paper_params(0.2);
  TrialBatchConfig c;
  c.n_trials = 200'000;
  c.seed = 7;
  std::stringstream tap;
  (void)sample_trials(m, c, &tap);
  std::string line;
  std::getline(tap, line);
  CHECK(line == "trial,n_pair,n1,n2,n2a,n2b");
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0, sp = 0;
  std::uint64_t rows = 0;
  bool split_ok = true;
  while (std::getline(tap, line)) {
    std::istringstream in(line);
    char comma;
    std::uint64_t trial;
    int pair, n1, n2, a, b;
    in >> trial >> comma >> pair >> comma >> n1 >> comma >> n2 >> comma >> a >> comma >> b;
    split_ok = split_ok && a + b == n2 && n1 >= pair && n2 >= pair && trial == rows;
    s1 += n1;
    s2 += n2;
    s11 += double(n1) * n1;
    s22 += double(n2) * n2;
    s12 += double(n1) * n2;
    sp += pair;
    ++rows;
  }
  CHECK(split_ok);
  REQUIRE(rows == c.n_trials);
  const double n = static_cast<double>(rows);
  const double corr = (s12 / n - s1 * s2 / (n * n)) /
                      std::sqrt((s11 / n - s1 * s1 / (n * n)) * (s22 / n - s2 * s2 / (n * n)));
  const double mbar = m.tmss_mean();
  const double var_pair = mbar * (1.0 + mbar);
  const double bg1 = m.coherent_mean1() + m.incoherent_mean1();
  const double bg2 = m.coherent_mean2() + m.incoherent_mean2();
  const double expected = var_pair / std::sqrt((var_pair + bg1) * (var_pair + bg2));
  CHECK(std::abs(corr - expected) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sp / n - mbar) < 5.0 * std::sqrt(var_pair / n));
}

TEST_CASE("agreement with the threshold oracle over 100 seeds") {
  const auto m = model::paper_params(0.03);
  const auto o = oracle::threshold_hbt(field_of(m), {m.alpha1, m.alpha2});
  TrialBatchConfig c;
  c.n_trials = 10'000'000;
  int ok_p1 = 0, ok_p2 = 0, ok_p12 = 0, ok_triple = 0;
  std::vector<double> g12, pc, g12_sigma, pc_sigma;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    c.seed = seed;
    const auto k = sample_trials(m, c);
    ok_p1 += z_score(k.k1, k.n_trials, o.p1) <= 4.0;
    ok_p2 += z_score(k.k2, k.n_trials, o.p2) <= 4.0;
    ok_p12 += z_score(k.k12, k.n_trials, o.p12) <= 4.0;
    ok_triple += z_score(k.k_triple, k.n_trials, o.p1_2a_2b) <= 4.0;
    const auto e = estimate(k, m.eta2);
    g12.push_back(e.g12->value);
    pc.push_back(e.pc->value);
    g12_sigma.push_back(*e.g12->sigma);
    pc_sigma.push_back(*e.pc->sigma);
  }
  CHECK(ok_p1 >= 95);
  CHECK(ok_p2 >= 95);
  CHECK(ok_p12 >= 95);
  CHECK(ok_triple >= 95);
  const double mean_g12_sigma = std::accumulate(g12_sigma.begin(), g12_sigma.end(), 0.0) / 100.0;
  const double mean_pc_sigma = std::accumulate(pc_sigma.begin(), pc_sigma.end(), 0.0) / 100.0;
  CHECK(std::abs(stddev(g12) / mean_g12_sigma - 1.0) < 0.25);
  CHECK(std::abs(stddev(pc) / mean_pc_sigma - 1.0) < 0.25);
}

TEST_CASE("linearized-rejection mode reproduces the closed forms") {
  const auto m = model::paper_params(0.03);
  TrialBatchConfig c;
  c.n_trials = 10'000'000;
  c.seed = 11;
  c.detector = DetectorMode::linearized_rejection;
  const auto k = sample_trials(m, c);
  const auto s = model::singles(m);
  CHECK(z_score(k.k1, k.n_trials, s.p1) < 4.0);
  CHECK(z_score(k.k2, k.n_trials, s.p2) < 4.0);
  CHECK(z_score(k.k12, k.n_trials, model::joint(m)) < 4.0);

  auto bright = model::ideal_params(0.9);
  c.n_trials = 100'000;
  CHECK_THROWS_AS(sample_trials(bright, c), NumericalError);
}

TEST_CASE("detector dark counts") {
  const auto m = model::paper_params(0.03);
  TrialBatchConfig c;
  c.n_trials = 4'000'000;
  c.seed = 5;
  c.dark1 = 2e-3;
  c.dark2 = 1e-3;
  const auto k = sample_trials(m, c);
  const auto o = oracle::threshold_hbt(field_of(m), {m.alpha1, m.alpha2, c.dark1, c.dark2});
  CHECK(z_score(k.k1, k.n_trials, o.p1) < 4.0);
  CHECK(z_score(k.k2a, k.n_trials, o.p2a) < 4.0);
  CHECK(z_score(k.k2, k.n_trials, o.p2) < 4.0);
  CHECK(z_score(k.k12, k.n_trials, o.p12) < 4.0);
  CHECK(z_score(k.k2a_2b, k.n_trials, o.p2a_2b) < 4.0);
}

TEST_CASE("convergence_sweep") {
  const auto m = model::paper_params(0.03);
  const std::vector<std::uint64_t> one_seed{3};
  const std::vector<std::uint64_t> one_n{10'000};
  const auto single = convergence_sweep(m, one_seed, one_n);
  REQUIRE(single.size() == 1);
  CHECK(single[0].seed == 3);
  CHECK(single[0].n_trials == 10'000);

  const std::vector<std::uint64_t> none;
  CHECK_THROWS_AS(convergence_sweep(m, none, one_n), InvalidArgument);
  CHECK_THROWS_AS(convergence_sweep(m, one_seed, none), InvalidArgument);

  SUBCASE("errors shrink as 1/sqrt(n)") {
    const std::vector<std::uint64_t> ns{10'000, 100'000, 1'000'000};
    const auto rows = convergence_sweep(m, one_seed, ns);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double ratio = *rows[i - 1].estimates.p1.sigma / *rows[i].estimates.p1.sigma;
      CHECK(ratio > std::sqrt(10.0) / 1.5);
      CHECK(ratio < std::sqrt(10.0) * 1.5);
    }
  }
  SUBCASE("doubling n: empirical spread over seeds") {
    std::vector<std::uint64_t> seeds(100);
    std::iota(seeds.begin(), seeds.end(), 1000);
    const std::vector<std::uint64_t> ns{200'000, 400'000};
    const auto rows = convergence_sweep(m, seeds, ns);
    REQUIRE(rows.size() == 200);
    std::vector<double> at_n, at_2n;
    for (const auto& r : rows) (r.n_trials == ns[0] ? at_n : at_2n).push_back(r.estimates.p1.value);
    const double ratio = stddev(at_2n) / stddev(at_n);
    CHECK(ratio >= 0.8 / std::sqrt(2.0));
    CHECK(ratio <= 1.25 / std::sqrt(2.0));
  }
}
