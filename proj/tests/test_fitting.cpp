#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "dlcz/diagnostics.hpp"
#include "dlcz/fitting.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace dlcz;
using namespace dlcz::fit;

namespace {

const FreeParams kTruth{0.034, 1.91, 0.035};
const FreeParams kGuess{0.05, 1.0, 0.05};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("invert_p1") {
  const auto m = model::paper_params();
  CHECK(invert_p1(m, m.b1) == 0.0);
  CHECK(invert_p1(m, 5.163e-3) == doctest::Approx(0.030).epsilon(1e-3));
  CHECK_THROWS_AS(invert_p1(m, 0.5 * m.b1), InvalidArgument);
  CHECK_THROWS_AS(invert_p1(m, 1e20), InvalidArgument);

  double last = -1.0;
  for (double p1 : model::log_grid(m.b1 * 1.0001, 0.5, 80)) {
    const double p = invert_p1(m, p1);
    CHECK(p > last);
    last = p;
    CHECK(std::abs(model::singles(m.with_p(p)).p1 - p1) <= 1e-12);
    CHECK(p == doctest::Approx(oracle::invert_p1(m.alpha1, m.kappa1, m.b1, p1)).epsilon(1e-9));
  }
}

TEST_CASE("noiseless round trip") {
  const auto data = synthetic::noiseless(synthetic::truth(), synthetic::p_grid());
  const auto r = fit::fit(data, FixedParams::paper(), kGuess);
  CHECK(r.converged);
  CHECK(rel(r.params.kappa1, kTruth.kappa1) < 1e-6);
  CHECK(rel(r.params.kappa2, kTruth.kappa2) < 1e-6);
  CHECK(rel(r.params.alpha2, kTruth.alpha2) < 1e-6);
  CHECK(r.residual_norm < 1e-12);
  CHECK(r.dof == 2 * static_cast<int>(data.size()) - 3);
  CHECK(r.fixed.alpha1 == 0.16);
  CHECK(r.fixed.eta2 == 0.14);

  SUBCASE("objective decreases along accepted steps") {
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
      CHECK(r.objective_trace[i] < r.objective_trace[i - 1]);
    }
  }
  SUBCASE("covariance is symmetric positive semidefinite") {
    Eigen::Matrix3d c;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c(i, j) = r.covariance[i][j];
    CHECK((c - c.transpose()).norm() <= 1e-15 * c.norm());
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(c).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-12 * ev.maxCoeff());
  }
  SUBCASE("row order does not matter") {
    auto shuffled = data;
    std::mt19937_64 rng(9);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto s = fit::fit(shuffled, FixedParams::paper(), kGuess);
    CHECK(s.params.kappa1 == r.params.kappa1);
    CHECK(s.params.kappa2 == r.params.kappa2);
    CHECK(s.params.alpha2 == r.params.alpha2);
  }
  SUBCASE("serial and parallel starts agree") {
    FitOptions o;
    o.parallel = false;
    const auto s = fit::fit(data, FixedParams::paper(), kGuess, o);
    CHECK(s.params.kappa1 == r.params.kappa1);
    CHECK(s.start_index == r.start_index);
  }
  SUBCASE("unweighted fit") {
    FitOptions o;
    o.weighted = false;
    const auto s = fit::fit(data, FixedParams::paper(), kGuess, o);
    CHECK(rel(s.params.kappa2, kTruth.kappa2) < 1e-6);
    CHECK_FALSE(s.weighted);
  }
}

TEST_CASE("coherent background stays far below the pair contribution") {
  // <n1> from pairs, p/(1-p), against kappa1 p: the ratio 1/((1-p) kappa1)
  // never drops below 1/kappa1 and exceeds 30 once p > 1 - 1/(30 kappa1).
  for (double p : synthetic::p_grid()) {
    const auto m = model::paper_params(p);
    const double ratio = m.tmss_mean() / m.coherent_mean1();
    CHECK(ratio >= 1.0 / m.kappa1);
    CHECK(ratio > 29.0);
    if (p > 1.0 - 1.0 / (30.0 * m.kappa1)) CHECK(ratio > 30.0);
  }
}

TEST_CASE("degraded and invalid inputs") {
  const auto data = synthetic::noiseless(synthetic::truth(), synthetic::p_grid());
  SUBCASE("g12 alone") {
    auto g_only = data;
    for (auto& pt : g_only) pt.qc.reset();
    WarningCapture capture;
    const auto r = fit::fit(g_only, FixedParams::paper(), kGuess);
    CHECK_FALSE(r.used_qc);
    CHECK(r.used_g12);
    CHECK(capture.contains("g12 only"));
    CHECK(std::any_of(r.warnings.begin(), r.warnings.end(),
                      [](const std::string& w) { return w.find("g12 only") != std::string::npos; }));
  }
  SUBCASE("too few rows") {
    const std::vector<MeasuredPoint> two(data.begin(), data.begin() + 2);
    CHECK_THROWS_WITH_AS(fit::fit(two, FixedParams::paper(), kGuess), doctest::Contains("at least 3"), InvalidArgument);
  }
  SUBCASE("less than a decade") {
    std::vector<MeasuredPoint> narrow;
    for (double p : {0.02, 0.03, 0.04, 0.05}) {
      const auto f = model::figures_of_merit(model::paper_params(p));
      narrow.push_back({f.p1, Observation{f.g12, 1.0}, Observation{f.qc, 0.01}});
    }
    CHECK_THROWS_WITH_AS(fit::fit(narrow, FixedParams::paper(), kGuess), doctest::Contains("decade"), InvalidArgument);
  }
  SUBCASE("bad sigma") {
    auto bad = data;
    bad[3].g12->sigma = 0.0;
    CHECK_THROWS_AS(fit::fit(bad, FixedParams::paper(), kGuess), InvalidArgument);
  }
  SUBCASE("iteration budget exhausted") {
    FitOptions o;
    o.max_iterations = 1;
    try {
      (void)fit::fit(data, FixedParams::paper(), kGuess, o);
      FAIL("expected FitError");
    } catch (const FitError& e) {
      CHECK_FALSE(e.best_so_far().converged);
      CHECK(e.best_so_far().iterations == 1);
      CHECK(std::isfinite(e.best_so_far().residual_norm));
    }
  }
  SUBCASE("plateau-only data: large kappa uncertainty, no error") {
    std::vector<MeasuredPoint> plateau;
    for (double p : model::log_grid(2e-3, 3e-2, 8)) {
      const auto f = model::figures_of_merit(model::paper_params(p));
      plateau.push_back({f.p1, Observation{f.g12, 0.1 * f.g12}, Observation{f.qc, 0.1 * f.qc}});
    }
    const auto r = fit::fit(plateau, FixedParams::paper(), kGuess);
    CHECK(r.sigma(0) > kTruth.kappa1);
  }
}

TEST_CASE("clamped excursions are reported") {
  std::mt19937_64 rng(2024);
  bool seen = false;
  for (int rep = 0; rep < 20 && !seen; ++rep) {
    const auto d = synthetic::poisson_replica(synthetic::truth(), synthetic::p_grid(), 300.0, rng);
    WarningCapture capture;
    const auto r = fit::fit(d, FixedParams::paper(), kGuess);
    if (capture.contains("clamped")) {
      seen = true;
      CHECK(r.params.kappa1 >= 0.0);
    }
  }
  CHECK(seen);
}

TEST_CASE("residual_report") {
  const auto data = synthetic::noiseless(synthetic::truth(), synthetic::p_grid());
  FitResult truth;
  truth.params = kTruth;
  truth.fixed = FixedParams::paper();
  SUBCASE("perfect data") {
    const auto rep = residual_report(truth, data);
    CHECK(rep.rows.size() == 2 * data.size());
    for (const auto& row : rep.rows) CHECK(std::abs(row.standardized) < 1e-9);
    CHECK(rep.chi2 < 1e-15);
  }
  SUBCASE("one-sigma offsets") {
    auto shifted = data;
    for (auto& pt : shifted) {
      pt.g12->value += pt.g12->sigma;
      pt.qc->value -= pt.qc->sigma;
    }
    const auto rep = residual_report(truth, shifted);
    CHECK(rep.chi2 == doctest::Approx(static_cast<double>(rep.rows.size())).epsilon(1e-9));
    CHECK(rep.dof == static_cast<int>(rep.rows.size()) - 3);
    CHECK(rep.chi2_per_dof == doctest::Approx(1.0).epsilon(0.1));
  }
}
