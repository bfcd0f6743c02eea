#include "dlcz/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dlcz/diagnostics.hpp"

namespace dlcz::model {

namespace {

void require(bool ok, const char* field, const char* rule, double value) {
  if (!ok) {
    throw InvalidArgument(std::string("model.") + field + " " + rule + ", got " + std::to_string(value));
  }
}

}  // namespace

void ModelParams::validate() const {
  require(p >= 0.0 && p < 1.0, "p", "must lie in [0,1)", p);
  require(kappa1 >= 0.0 && std::isfinite(kappa1), "kappa1", "must be finite and >= 0", kappa1);
  require(kappa2 >= 0.0 && std::isfinite(kappa2), "kappa2", "must be finite and >= 0", kappa2);
  require(alpha1 > 0.0 && alpha1 <= 1.0, "alpha1", "must lie in (0,1]", alpha1);
  require(alpha2 > 0.0 && alpha2 <= 1.0, "alpha2", "must lie in (0,1]", alpha2);
  require(eta2 > 0.0 && eta2 <= 1.0, "eta2", "must lie in (0,1]", eta2);
  require(b1 >= 0.0 && b1 <= 1.0, "b1", "must lie in [0,1]", b1);
  require(b2 >= 0.0 && b2 <= 1.0, "b2", "must lie in [0,1]", b2);
}

ModelParams paper_params(double p) {
  ModelParams m;
  m.p = p;
  m.kappa1 = 0.034;
  m.kappa2 = 1.91;
  m.alpha1 = 0.16;
  m.alpha2 = 0.035;
  m.eta2 = 0.14;
  m.b1 = 5.1e-5;
  m.b2 = 1.6e-4;
  return m;
}

ModelParams ideal_params(double p, double alpha1, double alpha2, double eta2) {
  ModelParams m;
  m.p = p;
  m.alpha1 = alpha1;
  m.alpha2 = alpha2;
  m.eta2 = eta2;
  return m;
}

Singles singles(const ModelParams& params) {
  params.validate();
  return {params.alpha1 * (params.tmss_mean() + params.coherent_mean1()) + params.b1,
          params.alpha2 * (params.tmss_mean() + params.coherent_mean2()) + params.b2};
}

double joint(const ModelParams& params) {
  params.validate();
  const double p = params.p;
  const double bg1 = params.coherent_mean1() + params.incoherent_mean1();
  const double bg2 = params.coherent_mean2() + params.incoherent_mean2();
  const double pairs = (p + p * p) / ((1.0 - p) * (1.0 - p));
  return params.alpha1 * params.alpha2 * (pairs + params.tmss_mean() * (bg1 + bg2) + bg1 * bg2);
}

double cross_correlation(const ModelParams& params) {
  const auto [p1, p2] = singles(params);
  if (!(p1 * p2 > 0.0)) {
    throw NumericalError("cross_correlation: p1*p2 = 0 (no excitation and no background)");
  }
  return joint(params) / (p1 * p2);
}

Retrieval retrieval(const ModelParams& params) {
  const double p1 = singles(params).p1;
  if (!(p1 > 0.0)) throw NumericalError("retrieval: p1 = 0, conditional probability undefined");
  const double pc = joint(params) / p1;
  return {pc, pc / params.eta2};
}

FigureOfMeritPoint figures_of_merit(const ModelParams& params) {
  const auto [p1, p2] = singles(params);
  const double p12 = joint(params);
  if (!(p1 * p2 > 0.0)) {
    throw NumericalError("figures_of_merit: p1*p2 = 0 at p = " + std::to_string(params.p));
  }
  const double pc = p12 / p1;
  return {params.p, p1, p2, p12, p12 / (p1 * p2), pc / params.eta2, pc};
}

double qc_plateau(const ModelParams& params) { return params.alpha2 / params.eta2; }

double antibunching_ideal(double g12) {
  if (!(g12 > 0.0)) throw InvalidArgument("antibunching_ideal: g12 must be > 0");
  return 4.0 / g12;
}

double antibunching_parameter(const fock::HbtClickProbabilities& probs) {
  const double denom = probs.p1_2a * probs.p1_2b;
  if (!(denom > 0.0)) {
    throw NumericalError("antibunching: pairwise coincidence probability vanishes");
  }
  return probs.p1 * probs.p1_2a_2b / denom;
}

fock::JointPhotonDistribution output_state(const ModelParams& params, const fock::Truncation& policy) {
  params.validate();
  fock::Truncation attempt = policy;
  for (;;) {
    auto state = fock::tmss_distribution(params.p, attempt);
    const int n_max = state.n_max();
    const double means[4] = {params.coherent_mean1(), params.incoherent_mean1(),
                             params.coherent_mean2(), params.incoherent_mean2()};
    for (int k = 0; k < 4; ++k) {
      if (means[k] == 0.0) continue;
      state = fock::add_background(state, k < 2 ? fock::Mode::field1 : fock::Mode::field2,
                                   fock::poisson_marginal(means[k], n_max));
    }
    if (state.tail_mass() <= policy.tail_tolerance) return state;
    if (n_max >= policy.n_cap) {
      throw NumericalError("output_state: cannot reach tail tolerance within n_max cap " +
                           std::to_string(policy.n_cap));
    }
    attempt.n_max = std::min(policy.n_cap, n_max + 20);
  }
}

HbtDetectors hbt_detectors(const ModelParams& params, fock::DetectorKind kind, double dark1,
                           double dark2) {
  return {{params.alpha1, dark1, kind}, {params.alpha2, dark2, kind}, {params.alpha2, dark2, kind}};
}

fock::HbtClickProbabilities hbt_probabilities(const ModelParams& params, fock::DetectorKind kind,
                                              const fock::Truncation& policy) {
  const auto split = fock::split_mode2(output_state(params, policy));
  const auto det = hbt_detectors(params, kind);
  return fock::click_probabilities(split, det.field1, det.arm_a, det.arm_b);
}

double antibunching_model(const ModelParams& params, fock::DetectorKind kind,
                          const fock::Truncation& policy) {
  return antibunching_parameter(hbt_probabilities(params, kind, policy));
}

Classicality classify(double g12) {
  if (!(g12 >= 0.0)) throw InvalidArgument("classify: g12 must be >= 0");
  if (g12 <= 2.0) return Classicality::classical;
  if (g12 <= 7.0) return Classicality::nonclassical;
  if (g12 <= 25.0) return Classicality::bell_capable;
  return Classicality::repeater_capable;
}

std::string_view to_string(Classicality c) {
  switch (c) {
    case Classicality::classical: return "classical";
    case Classicality::nonclassical: return "nonclassical";
    case Classicality::bell_capable: return "bell_capable";
    case Classicality::repeater_capable: return "repeater_capable";
  }
  return "unknown";
}

std::vector<FigureOfMeritPoint> sweep(const ModelParams& templ, std::span<const double> p_grid) {
  std::vector<double> grid(p_grid.begin(), p_grid.end());
  for (double p : grid) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw InvalidArgument("sweep: grid value p = " + std::to_string(p) + " outside [0,1)");
    }
  }
  std::sort(grid.begin(), grid.end());
  std::vector<FigureOfMeritPoint> out;
  out.reserve(grid.size());
  for (double p : grid) out.push_back(figures_of_merit(templ.with_p(p)));
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi >= lo) || n < 1) throw InvalidArgument("log_grid: need 0 < lo <= hi and n >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace dlcz::model
