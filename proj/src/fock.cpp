#include "dlcz/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dlcz/diagnostics.hpp"

namespace dlcz::fock {

namespace {

constexpr double kNormalizationSlack = 1e-12;

// Neumaier-compensated sum; the tail masses are derived as 1 - sum and must
// stay accurate to well below the normalization slack.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double remaining_mass(std::span<const double> prob) {
  CompensatedSum s;
  for (double x : prob) s.add(x);
  return std::max(0.0, 1.0 - s.value());
}

void check_normalized(std::span<const double> prob, double tail, const char* what) {
  CompensatedSum s;
  for (double x : prob) {
    if (!(x >= 0.0)) {
      throw InvalidArgument(std::string(what) + ": negative or NaN probability");
    }
    s.add(x);
  }
  if (!(tail >= 0.0)) throw InvalidArgument(std::string(what) + ": negative tail mass");
  if (std::abs(s.value() + tail - 1.0) > kNormalizationSlack) {
    throw InvalidArgument(std::string(what) + ": probabilities and tail do not sum to 1");
  }
}

std::size_t triangle(int s) { return static_cast<std::size_t>(s) * (s + 1) / 2; }

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int m = 0; m < k; ++m) r *= static_cast<double>(n - m);
  return r;
}

void check_same_kind(std::initializer_list<const DetectorModel*> detectors) {
  const DetectorKind kind = (*detectors.begin())->kind;
  for (const auto* d : detectors) {
    d->validate();
    if (d->kind != kind) {
      throw InvalidArgument("click_probabilities: all detectors must share one kind");
    }
  }
}

void warn_if_saturating(const DetectorModel& d, double mean_photons, const char* arm) {
  if (d.kind == DetectorKind::linearized && d.efficiency * mean_photons > 0.1) {
    warn(std::string("linearized detector on ") + arm + " outside its validity range: efficiency*<n> = " +
         std::to_string(d.efficiency * mean_photons) + " > 0.1");
  }
}

double checked_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument(std::string("click probability ") + name + " = " + std::to_string(p) +
                          " leaves [0,1]; linearized detector model is not valid here");
  }
  return p;
}

std::vector<double> click_table(const DetectorModel& d, int n_max) {
  std::vector<double> c(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) c[static_cast<std::size_t>(n)] = d.click_given(n);
  return c;
}

}  // namespace

// --- Marginal -------------------------------------------------------------

Marginal::Marginal(std::vector<double> prob, double tail_mass)
    : prob_(std::move(prob)), tail_mass_(tail_mass) {
  if (prob_.empty()) throw InvalidArgument("Marginal: empty probability table");
  check_normalized(prob_, tail_mass_, "Marginal");
}

double Marginal::mean() const noexcept {
  double m = 0.0;
  for (std::size_t n = 0; n < prob_.size(); ++n) m += static_cast<double>(n) * prob_[n];
  return m;
}

// --- JointPhotonDistribution ----------------------------------------------

JointPhotonDistribution::JointPhotonDistribution(int n_max, std::vector<double> prob,
                                                 double tail_mass)
    : n_max_(n_max), prob_(std::move(prob)), tail_mass_(tail_mass) {
  if (n_max_ < 0) throw InvalidArgument("JointPhotonDistribution: n_max must be >= 0");
  const auto side = static_cast<std::size_t>(n_max_) + 1;
  if (prob_.size() != side * side) {
    throw InvalidArgument("JointPhotonDistribution: table size does not match n_max");
  }
  check_normalized(prob_, tail_mass_, "JointPhotonDistribution");
}

JointPhotonDistribution JointPhotonDistribution::vacuum(int n_max) {
  if (n_max < 0) throw InvalidArgument("vacuum: n_max must be >= 0");
  const auto side = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> prob(side * side, 0.0);
  prob[0] = 1.0;
  return {n_max, std::move(prob), 0.0};
}

double JointPhotonDistribution::operator()(int n1, int n2) const noexcept {
  if (n1 < 0 || n2 < 0 || n1 > n_max_ || n2 > n_max_) return 0.0;
  return prob_[static_cast<std::size_t>(n1) * (n_max_ + 1) + n2];
}

Marginal JointPhotonDistribution::marginal(Mode mode) const {
  std::vector<double> m(static_cast<std::size_t>(n_max_) + 1, 0.0);
  for (int n1 = 0; n1 <= n_max_; ++n1) {
    for (int n2 = 0; n2 <= n_max_; ++n2) {
      m[static_cast<std::size_t>(mode == Mode::field1 ? n1 : n2)] += (*this)(n1, n2);
    }
  }
  // Re-derive the tail so the marginal is normalized against its own rounding.
  const double tail = remaining_mass(m);
  return {std::move(m), tail};
}

double JointPhotonDistribution::mean(Mode mode) const {
  CompensatedSum s;
  for (int n1 = 0; n1 <= n_max_; ++n1) {
    for (int n2 = 0; n2 <= n_max_; ++n2) s.add((mode == Mode::field1 ? n1 : n2) * (*this)(n1, n2));
  }
  return s.value();
}

// --- TripleDistribution ---------------------------------------------------

TripleDistribution::TripleDistribution(int n_max, std::vector<double> prob, double tail_mass)
    : n_max_(n_max), plane_(triangle(n_max + 1)), prob_(std::move(prob)), tail_mass_(tail_mass) {
  if (n_max_ < 0) throw InvalidArgument("TripleDistribution: n_max must be >= 0");
  if (prob_.size() != plane_ * (static_cast<std::size_t>(n_max_) + 1)) {
    throw InvalidArgument("TripleDistribution: table size does not match n_max");
  }
  check_normalized(prob_, tail_mass_, "TripleDistribution");
}

std::size_t TripleDistribution::index(int n1, int n2a, int n2b) const noexcept {
  return static_cast<std::size_t>(n1) * plane_ + triangle(n2a + n2b) + static_cast<std::size_t>(n2a);
}

double TripleDistribution::operator()(int n1, int n2a, int n2b) const noexcept {
  if (n1 < 0 || n2a < 0 || n2b < 0 || n1 > n_max_ || n2a + n2b > n_max_) return 0.0;
  return prob_[index(n1, n2a, n2b)];
}

Marginal TripleDistribution::field2_marginal() const {
  std::vector<double> m(static_cast<std::size_t>(n_max_) + 1, 0.0);
  for_each([&](int, int a, int b, double p) { m[static_cast<std::size_t>(a + b)] += p; });
  const double tail = remaining_mass(m);
  return {std::move(m), tail};
}

Marginal TripleDistribution::field1_marginal() const {
  std::vector<double> m(static_cast<std::size_t>(n_max_) + 1, 0.0);
  for_each([&](int n1, int, int, double p) { m[static_cast<std::size_t>(n1)] += p; });
  const double tail = remaining_mass(m);
  return {std::move(m), tail};
}

double TripleDistribution::mean_arm_a() const {
  double s = 0.0;
  for_each([&](int, int a, int, double p) { s += a * p; });
  return s;
}

double TripleDistribution::mean_arm_b() const {
  double s = 0.0;
  for_each([&](int, int, int b, double p) { s += b * p; });
  return s;
}

// --- DetectorModel --------------------------------------------------------

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw InvalidArgument("DetectorModel: efficiency must lie in [0,1]");
  }
  if (!(dark_prob >= 0.0 && dark_prob <= 1.0)) {
    throw InvalidArgument("DetectorModel: dark_prob must lie in [0,1]");
  }
}

double DetectorModel::click_given(int n) const noexcept {
  if (kind == DetectorKind::linearized) return efficiency * n + dark_prob;
  return 1.0 - std::pow(1.0 - efficiency, n) * (1.0 - dark_prob);
}

// --- constructors -----------------------------------------------------------

JointPhotonDistribution tmss_distribution(double p, int n_max) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidArgument("tmss_distribution: p must lie in [0,1), got " + std::to_string(p));
  }
  if (n_max < 0) throw InvalidArgument("tmss_distribution: n_max must be >= 0");
  const auto side = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> prob(side * side, 0.0);
  double weight = 1.0 - p;
  for (std::size_t n = 0; n < side; ++n) {
    prob[n * side + n] = weight;
    weight *= p;
  }
  return {n_max, std::move(prob), std::pow(p, n_max + 1)};
}

JointPhotonDistribution tmss_distribution(double p, const Truncation& policy) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidArgument("tmss_distribution: p must lie in [0,1), got " + std::to_string(p));
  }
  int n_max = policy.n_max;
  while (n_max <= policy.n_cap && std::pow(p, n_max + 1) > policy.tail_tolerance) ++n_max;
  if (n_max > policy.n_cap) {
    throw NumericalError("tmss_distribution: p = " + std::to_string(p) + " needs n_max = " +
                         std::to_string(n_max) + " beyond the cap " + std::to_string(policy.n_cap));
  }
  return tmss_distribution(p, n_max);
}

Marginal poisson_marginal(double mean, int n_max) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw InvalidArgument("poisson_marginal: mean must be finite and >= 0");
  }
  if (n_max < 0) throw InvalidArgument("poisson_marginal: n_max must be >= 0");
  std::vector<double> prob(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (mean == 0.0) {
    prob[0] = 1.0;
    return {std::move(prob), 0.0};
  }
  const double log_mean = std::log(mean);
  auto term = [&](int n) { return std::exp(-mean + n * log_mean - std::lgamma(n + 1.0)); };
  for (int n = 0; n <= n_max; ++n) prob[static_cast<std::size_t>(n)] = term(n);

  // Sum the tail directly rather than as 1 - sum, so tiny tails stay exact.
  CompensatedSum tail;
  for (int n = n_max + 1;; ++n) {
    const double t = term(n);
    tail.add(t);
    if (n > mean && t <= 1e-18 * tail.value()) break;
    if (t == 0.0 && n > mean) break;
  }
  double tail_mass = tail.value();
  // Guard the invariant against rounding when the head is itself rounded.
  CompensatedSum head;
  for (double x : prob) head.add(x);
  if (std::abs(head.value() + tail_mass - 1.0) > 0.5 * kNormalizationSlack) {
    tail_mass = std::max(0.0, 1.0 - head.value());
  }
  return {std::move(prob), tail_mass};
}

Marginal poisson_marginal(double mean, const Truncation& policy) {
  int n_max = policy.n_max;
  for (;;) {
    Marginal m = poisson_marginal(mean, n_max);
    if (m.tail_mass() <= policy.tail_tolerance) return m;
    if (n_max >= policy.n_cap) {
      throw NumericalError("poisson_marginal: mean = " + std::to_string(mean) +
                           " cannot meet the tail tolerance below n_max cap " +
                           std::to_string(policy.n_cap));
    }
    n_max = std::min(policy.n_cap, n_max + 10);
  }
}

JointPhotonDistribution add_background(const JointPhotonDistribution& dist, Mode mode,
                                       const Marginal& background) {
  const int n_max = dist.n_max();
  const auto side = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> out(side * side, 0.0);
  const int bg_max = std::min(n_max, background.n_max());
  for (int n1 = 0; n1 <= n_max; ++n1) {
    for (int n2 = 0; n2 <= n_max; ++n2) {
      const double p = dist(n1, n2);
      if (p == 0.0) continue;
      const int base = mode == Mode::field1 ? n1 : n2;
      for (int k = 0; k <= bg_max && base + k <= n_max; ++k) {
        const int m1 = mode == Mode::field1 ? n1 + k : n1;
        const int m2 = mode == Mode::field2 ? n2 + k : n2;
        out[static_cast<std::size_t>(m1) * side + m2] += p * background[k];
      }
    }
  }
  const double tail = remaining_mass(out);
  return {n_max, std::move(out), tail};
}

double factorial_moment(const JointPhotonDistribution& dist, int i, int j) {
  if (i < 0 || j < 0) throw InvalidArgument("factorial_moment: orders must be >= 0");
  const int n_max = dist.n_max();
  if (dist.tail_mass() * std::pow(static_cast<double>(std::max(n_max, 1)), i + j) > 1e-8) {
    warn("factorial_moment(" + std::to_string(i) + "," + std::to_string(j) +
         "): truncated tail may bias the moment (tail_mass = " + std::to_string(dist.tail_mass()) +
         ", n_max = " + std::to_string(n_max) + ")");
  }
  CompensatedSum s;
  for (int n1 = i; n1 <= n_max; ++n1) {
    const double f1 = falling_factorial(n1, i);
    for (int n2 = j; n2 <= n_max; ++n2) {
      const double p = dist(n1, n2);
      if (p != 0.0) s.add(p * f1 * falling_factorial(n2, j));
    }
  }
  return s.value();
}

TripleDistribution split_mode2(const JointPhotonDistribution& dist) {
  const int n_max = dist.n_max();
  // binom[n][k] = C(n,k) / 2^n, built by Pascal's rule to avoid overflow.
  std::vector<std::vector<double>> binom(static_cast<std::size_t>(n_max) + 1);
  binom[0] = {1.0};
  for (int n = 1; n <= n_max; ++n) {
    const auto& prev = binom[static_cast<std::size_t>(n) - 1];
    auto& row = binom[static_cast<std::size_t>(n)];
    row.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
      const double left = k > 0 ? prev[static_cast<std::size_t>(k) - 1] : 0.0;
      const double right = k < n ? prev[static_cast<std::size_t>(k)] : 0.0;
      row[static_cast<std::size_t>(k)] = 0.5 * (left + right);
    }
  }
  const std::size_t plane = triangle(n_max + 1);
  std::vector<double> prob(plane * (static_cast<std::size_t>(n_max) + 1), 0.0);
  for (int n1 = 0; n1 <= n_max; ++n1) {
    for (int n2 = 0; n2 <= n_max; ++n2) {
      const double p = dist(n1, n2);
      if (p == 0.0) continue;
      const auto& row = binom[static_cast<std::size_t>(n2)];
      const std::size_t base = static_cast<std::size_t>(n1) * plane + triangle(n2);
      for (int a = 0; a <= n2; ++a) prob[base + static_cast<std::size_t>(a)] = p * row[static_cast<std::size_t>(a)];
    }
  }
  return {n_max, std::move(prob), dist.tail_mass()};
}

ClickProbabilities click_probabilities(const JointPhotonDistribution& dist,
                                       const DetectorModel& d1, const DetectorModel& d2) {
  check_same_kind({&d1, &d2});
  warn_if_saturating(d1, dist.mean(Mode::field1), "field 1");
  warn_if_saturating(d2, dist.mean(Mode::field2), "field 2");

  const int n_max = dist.n_max();
  const auto c1 = click_table(d1, n_max);
  const auto c2 = click_table(d2, n_max);
  CompensatedSum p1, p2, p12;
  for (int n1 = 0; n1 <= n_max; ++n1) {
    for (int n2 = 0; n2 <= n_max; ++n2) {
      const double p = dist(n1, n2);
      if (p == 0.0) continue;
      const double a = c1[static_cast<std::size_t>(n1)];
      const double b = c2[static_cast<std::size_t>(n2)];
      p1.add(p * a);
      p2.add(p * b);
      p12.add(p * a * b);
    }
  }
  return {checked_probability(p1.value(), "p1"), checked_probability(p2.value(), "p2"),
          checked_probability(p12.value(), "p12")};
}

HbtClickProbabilities click_probabilities(const TripleDistribution& dist,
                                          const DetectorModel& d1, const DetectorModel& d2a,
                                          const DetectorModel& d2b) {
  check_same_kind({&d1, &d2a, &d2b});
  warn_if_saturating(d1, dist.field1_marginal().mean(), "field 1");
  warn_if_saturating(d2a, dist.mean_arm_a(), "field 2 arm a");
  warn_if_saturating(d2b, dist.mean_arm_b(), "field 2 arm b");

  const bool linear = d1.kind == DetectorKind::linearized;
  const int n_max = dist.n_max();
  const auto c1 = click_table(d1, n_max);
  const auto ca = click_table(d2a, n_max);
  const auto cb = click_table(d2b, n_max);
  CompensatedSum p1, p2a, p2b, p2, p12, p1_2a, p1_2b, p2a_2b, p1_2a_2b;
  dist.for_each([&](int n1, int a, int b, double p) {
    if (p == 0.0) return;
    const double x1 = c1[static_cast<std::size_t>(n1)];
    const double xa = ca[static_cast<std::size_t>(a)];
    const double xb = cb[static_cast<std::size_t>(b)];
    // Linearized detectors count expected clicks, so "either arm" is additive.
    const double either = linear ? xa + xb : xa + xb - xa * xb;
    p1.add(p * x1);
    p2a.add(p * xa);
    p2b.add(p * xb);
    p2.add(p * either);
    p12.add(p * x1 * either);
    p1_2a.add(p * x1 * xa);
    p1_2b.add(p * x1 * xb);
    p2a_2b.add(p * xa * xb);
    p1_2a_2b.add(p * x1 * xa * xb);
  });
  HbtClickProbabilities r;
  r.p1 = checked_probability(p1.value(), "p1");
  r.p2a = checked_probability(p2a.value(), "p2a");
  r.p2b = checked_probability(p2b.value(), "p2b");
  r.p2 = checked_probability(p2.value(), "p2");
  r.p12 = checked_probability(p12.value(), "p12");
  r.p1_2a = checked_probability(p1_2a.value(), "p1_2a");
  r.p1_2b = checked_probability(p1_2b.value(), "p1_2b");
  r.p2a_2b = checked_probability(p2a_2b.value(), "p2a_2b");
  r.p1_2a_2b = checked_probability(p1_2a_2b.value(), "p1_2a_2b");
  return r;
}

}  // namespace dlcz::fock
