#pragma once

// Truncated photon-number distributions for the two output fields and the
// exact click-probability oracles built on top of them.
//
// Mode 1 is the heralding field (Field 1), mode 2 the read-out field
// (Field 2). Mode 2 can be split on a balanced beam splitter into arms
// "2a" and "2b" for the Hanbury Brown-Twiss measurement.

#include <cstddef>
#include <span>
#include <vector>

namespace dlcz::fock {

enum class Mode { field1 = 1, field2 = 2 };

/// How far to extend the Fock basis. Constructors taking a policy start at
/// `n_max` and raise it until the truncated mass is at most
/// `tail_tolerance`, giving up (NumericalError) past `n_cap`.
struct Truncation {
  int n_max = 60;
  double tail_tolerance = 1e-10;
  int n_cap = 200;
};

/// Photon-number distribution of a single mode, P(n) for n <= n_max.
class Marginal {
 public:
  Marginal(std::vector<double> prob, double tail_mass);

  [[nodiscard]] int n_max() const noexcept { return static_cast<int>(prob_.size()) - 1; }
  [[nodiscard]] double operator[](int n) const noexcept {
    return n >= 0 && n <= n_max() ? prob_[static_cast<std::size_t>(n)] : 0.0;
  }
  [[nodiscard]] std::span<const double> probabilities() const noexcept { return prob_; }
  [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }
  [[nodiscard]] double mean() const noexcept;

 private:
  std::vector<double> prob_;
  double tail_mass_;
};

/// P(n1, n2) on the square 0..n_max, row-major in n1.
class JointPhotonDistribution {
 public:
  JointPhotonDistribution(int n_max, std::vector<double> prob, double tail_mass);

  static JointPhotonDistribution vacuum(int n_max);

  [[nodiscard]] int n_max() const noexcept { return n_max_; }
  [[nodiscard]] double operator()(int n1, int n2) const noexcept;
  [[nodiscard]] std::span<const double> table() const noexcept { return prob_; }
  [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }

  [[nodiscard]] Marginal marginal(Mode mode) const;
  [[nodiscard]] double mean(Mode mode) const;

 private:
  int n_max_;
  std::vector<double> prob_;
  double tail_mass_;
};

/// P(n1, n2a, n2b) after splitting mode 2 on a 50/50 beam splitter.
/// Only n2a + n2b <= n_max is stored.
class TripleDistribution {
 public:
  TripleDistribution(int n_max, std::vector<double> prob, double tail_mass);

  [[nodiscard]] int n_max() const noexcept { return n_max_; }
  [[nodiscard]] double operator()(int n1, int n2a, int n2b) const noexcept;
  [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }
  [[nodiscard]] std::size_t size() const noexcept { return prob_.size(); }

  /// Mode-2 photon-number marginal, recombining both arms.
  [[nodiscard]] Marginal field2_marginal() const;
  [[nodiscard]] Marginal field1_marginal() const;
  [[nodiscard]] double mean_arm_a() const;
  [[nodiscard]] double mean_arm_b() const;

  /// Calls fn(n1, n2a, n2b, probability) for every stored entry.
  template <class Fn>
  void for_each(Fn&& fn) const {
    std::size_t idx = 0;
    for (int n1 = 0; n1 <= n_max_; ++n1) {
      for (int s = 0; s <= n_max_; ++s) {
        for (int a = 0; a <= s; ++a, ++idx) fn(n1, a, s - a, prob_[idx]);
      }
    }
  }

 private:
  [[nodiscard]] std::size_t index(int n1, int n2a, int n2b) const noexcept;

  int n_max_;
  std::size_t plane_;  // entries per n1 slice
  std::vector<double> prob_;
  double tail_mass_;
};

enum class DetectorKind {
  /// P(click | n) = efficiency * n + dark_prob, no saturation.
  linearized,
  /// P(click | n) = 1 - (1 - efficiency)^n (1 - dark_prob).
  threshold,
};

struct DetectorModel {
  double efficiency = 1.0;
  double dark_prob = 0.0;
  DetectorKind kind = DetectorKind::threshold;

  void validate() const;
  [[nodiscard]] double click_given(int n) const noexcept;
};

struct ClickProbabilities {
  double p1 = 0.0;
  double p2 = 0.0;
  double p12 = 0.0;
};

/// Click probabilities in the HBT layout: one detector on Field 1 and one on
/// each output arm of the Field-2 beam splitter. `p2` and `p12` refer to
/// "either Field-2 arm".
struct HbtClickProbabilities {
  double p1 = 0.0;
  double p2a = 0.0;
  double p2b = 0.0;
  double p2 = 0.0;
  double p12 = 0.0;
  double p1_2a = 0.0;
  double p1_2b = 0.0;
  double p2a_2b = 0.0;
  double p1_2a_2b = 0.0;
};

/// Exact geometric diagonal P(n, n) = (1-p) p^n truncated at n_max.
JointPhotonDistribution tmss_distribution(double p, int n_max);
JointPhotonDistribution tmss_distribution(double p, const Truncation& policy = {});

Marginal poisson_marginal(double mean, int n_max);
Marginal poisson_marginal(double mean, const Truncation& policy = {});

/// Adds an independent photon number drawn from `background` to `mode`
/// (discrete convolution). Mass pushed past n_max moves to the tail.
JointPhotonDistribution add_background(const JointPhotonDistribution& dist, Mode mode,
                                       const Marginal& background);

/// sum P(n1,n2) n1^(i) n2^(j) with x^(k) the falling factorial. Warns when the
/// truncated tail could bias the result by more than 1e-8.
double factorial_moment(const JointPhotonDistribution& dist, int i, int j);

TripleDistribution split_mode2(const JointPhotonDistribution& dist);

ClickProbabilities click_probabilities(const JointPhotonDistribution& dist,
                                       const DetectorModel& d1, const DetectorModel& d2);

HbtClickProbabilities click_probabilities(const TripleDistribution& dist,
                                          const DetectorModel& d1, const DetectorModel& d2a,
                                          const DetectorModel& d2b);

}  // namespace dlcz::fock
