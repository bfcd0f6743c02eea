#pragma once

// Closed-form detection statistics of a two-mode squeezed state accompanied
// by coherent (write-power dependent) and incoherent (power independent)
// background fields, plus the figures of merit derived from them.

#include <span>
#include <string_view>
#include <vector>

#include "dlcz/fock.hpp"

namespace dlcz::model {

struct ModelParams {
  double p = 0.0;       ///< excitation probability per trial, [0,1)
  double kappa1 = 0.0;  ///< |nu_1|^2 = kappa1 * p
  double kappa2 = 0.0;  ///< |nu_2|^2 = kappa2 * p
  double alpha1 = 1.0;  ///< Field-1 photodetection efficiency, (0,1]
  double alpha2 = 1.0;  ///< Field-2 photodetection efficiency, (0,1]
  double eta2 = 1.0;    ///< total Field-2 path transmission, (0,1]
  double b1 = 0.0;      ///< Field-1 detection probability without atoms
  double b2 = 0.0;      ///< Field-2 detection probability without atoms

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;

  [[nodiscard]] ModelParams with_p(double new_p) const {
    ModelParams out = *this;
    out.p = new_p;
    return out;
  }

  [[nodiscard]] double tmss_mean() const { return p / (1.0 - p); }
  [[nodiscard]] double coherent_mean1() const { return kappa1 * p; }
  [[nodiscard]] double coherent_mean2() const { return kappa2 * p; }
  [[nodiscard]] double incoherent_mean1() const { return b1 / alpha1; }
  [[nodiscard]] double incoherent_mean2() const { return b2 / alpha2; }
  [[nodiscard]] double mean_photons1() const { return tmss_mean() + coherent_mean1() + incoherent_mean1(); }
  [[nodiscard]] double mean_photons2() const { return tmss_mean() + coherent_mean2() + incoherent_mean2(); }
};

/// Published operating parameters: alpha1=0.16, alpha2=0.035, eta2=0.14,
/// kappa1=0.034, kappa2=1.91, b1=5.1e-5, b2=1.6e-4.
ModelParams paper_params(double p = 0.03);

/// The same parameters with every background switched off.
ModelParams ideal_params(double p, double alpha1 = 1.0, double alpha2 = 1.0, double eta2 = 1.0);

struct Singles {
  double p1;
  double p2;
};

struct Retrieval {
  double pc;  ///< conditional Field-2 detection probability p12 / p1
  double qc;  ///< pc / eta2
};

struct FigureOfMeritPoint {
  double p;
  double p1;
  double p2;
  double p12;
  double g12;
  double qc;
  double pc;
};

Singles singles(const ModelParams& params);
double joint(const ModelParams& params);
double cross_correlation(const ModelParams& params);
Retrieval retrieval(const ModelParams& params);
FigureOfMeritPoint figures_of_merit(const ModelParams& params);

/// qc in the single-excitation regime, alpha2 / eta2.
double qc_plateau(const ModelParams& params);

/// w = 4 / g12, the heralded-antibunching line of an ideal two-mode squeezed state.
double antibunching_ideal(double g12);

/// w = p1 p_{1,2a,2b} / (p_{1,2a} p_{1,2b}).
double antibunching_parameter(const fock::HbtClickProbabilities& probs);

/// The model's output state as an explicit photon-number table: the TMSS
/// diagonal with the four background fields convolved in as independent
/// Poisson photon numbers.
fock::JointPhotonDistribution output_state(const ModelParams& params,
                                           const fock::Truncation& policy = {});

struct HbtDetectors {
  fock::DetectorModel field1;
  fock::DetectorModel arm_a;
  fock::DetectorModel arm_b;
};

/// Detectors of the HBT layout. Each Field-2 arm receives half of the field
/// from the balanced splitter and detects it with efficiency alpha2, so both
/// arms together reproduce p2 = alpha2 <n2>. Dark counts default to zero
/// because b1, b2 already enter the state as incoherent backgrounds.
HbtDetectors hbt_detectors(const ModelParams& params, fock::DetectorKind kind,
                           double dark1 = 0.0, double dark2 = 0.0);

/// Detection probabilities of the HBT layout evaluated on output_state.
fock::HbtClickProbabilities hbt_probabilities(const ModelParams& params, fock::DetectorKind kind,
                                              const fock::Truncation& policy = {});

/// w from exact enumeration over the split output state.
double antibunching_model(const ModelParams& params,
                          fock::DetectorKind kind = fock::DetectorKind::linearized,
                          const fock::Truncation& policy = {});

enum class Classicality { classical, nonclassical, bell_capable, repeater_capable };

/// Thresholds 2, 7 and 25; a value on a boundary belongs to the lower class.
/// The 7 and 25 boundaries are approximate operational benchmarks.
Classicality classify(double g12);
std::string_view to_string(Classicality c);

/// Figures of merit along a p grid, returned in ascending p.
std::vector<FigureOfMeritPoint> sweep(const ModelParams& templ, std::span<const double> p_grid);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace dlcz::model
