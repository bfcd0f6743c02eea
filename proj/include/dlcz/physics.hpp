#pragma once

// Closed-form auxiliary physics of the experiment: memory decay, absorption
// spectroscopy, trap lifetime, atom-number calibration, filter budgets,
// photon wavepacket and duty-cycle accounting. All quantities are SI.

#include <map>
#include <string>
#include <vector>

namespace dlcz::physics {

inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;    // m / s

struct DecayModel {
  double q0 = 0.25;   ///< retrieval efficiency at zero storage time
  double tau = 3e-6;  ///< 1/e time of the Gaussian decay, s

  void validate() const;
};

/// q0 exp[-(t/tau)^2].
double retrieval_vs_time(const DecayModel& model, double t);

/// Memory time set by a Gaussian distribution of detunings of the given
/// FWHM (Hz): the averaged phase factor decays as exp[-(t/tau)^2] with
/// tau = 1/sigma_omega, sigma_omega = 2 pi FWHM / (2 sqrt(2 ln 2)).
double tau_from_broadening(double fwhm_hz);

/// Same quantity obtained numerically: the phase factor exp(i 2 pi delta t)
/// is averaged over the detuning distribution by quadrature, squared, and a
/// Gaussian exp[-(t/tau)^2] is fitted to the resulting decay curve.
double tau_from_broadening_numeric(double fwhm_hz);

struct SpectroscopyParams {
  double od = 1.4;          ///< resonant optical depth
  double gamma_hz = 5.8e6;  ///< natural linewidth Gamma / 2 pi, Hz

  void validate() const;
};

/// exp[-OD / (1 + (2 delta / Gamma)^2)], delta in Hz.
double transmission_profile(const SpectroscopyParams& spec, double delta_hz);

/// exp(-t / lifetime).
double trap_population(double t, double lifetime);

struct CouplingParams {
  std::map<std::string, double> od_per_atom{{"F4-F'4", 0.010}, {"F4-F'5", 0.020}};
  double coupling_ratio = 1e-2;  ///< Gamma_1D / Gamma_0

  void validate() const;
};

struct OpticalDepth {
  double od;
  /// Set above OD 40, where the measured optical depth saturates and the
  /// linear calibration no longer holds.
  bool beyond_linear_range;
};

OpticalDepth od_from_atoms(long n_atoms, const CouplingParams& coupling, const std::string& transition);

struct FilterStage {
  std::string name;
  double isolation_db = 0.0;
  double transmission = 1.0;
};

struct FilterChain {
  std::vector<FilterStage> stages;

  void validate() const;
  /// VBG pair 120 dB, PBS + lens cavity 40 dB (75 % transmission), fibre
  /// coupling; 160 dB and 40 % in total.
  static FilterChain paper();
};

struct ChainBudget {
  double total_isolation_db;
  double total_transmission;
  double leakage_photons_per_s;
};

ChainBudget chain_budget(const FilterChain& chain, double input_power_w, double wavelength_m);

double photon_energy(double wavelength_m);

struct SequencePhase {
  std::string name;
  double duration = 0.0;  ///< s
};

/// Descriptive write-beam and trap settings; nothing is computed from them.
struct SequenceMetadata {
  double write_detuning_hz = -10e6;
  double write_angle_deg = 5.0;
  double write_waist_m = 1e-3;
  std::vector<double> dipole_powers_w{0.5e-3, 0.5e-3, 4.5e-3, 4.5e-3};
  double temperature_k = 20e-6;
};

struct SequenceConfig {
  std::vector<SequencePhase> phases{{"mot", 60e-3}, {"molasses", 4.5e-3}, {"protocol", 1e-3}};
  double trial_period = 1e-6;  ///< s
  long trials_per_cycle = 1000;
  double cycle_rate = 10.0;    ///< Hz
  std::string protocol_phase = "protocol";
  SequenceMetadata metadata{};

  void validate() const;
  [[nodiscard]] double protocol_duration() const;
  [[nodiscard]] double duty_fraction() const { return protocol_duration() * cycle_rate; }
};

struct Rates {
  double herald_rate_in_protocol;  ///< Hz
  double herald_rate_averaged;     ///< Hz, over the full cycle
  double pair_rate_averaged;       ///< Hz, heralds times pc
};

Rates rates(const SequenceConfig& seq, double p1, double pc = 0.0);

/// exp[-(t/width)^2].
double wavepacket(double t, double width);

}  // namespace dlcz::physics
