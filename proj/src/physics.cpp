#include "dlcz/physics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "dlcz/diagnostics.hpp"

namespace dlcz::physics {

namespace {

double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }

// |<exp(i 2 pi delta t)>|^2 over a Gaussian detuning density of rms sigma_hz.
double dephasing_decay(double sigma_hz, double t) {
  using boost::math::quadrature::gauss_kronrod;
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma_hz);
  auto integrand = [&](double delta) {
    return norm * std::exp(-0.5 * (delta / sigma_hz) * (delta / sigma_hz)) *
           std::cos(2.0 * std::numbers::pi * delta * t);
  };
  // The sine part vanishes by symmetry.
  const double avg = gauss_kronrod<double, 61>::integrate(integrand, -12.0 * sigma_hz, 12.0 * sigma_hz, 15, 1e-14);
  return avg * avg;
}

}  // namespace

void DecayModel::validate() const {
  if (!(q0 >= 0.0 && q0 <= 1.0)) throw InvalidArgument("decay: q0 must lie in [0,1]");
  if (!(tau > 0.0)) throw InvalidArgument("decay: tau must be > 0");
}

double retrieval_vs_time(const DecayModel& model, double t) {
  model.validate();
  if (!(t >= 0.0)) throw InvalidArgument("retrieval_vs_time: t must be >= 0");
  const double x = t / model.tau;
  return model.q0 * std::exp(-x * x);
}

double tau_from_broadening(double fwhm_hz) {
  if (!(fwhm_hz > 0.0)) throw InvalidArgument("tau_from_broadening: fwhm must be > 0");
  return 1.0 / (2.0 * std::numbers::pi * fwhm_to_sigma(fwhm_hz));
}

double tau_from_broadening_numeric(double fwhm_hz) {
  if (!(fwhm_hz > 0.0)) throw InvalidArgument("tau_from_broadening_numeric: fwhm must be > 0");
  const double sigma = fwhm_to_sigma(fwhm_hz);

  // Find a time scale where the decay has reached e^-4, then fit
  // -ln D(t) = (t/tau)^2 by least squares through the origin.
  double t_end = 1e-3 / fwhm_hz;
  while (dephasing_decay(sigma, t_end) > std::exp(-4.0)) t_end *= 2.0;

  constexpr int kSamples = 40;
  double s_t4 = 0.0;
  double s_t2y = 0.0;
  for (int k = 1; k <= kSamples; ++k) {
    const double t = t_end * k / kSamples;
    const double d = dephasing_decay(sigma, t);
    if (d < std::exp(-6.0)) break;
    const double t2 = t * t;
    s_t4 += t2 * t2;
    s_t2y += t2 * -std::log(d);
  }
  return std::sqrt(s_t4 / s_t2y);
}

void SpectroscopyParams::validate() const {
  if (!(od >= 0.0)) throw InvalidArgument("spectrum: od must be >= 0");
  if (!(gamma_hz > 0.0)) throw InvalidArgument("spectrum: gamma must be > 0");
}

double transmission_profile(const SpectroscopyParams& spec, double delta_hz) {
  spec.validate();
  const double x = 2.0 * delta_hz / spec.gamma_hz;
  return std::exp(-spec.od / (1.0 + x * x));
}

double trap_population(double t, double lifetime) {
  if (!(t >= 0.0)) throw InvalidArgument("trap_population: t must be >= 0");
  if (!(lifetime > 0.0)) throw InvalidArgument("trap_population: lifetime must be > 0");
  return std::exp(-t / lifetime);
}

void CouplingParams::validate() const {
  for (const auto& [tag, od] : od_per_atom) {
    if (!(od > 0.0)) throw InvalidArgument("coupling: od_per_atom[" + tag + "] must be > 0");
  }
  if (!(coupling_ratio > 0.0 && coupling_ratio < 1.0)) {
    throw InvalidArgument("coupling: coupling_ratio must lie in (0,1)");
  }
}

OpticalDepth od_from_atoms(long n_atoms, const CouplingParams& coupling, const std::string& transition) {
  coupling.validate();
  if (n_atoms < 0) throw InvalidArgument("od_from_atoms: n_atoms must be >= 0");
  const auto it = coupling.od_per_atom.find(transition);
  if (it == coupling.od_per_atom.end()) {
    throw InvalidArgument("od_from_atoms: unknown transition tag '" + transition + "'");
  }
  const double od = static_cast<double>(n_atoms) * it->second;
  return {od, od > 40.0};
}

void FilterChain::validate() const {
  for (const auto& s : stages) {
    if (!(s.isolation_db >= 0.0)) throw InvalidArgument("filter stage '" + s.name + "': isolation must be >= 0 dB");
    if (!(s.transmission > 0.0 && s.transmission <= 1.0)) {
      throw InvalidArgument("filter stage '" + s.name + "': transmission must lie in (0,1]");
    }
  }
}

FilterChain FilterChain::paper() {
  return {{{"vbg-pair", 120.0, 0.6}, {"pbs+lens-cavity", 40.0, 0.75}, {"fibre-coupling", 0.0, 0.4 / (0.6 * 0.75)}}};
}

double photon_energy(double wavelength_m) {
  if (!(wavelength_m > 0.0)) throw InvalidArgument("photon_energy: wavelength must be > 0");
  return kPlanck * kSpeedOfLight / wavelength_m;
}

ChainBudget chain_budget(const FilterChain& chain, double input_power_w, double wavelength_m) {
  chain.validate();
  if (!(input_power_w >= 0.0)) throw InvalidArgument("chain_budget: input power must be >= 0");
  double db = 0.0;
  double t = 1.0;
  for (const auto& s : chain.stages) {
    db += s.isolation_db;
    t *= s.transmission;
  }
  const double leaked_w = input_power_w * std::pow(10.0, -db / 10.0);
  return {db, t, leaked_w / photon_energy(wavelength_m)};
}

void SequenceConfig::validate() const {
  double total = 0.0;
  for (const auto& ph : phases) {
    if (!(ph.duration >= 0.0)) throw InvalidArgument("sequence phase '" + ph.name + "': duration must be >= 0");
    total += ph.duration;
  }
  if (!(cycle_rate > 0.0)) throw InvalidArgument("sequence.cycle_rate must be > 0");
  if (!(trial_period > 0.0)) throw InvalidArgument("sequence.trial_period must be > 0");
  if (trials_per_cycle < 0) throw InvalidArgument("sequence.trials_per_cycle must be >= 0");
  // Relative slack for durations given as decimal fractions of a second.
  constexpr double slack = 1e-12;
  if (total > (1.0 + slack) / cycle_rate) {
    throw InvalidArgument("sequence: phases last " + std::to_string(total) + " s, longer than the cycle period " +
                          std::to_string(1.0 / cycle_rate) + " s");
  }
  if (static_cast<double>(trials_per_cycle) * trial_period > protocol_duration() * (1.0 + slack)) {
    throw InvalidArgument("sequence: trials_per_cycle * trial_period exceeds the protocol phase");
  }
}

double SequenceConfig::protocol_duration() const {
  for (const auto& ph : phases) {
    if (ph.name == protocol_phase) return ph.duration;
  }
  throw InvalidArgument("sequence: no phase named '" + protocol_phase + "'");
}

Rates rates(const SequenceConfig& seq, double p1, double pc) {
  seq.validate();
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw InvalidArgument("rates: p1 must lie in [0,1]");
  if (!(pc >= 0.0 && pc <= 1.0)) throw InvalidArgument("rates: pc must lie in [0,1]");
  const double averaged = p1 * static_cast<double>(seq.trials_per_cycle) * seq.cycle_rate;
  return {p1 / seq.trial_period, averaged, averaged * pc};
}

double wavepacket(double t, double width) {
  if (!(width > 0.0)) throw InvalidArgument("wavepacket: width must be > 0");
  const double x = t / width;
  return std::exp(-x * x);
}

}  // namespace dlcz::physics
