#pragma once

// Trial-by-trial sampler of the write / read / HBT detection chain.
//
// Every trial draws the paired photon number of the squeezed state, adds the
// four Poisson background fields, splits Field 2 on a 50/50 beam splitter and
// applies one detector per output. Counts are accumulated per fixed-size
// block of trials; each block owns an independent random stream derived from
// (seed, block index), so the result depends only on (params, n_trials, seed)
// and never on threading or batch_size.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dlcz/model.hpp"

namespace dlcz::mc {

enum class DetectorMode {
  /// Click if any photon survives the efficiency, OR an independent dark count.
  threshold,
  /// Click with probability efficiency * n + dark; fails if that exceeds 1.
  linearized_rejection,
};

inline constexpr std::uint64_t kBlockTrials = 1u << 16;

struct TrialBatchConfig {
  std::uint64_t n_trials = 1'000'000;
  std::uint64_t seed = 0;
  DetectorMode detector = DetectorMode::threshold;
  std::uint64_t batch_size = 8;  ///< blocks per work item
  unsigned threads = 0;          ///< 0: hardware concurrency
  double dark1 = 0.0;            ///< per-trial dark-count probability, Field-1 detector
  double dark2 = 0.0;            ///< per-trial dark-count probability, each Field-2 detector

  void validate() const;
};

struct ClickCounts {
  std::uint64_t n_trials = 0;
  std::uint64_t k1 = 0;
  std::uint64_t k2a = 0;
  std::uint64_t k2b = 0;
  std::uint64_t k2 = 0;  ///< either Field-2 arm
  std::uint64_t k12 = 0;
  std::uint64_t k1_2a = 0;
  std::uint64_t k1_2b = 0;
  std::uint64_t k2a_2b = 0;
  std::uint64_t k_triple = 0;

  /// Checked against overflow.
  ClickCounts& operator+=(const ClickCounts& other);
  bool operator==(const ClickCounts&) const = default;

  /// Throws if the coincidence structure is inconsistent.
  void validate() const;
};

/// Photon numbers of one trial before detection (debug tap).
struct TrialRecord {
  std::uint64_t trial;
  int n_pair;  ///< squeezed-state photon number, common to both modes
  int n1;
  int n2;
  int n2a;
  int n2b;
};

/// Runs the trials. When `tap` is non-null every trial is written to it as a
/// CSV line "trial,n_pair,n1,n2,n2a,n2b" (after a header) and the run is
/// single-threaded; the counts are unchanged.
ClickCounts sample_trials(const model::ModelParams& params, const TrialBatchConfig& config,
                          std::ostream* tap = nullptr);

struct EstimateWithError {
  double value = 0.0;
  /// Absent when the propagated error is undefined (a zero count in a
  /// relative-error term).
  std::optional<double> sigma;
};

/// Point estimates from count ratios, with first-order Poisson error
/// propagation (var k = k). A quantity whose denominator count is zero is
/// left empty rather than reported as 0.
struct Estimates {
  EstimateWithError p1;
  EstimateWithError p2;
  EstimateWithError p12;
  std::optional<EstimateWithError> g12;
  std::optional<EstimateWithError> pc;
  std::optional<EstimateWithError> qc;
  std::optional<EstimateWithError> w;
};

Estimates estimate(const ClickCounts& counts, double eta2);

struct ConvergenceRow {
  std::uint64_t seed;
  std::uint64_t n_trials;
  ClickCounts counts;
  Estimates estimates;
};

/// One row per (seed, n_trials) pair, seeds outermost.
std::vector<ConvergenceRow> convergence_sweep(const model::ModelParams& params,
                                              std::span<const std::uint64_t> seeds,
                                              std::span<const std::uint64_t> n_trials,
                                              const TrialBatchConfig& base = {});

}  // namespace dlcz::mc
