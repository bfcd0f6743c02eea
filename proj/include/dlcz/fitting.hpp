#pragma once

// Weighted least-squares recovery of (kappa1, kappa2, alpha2) from measured
// g12(p1) and qc(p1) curves, with alpha1, b1, b2 and eta2 held fixed.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlcz/diagnostics.hpp"
#include "dlcz/model.hpp"

namespace dlcz::fit {

struct Observation {
  double value;
  double sigma;
};

/// One row of measured curve data. Either observable may be absent.
struct MeasuredPoint {
  double p1;
  std::optional<Observation> g12;
  std::optional<Observation> qc;

  void validate() const;
};

struct FixedParams {
  double alpha1;
  double b1;
  double b2;
  double eta2;

  static FixedParams paper();
};

struct FreeParams {
  double kappa1;
  double kappa2;
  double alpha2;
};

struct FitOptions {
  bool use_g12 = true;
  bool use_qc = true;
  /// Divide residuals by the data sigmas. Without weighting the covariance
  /// is rescaled by chi^2/dof.
  bool weighted = true;
  int starts = 8;
  /// Starts are the initial guess scaled by log-spaced factors in
  /// [10^-span, 10^+span].
  double start_span_decades = 1.0;
  int max_iterations = 200;
  bool parallel = true;
};

using Covariance = std::array<std::array<double, 3>, 3>;

struct FitResult {
  FreeParams params{};
  Covariance covariance{};
  double residual_norm = 0.0;  ///< chi^2 at the optimum
  int dof = 0;
  double chi2_per_dof = 0.0;
  FixedParams fixed{};
  bool used_g12 = true;
  bool used_qc = true;
  bool weighted = true;
  bool converged = false;
  int iterations = 0;
  int start_index = 0;
  std::vector<double> objective_trace;  ///< objective after each accepted step
  std::vector<std::string> warnings;

  [[nodiscard]] double sigma(int i) const;
};

class FitError : public NumericalError {
 public:
  FitError(const std::string& what, FitResult best) : NumericalError(what), best_(std::move(best)) {}
  [[nodiscard]] const FitResult& best_so_far() const noexcept { return best_; }

 private:
  FitResult best_;
};

model::ModelParams assemble(const FixedParams& fixed, const FreeParams& free, double p = 0.0);

/// The p in [0,1) at which singles(templ at p).p1 equals p1_target, found by
/// bisection on the strictly increasing map p -> p1.
double invert_p1(const model::ModelParams& templ, double p1_target);

FitResult fit(std::span<const MeasuredPoint> data, const FixedParams& fixed,
              const FreeParams& initial, const FitOptions& options = {});

struct ResidualRow {
  double p1;
  std::string observable;  ///< "g12" or "qc"
  double data;
  double model;
  double sigma;
  double standardized;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  double chi2 = 0.0;
  int dof = 0;
  double chi2_per_dof = 0.0;
};

ResidualReport residual_report(const FitResult& result, std::span<const MeasuredPoint> data);

}  // namespace dlcz::fit
