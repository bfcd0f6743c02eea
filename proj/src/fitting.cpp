#include "dlcz/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace dlcz::fit {

namespace {

using Vec3 = Eigen::Vector3d;

constexpr double kAlpha2Floor = 1e-9;

struct Problem {
  std::vector<MeasuredPoint> data;  // sorted by p1
  FixedParams fixed;
  FitOptions options;

  [[nodiscard]] FreeParams unpack(const Vec3& x) const { return {x[0], x[1], x[2]}; }

  [[nodiscard]] Eigen::VectorXd residuals(const Vec3& x) const {
    std::vector<double> r;
    r.reserve(2 * data.size());
    const auto params = assemble(fixed, unpack(x));
    for (const auto& pt : data) {
      const auto fom = model::figures_of_merit(params.with_p(invert_p1(params, pt.p1)));
      if (options.use_g12 && pt.g12) {
        r.push_back((fom.g12 - pt.g12->value) / (options.weighted ? pt.g12->sigma : 1.0));
      }
      if (options.use_qc && pt.qc) {
        r.push_back((fom.qc - pt.qc->value) / (options.weighted ? pt.qc->sigma : 1.0));
      }
    }
    return Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  }

  [[nodiscard]] double objective(const Vec3& x) const {
    try {
      const double f = residuals(x).squaredNorm();
      return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  // Central differences, one-sided where a bound is within the step.
  [[nodiscard]] Eigen::MatrixXd jacobian(const Vec3& x, const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd J(r0.size(), 3);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-6 * std::max(std::abs(x[i]), 1e-4);
      Vec3 lo = x, hi = x;
      lo[i] -= h;
      hi[i] += h;
      const double lower_bound = i == 2 ? kAlpha2Floor : 0.0;
      const bool can_lo = lo[i] >= lower_bound;
      const bool can_hi = i != 2 || hi[i] <= 1.0;
      if (can_lo && can_hi) {
        J.col(i) = (residuals(hi) - residuals(lo)) / (2.0 * h);
      } else if (can_hi) {
        J.col(i) = (residuals(hi) - r0) / h;
      } else {
        J.col(i) = (r0 - residuals(lo)) / h;
      }
    }
    return J;
  }

  [[nodiscard]] Vec3 clamp(Vec3 x, bool& clamped) const {
    clamped = false;
    for (int i = 0; i < 2; ++i) {
      if (x[i] < 0.0) {
        x[i] = 0.0;
        clamped = true;
      }
    }
    if (x[2] < kAlpha2Floor) {
      x[2] = kAlpha2Floor;
      clamped = true;
    } else if (x[2] > 1.0) {
      x[2] = 1.0;
      clamped = true;
    }
    return x;
  }
};

struct LocalResult {
  Vec3 x;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;
  std::vector<std::string> warnings;
};

// Levenberg-Marquardt with Marquardt's diagonal scaling. Only steps that
// lower the objective are accepted. A parameter sitting on a bound whose
// gradient points out of the feasible region is frozen for that iteration.
LocalResult levenberg_marquardt(const Problem& prob, Vec3 x) {
  LocalResult out;
  bool clamped = false;
  bool warned_clamp = false;
  x = prob.clamp(x, clamped);
  double f = prob.objective(x);
  out.x = x;
  out.f = f;
  if (!std::isfinite(f)) {
    out.warnings.push_back("objective not finite at the starting point");
    return out;
  }
  double lambda = 1e-3;
  for (int it = 0; it < prob.options.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd r = prob.residuals(x);
    const Eigen::MatrixXd J = prob.jacobian(x, r);
    Eigen::Matrix3d A = J.transpose() * J;
    Vec3 g = J.transpose() * r;

    for (int i = 0; i < 3; ++i) {
      const double lower = i == 2 ? kAlpha2Floor : 0.0;
      const bool at_lower = x[i] <= lower && g[i] > 0.0;
      const bool at_upper = i == 2 && x[i] >= 1.0 && g[i] < 0.0;
      if (at_lower || at_upper) {
        A.row(i).setZero();
        A.col(i).setZero();
        A(i, i) = 1.0;
        g[i] = 0.0;
      }
    }
    const double diag_floor = 1e-12 * std::max(A.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    bool stalled = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::Matrix3d M = A;
      for (int i = 0; i < 3; ++i) M(i, i) += lambda * std::max(A(i, i), diag_floor);
      const Vec3 step = M.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      const Vec3 trial = prob.clamp(x + step, clamped);
      const double f_new = prob.objective(trial);
      if (f_new < f) {
        if (clamped && !warned_clamp) {
          out.warnings.push_back("parameter step clamped at a bound (kappa >= 0, 0 < alpha2 <= 1)");
          warned_clamp = true;
        }
        const double decrease = f - f_new;
        const double moved = ((trial - x).array() / x.array().abs().max(1e-12)).abs().maxCoeff();
        x = trial;
        f = f_new;
        out.trace.push_back(f);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (decrease <= 1e-14 * f || moved <= 1e-12 || f <= 1e-28) stalled = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted || stalled) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.f = f;
  return out;
}

Covariance covariance_at(const Problem& prob, const Vec3& x, double f, int dof) {
  const Eigen::VectorXd r = prob.residuals(x);
  const Eigen::MatrixXd J = prob.jacobian(x, r);
  const Eigen::Matrix3d A = J.transpose() * J;
  Eigen::Matrix3d cov = A.completeOrthogonalDecomposition().pseudoInverse();
  if (!prob.options.weighted && dof > 0) cov *= f / dof;
  cov = 0.5 * (cov + cov.transpose());
  Covariance out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cov(i, j);
  }
  return out;
}

std::vector<MeasuredPoint> sorted_rows(std::span<const MeasuredPoint> data) {
  std::vector<MeasuredPoint> rows(data.begin(), data.end());
  auto key = [](const MeasuredPoint& m) {
    return std::tuple(m.p1, m.g12 ? m.g12->value : -1.0, m.g12 ? m.g12->sigma : -1.0,
                      m.qc ? m.qc->value : -1.0, m.qc ? m.qc->sigma : -1.0);
  };
  std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return rows;
}

}  // namespace

void MeasuredPoint::validate() const {
  if (!(p1 > 0.0) || !std::isfinite(p1)) throw InvalidArgument("measured point: p1 must be > 0");
  for (const auto* obs : {&g12, &qc}) {
    if (*obs && !((*obs)->sigma > 0.0 && std::isfinite((*obs)->value) && std::isfinite((*obs)->sigma))) {
      throw InvalidArgument("measured point at p1 = " + std::to_string(p1) +
                            ": observable needs a finite value and a sigma > 0");
    }
  }
}

FixedParams FixedParams::paper() {
  const auto m = model::paper_params();
  return {m.alpha1, m.b1, m.b2, m.eta2};
}

double FitResult::sigma(int i) const {
  const double v = covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

model::ModelParams assemble(const FixedParams& fixed, const FreeParams& free, double p) {
  model::ModelParams m;
  m.p = p;
  m.kappa1 = free.kappa1;
  m.kappa2 = free.kappa2;
  m.alpha1 = fixed.alpha1;
  m.alpha2 = free.alpha2;
  m.eta2 = fixed.eta2;
  m.b1 = fixed.b1;
  m.b2 = fixed.b2;
  return m;
}

double invert_p1(const model::ModelParams& templ, double p1_target) {
  auto p1_at = [&](double p) { return model::singles(templ.with_p(p)).p1; };
  const double floor = p1_at(0.0);
  if (!(p1_target >= floor)) {
    throw InvalidArgument("invert_p1: p1 = " + std::to_string(p1_target) +
                          " lies below the background floor b1 = " + std::to_string(floor));
  }
  if (p1_target == floor) return 0.0;

  double lo = 0.0;
  double hi = 0.5;
  while (p1_at(hi) < p1_target) {
    lo = hi;
    hi = 0.5 * (1.0 + hi);
    if (hi >= 1.0 - 1e-15) {
      throw InvalidArgument("invert_p1: p1 = " + std::to_string(p1_target) + " requires p >= 1");
    }
  }
  // Bisect until the bracket cannot shrink any further in double precision.
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (p1_at(mid) < p1_target ? lo : hi) = mid;
  }
  return std::abs(p1_at(lo) - p1_target) <= std::abs(p1_at(hi) - p1_target) ? lo : hi;
}

FitResult fit(std::span<const MeasuredPoint> data, const FixedParams& fixed,
              const FreeParams& initial, const FitOptions& options) {
  if (!options.use_g12 && !options.use_qc) throw InvalidArgument("fit: no observable selected");
  if (options.starts < 1) throw InvalidArgument("fit: starts must be >= 1");
  assemble(fixed, {0.0, 0.0, std::clamp(initial.alpha2, kAlpha2Floor, 1.0)}).validate();

  Problem prob{sorted_rows(data), fixed, options};
  int n_obs = 0;
  int informative = 0;
  double p1_min = std::numeric_limits<double>::infinity();
  double p1_max = 0.0;
  bool any_g12 = false;
  bool any_qc = false;
  for (const auto& pt : prob.data) {
    pt.validate();
    if (pt.p1 < fixed.b1) {
      throw InvalidArgument("fit: p1 = " + std::to_string(pt.p1) + " below the background floor b1");
    }
    const int k = (options.use_g12 && pt.g12 ? 1 : 0) + (options.use_qc && pt.qc ? 1 : 0);
    any_g12 = any_g12 || (options.use_g12 && pt.g12);
    any_qc = any_qc || (options.use_qc && pt.qc);
    if (k == 0) continue;
    n_obs += k;
    ++informative;
    p1_min = std::min(p1_min, pt.p1);
    p1_max = std::max(p1_max, pt.p1);
  }
  if (informative < 3) throw InvalidArgument("fit: need at least 3 usable data rows");
  if (p1_max < 10.0 * p1_min) throw InvalidArgument("fit: data must span at least one decade in p1");
  prob.options.use_g12 = any_g12;
  prob.options.use_qc = any_qc;

  const int n_starts = options.starts;
  auto start_point = [&](int k) {
    const double e = n_starts == 1 ? 0.0
                                   : options.start_span_decades * (-1.0 + 2.0 * k / (n_starts - 1));
    const double s = std::pow(10.0, e);
    return Vec3(initial.kappa1 * s, initial.kappa2 * s, std::min(1.0, initial.alpha2 * s));
  };

  std::vector<LocalResult> locals(static_cast<std::size_t>(n_starts));
  if (options.parallel && n_starts > 1) {
    std::vector<std::future<LocalResult>> jobs;
    for (int k = 0; k < n_starts; ++k) {
      jobs.push_back(std::async(std::launch::async, [&, k] { return levenberg_marquardt(prob, start_point(k)); }));
    }
    for (int k = 0; k < n_starts; ++k) locals[static_cast<std::size_t>(k)] = jobs[static_cast<std::size_t>(k)].get();
  } else {
    for (int k = 0; k < n_starts; ++k) locals[static_cast<std::size_t>(k)] = levenberg_marquardt(prob, start_point(k));
  }

  int best = 0;
  for (int k = 1; k < n_starts; ++k) {
    if (locals[static_cast<std::size_t>(k)].f < locals[static_cast<std::size_t>(best)].f) best = k;
  }
  const auto& lr = locals[static_cast<std::size_t>(best)];

  FitResult result;
  result.params = prob.unpack(lr.x);
  result.fixed = fixed;
  result.used_g12 = any_g12;
  result.used_qc = any_qc;
  result.weighted = options.weighted;
  result.residual_norm = lr.f;
  result.dof = n_obs - 3;
  result.chi2_per_dof = result.dof > 0 ? lr.f / result.dof : std::numeric_limits<double>::quiet_NaN();
  result.converged = lr.converged;
  result.iterations = lr.iterations;
  result.start_index = best;
  result.objective_trace = lr.trace;
  result.warnings = lr.warnings;
  if (!any_g12) result.warnings.push_back("fit used qc only");
  if (!any_qc) result.warnings.push_back("fit used g12 only; alpha2 is weakly constrained");

  if (!std::isfinite(lr.f)) {
    throw FitError("fit: objective could not be evaluated from any start", result);
  }
  result.covariance = covariance_at(prob, lr.x, lr.f, result.dof);
  for (const auto& w : result.warnings) warn("fit: " + w);
  if (!lr.converged) {
    throw FitError("fit: no convergence within " + std::to_string(options.max_iterations) + " iterations",
                   result);
  }
  return result;
}

ResidualReport residual_report(const FitResult& result, std::span<const MeasuredPoint> data) {
  ResidualReport report;
  const auto params = assemble(result.fixed, result.params);
  for (const auto& pt : sorted_rows(data)) {
    pt.validate();
    const auto fom = model::figures_of_merit(params.with_p(invert_p1(params, pt.p1)));
    auto add = [&](const char* name, const std::optional<Observation>& obs, double model_value) {
      if (!obs) return;
      const double sigma = result.weighted ? obs->sigma : 1.0;
      const double z = (obs->value - model_value) / sigma;
      report.rows.push_back({pt.p1, name, obs->value, model_value, obs->sigma, z});
      report.chi2 += z * z;
    };
    if (result.used_g12) add("g12", pt.g12, fom.g12);
    if (result.used_qc) add("qc", pt.qc, fom.qc);
  }
  report.dof = static_cast<int>(report.rows.size()) - 3;
  report.chi2_per_dof = report.dof > 0 ? report.chi2 / report.dof : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace dlcz::fit
