#include "dlcz/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "dlcz/diagnostics.hpp"

namespace dlcz::mc {

namespace {

// Uniform on (0, 1], 53 random bits.
inline double uniform(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

std::mt19937_64 block_stream(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                    0x444c435au};
  return std::mt19937_64(seq);
}

// Inverse-CDF Poisson draw from a single uniform. Large means fall back to
// the library sampler; they never occur at physical parameters.
class PoissonSampler {
 public:
  explicit PoissonSampler(double mean) : mean_(mean), p0_(std::exp(-mean)), fallback_(mean > 50.0 ? mean : 1.0) {}

  int operator()(std::mt19937_64& rng) {
    if (mean_ == 0.0) return 0;
    if (mean_ > 50.0) return fallback_(rng);
    const double u = uniform(rng);
    int k = 0;
    double pmf = p0_;
    double cdf = pmf;
    while (u > cdf && pmf > 0.0) {
      ++k;
      pmf *= mean_ / k;
      cdf += pmf;
    }
    return k;
  }

 private:
  double mean_;
  double p0_;
  std::poisson_distribution<int> fallback_;
};

// P(N = n) = (1 - p) p^n via N = floor(ln u / ln p), u in (0, 1].
class GeometricSampler {
 public:
  explicit GeometricSampler(double p) : p_(p), inv_log_p_(p > 0.0 ? 1.0 / std::log(p) : 0.0) {}

  int operator()(std::mt19937_64& rng) const {
    const double u = uniform(rng);
    if (u > p_) return 0;
    return static_cast<int>(std::floor(std::log(u) * inv_log_p_));
  }

 private:
  double p_;
  double inv_log_p_;
};

struct Chain {
  GeometricSampler pairs;
  PoissonSampler bg1_coherent, bg1_incoherent, bg2_coherent, bg2_incoherent;
  double alpha1, alpha2;
  double dark1, dark2;
  DetectorMode mode;
};

inline bool bernoulli(std::mt19937_64& rng, double prob) { return prob > 0.0 && uniform(rng) <= prob; }

inline bool linear_click(std::mt19937_64& rng, double efficiency, int n, double dark) {
  const double prob = efficiency * n + dark;
  if (prob > 1.0) {
    throw NumericalError("linearized-rejection detector: click probability " + std::to_string(prob) +
                         " exceeds 1 (n = " + std::to_string(n) + ")");
  }
  return bernoulli(rng, prob);
}

void run_block(Chain& chain, std::mt19937_64& rng, std::uint64_t first_trial, std::uint64_t count,
               ClickCounts& acc, std::ostream* tap) {
  const double half2 = 0.5 * chain.alpha2;
  const double split_undetected = 0.5 * (1.0 + chain.alpha2);
  for (std::uint64_t t = 0; t < count; ++t) {
    const int n = chain.pairs(rng);
    const int n1 = n + chain.bg1_coherent(rng) + chain.bg1_incoherent(rng);
    const int n2 = n + chain.bg2_coherent(rng) + chain.bg2_incoherent(rng);

    bool c1 = false, ca = false, cb = false;
    int n2a = 0;
    if (chain.mode == DetectorMode::threshold) {
      for (int i = 0; i < n1 && !c1; ++i) c1 = uniform(rng) <= chain.alpha1;
      // One uniform per photon: [0, a/2) arm a detected, [a/2, a) arm b
      // detected, [a, (1+a)/2) arm a lost, the rest arm b lost.
      for (int i = 0; i < n2; ++i) {
        const double u = uniform(rng);
        if (u <= half2) {
          ca = true;
          ++n2a;
        } else if (u <= chain.alpha2) {
          cb = true;
        } else if (u <= split_undetected) {
          ++n2a;
        }
      }
      c1 = c1 || bernoulli(rng, chain.dark1);
      ca = ca || bernoulli(rng, chain.dark2);
      cb = cb || bernoulli(rng, chain.dark2);
    } else {
      for (int i = 0; i < n2; ++i) n2a += uniform(rng) <= 0.5;
      c1 = linear_click(rng, chain.alpha1, n1, chain.dark1);
      ca = linear_click(rng, chain.alpha2, n2a, chain.dark2);
      cb = linear_click(rng, chain.alpha2, n2 - n2a, chain.dark2);
    }

    if (tap) {
      *tap << first_trial + t << ',' << n << ',' << n1 << ',' << n2 << ',' << n2a << ','
           << n2 - n2a << '\n';
    }

    const bool c2 = ca || cb;
    acc.k1 += c1;
    acc.k2a += ca;
    acc.k2b += cb;
    acc.k2 += c2;
    acc.k12 += c1 && c2;
    acc.k1_2a += c1 && ca;
    acc.k1_2b += c1 && cb;
    acc.k2a_2b += ca && cb;
    acc.k_triple += c1 && ca && cb;
  }
  acc.n_trials += count;
}

Chain make_chain(const model::ModelParams& params, const TrialBatchConfig& config) {
  return Chain{GeometricSampler(params.p),
               PoissonSampler(params.coherent_mean1()),
               PoissonSampler(params.incoherent_mean1()),
               PoissonSampler(params.coherent_mean2()),
               PoissonSampler(params.incoherent_mean2()),
               params.alpha1,
               params.alpha2,
               config.dark1,
               config.dark2,
               config.detector};
}

std::optional<EstimateWithError> ratio_estimate(double value, std::initializer_list<std::uint64_t> terms) {
  EstimateWithError e{value, std::nullopt};
  double rel2 = 0.0;
  for (auto k : terms) {
    if (k == 0) return e;
    rel2 += 1.0 / static_cast<double>(k);
  }
  e.sigma = std::abs(value) * std::sqrt(rel2);
  return e;
}

}  // namespace

void TrialBatchConfig::validate() const {
  if (n_trials == 0) throw InvalidArgument("montecarlo.n_trials must be >= 1");
  if (batch_size == 0) throw InvalidArgument("montecarlo.batch_size must be >= 1");
  if (!(dark1 >= 0.0 && dark1 <= 1.0)) throw InvalidArgument("montecarlo.dark1 must lie in [0,1]");
  if (!(dark2 >= 0.0 && dark2 <= 1.0)) throw InvalidArgument("montecarlo.dark2 must lie in [0,1]");
}

ClickCounts& ClickCounts::operator+=(const ClickCounts& other) {
  auto add = [](std::uint64_t& a, std::uint64_t b) {
    if (a > std::numeric_limits<std::uint64_t>::max() - b) {
      throw NumericalError("ClickCounts: count overflow");
    }
    a += b;
  };
  add(n_trials, other.n_trials);
  add(k1, other.k1);
  add(k2a, other.k2a);
  add(k2b, other.k2b);
  add(k2, other.k2);
  add(k12, other.k12);
  add(k1_2a, other.k1_2a);
  add(k1_2b, other.k1_2b);
  add(k2a_2b, other.k2a_2b);
  add(k_triple, other.k_triple);
  return *this;
}

void ClickCounts::validate() const {
  const bool ok = k1 <= n_trials && k2a <= k2 && k2b <= k2 && k2 <= n_trials && k12 <= k1 &&
                  k12 <= k2 && k1_2a <= k12 && k1_2b <= k12 && k_triple <= std::min(k1_2a, k1_2b) &&
                  k_triple <= k2a_2b && k2a_2b <= std::min(k2a, k2b);
  if (!ok) throw InvalidArgument("ClickCounts: inconsistent coincidence counts");
}

ClickCounts sample_trials(const model::ModelParams& params, const TrialBatchConfig& config,
                          std::ostream* tap) {
  params.validate();
  config.validate();

  const std::uint64_t n_blocks = (config.n_trials + kBlockTrials - 1) / kBlockTrials;
  const std::uint64_t n_tasks = (n_blocks + config.batch_size - 1) / config.batch_size;
  std::vector<ClickCounts> partial(n_tasks);

  auto run_task = [&](std::uint64_t task, std::ostream* out) {
    Chain chain = make_chain(params, config);
    const std::uint64_t b0 = task * config.batch_size;
    const std::uint64_t b1 = std::min(n_blocks, b0 + config.batch_size);
    for (std::uint64_t b = b0; b < b1; ++b) {
      auto rng = block_stream(config.seed, b);
      const std::uint64_t first = b * kBlockTrials;
      const std::uint64_t count = std::min(kBlockTrials, config.n_trials - first);
      run_block(chain, rng, first, count, partial[task], out);
    }
  };

  if (tap) {
    *tap << "trial,n_pair,n1,n2,n2a,n2b\n";
    for (std::uint64_t task = 0; task < n_tasks; ++task) run_task(task, tap);
  } else {
    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_tasks));
    if (workers <= 1) {
      for (std::uint64_t task = 0; task < n_tasks; ++task) run_task(task, nullptr);
    } else {
      std::atomic<std::uint64_t> next{0};
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::uint64_t task; (task = next.fetch_add(1)) < n_tasks;) run_task(task, nullptr);
          } catch (...) {
            errors[w] = std::current_exception();
            next = n_tasks;
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
  }

  ClickCounts total;
  for (const auto& c : partial) total += c;
  total.validate();
  return total;
}

Estimates estimate(const ClickCounts& counts, double eta2) {
  if (counts.n_trials == 0) throw InvalidArgument("estimate: no trials");
  if (!(eta2 > 0.0 && eta2 <= 1.0)) throw InvalidArgument("estimate: eta2 must lie in (0,1]");
  const auto n = static_cast<double>(counts.n_trials);
  auto rate = [n](std::uint64_t k) {
    return EstimateWithError{static_cast<double>(k) / n, std::sqrt(static_cast<double>(k)) / n};
  };
  const auto k1 = static_cast<double>(counts.k1);
  const auto k2 = static_cast<double>(counts.k2);
  const auto k12 = static_cast<double>(counts.k12);

  Estimates e{rate(counts.k1), rate(counts.k2), rate(counts.k12), {}, {}, {}, {}};
  if (counts.k1 > 0 && counts.k2 > 0) {
    e.g12 = ratio_estimate(k12 * n / (k1 * k2), {counts.k12, counts.k1, counts.k2});
  }
  if (counts.k1 > 0) {
    e.pc = ratio_estimate(k12 / k1, {counts.k12, counts.k1});
    e.qc = EstimateWithError{e.pc->value / eta2,
                             e.pc->sigma ? std::optional<double>(*e.pc->sigma / eta2) : std::nullopt};
  }
  if (counts.k1 > 0 && counts.k1_2a > 0 && counts.k1_2b > 0) {
    const double w = k1 * static_cast<double>(counts.k_triple) /
                     (static_cast<double>(counts.k1_2a) * static_cast<double>(counts.k1_2b));
    e.w = ratio_estimate(w, {counts.k_triple, counts.k1, counts.k1_2a, counts.k1_2b});
  }
  return e;
}

std::vector<ConvergenceRow> convergence_sweep(const model::ModelParams& params,
                                              std::span<const std::uint64_t> seeds,
                                              std::span<const std::uint64_t> n_trials,
                                              const TrialBatchConfig& base) {
  if (seeds.empty() || n_trials.empty()) {
    throw InvalidArgument("convergence_sweep: seeds and n_trials must be non-empty");
  }
  std::vector<ConvergenceRow> rows;
  rows.reserve(seeds.size() * n_trials.size());
  for (auto seed : seeds) {
    for (auto n : n_trials) {
      TrialBatchConfig cfg = base;
      cfg.seed = seed;
      cfg.n_trials = n;
      auto counts = sample_trials(params, cfg);
      rows.push_back({seed, n, counts, estimate(counts, params.eta2)});
    }
  }
  return rows;
}

}  // namespace dlcz::mc
