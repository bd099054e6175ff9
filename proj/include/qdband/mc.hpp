#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qdband/bands.hpp"
#include "qdband/distributions.hpp"

namespace qdband {

namespace detail {
// Seed domains, so that critical-value simulations, coverage replications and
// ensemble draws never share a stream.
constexpr std::uint64_t kSeedDomainCritvals = 101;
constexpr std::uint64_t kSeedDomainReplications = 102;
constexpr std::uint64_t kSeedDomainEnsemble = 103;
constexpr std::uint64_t kSeedDomainSupSamples = 104;
}  // namespace detail

//! One coverage cell: a distribution, a sample size and a set of nominal
//! levels sharing a single critical-value table.
struct CoverageConfig {
  DistributionName dist = DistributionName::Uniform;
  std::size_t n = 1000;
  std::vector<double> levels = {0.8, 0.9, 0.95, 0.99};
  std::size_t reps = 2000;
  std::size_t n_sims = 20000;
  Grid grid = Grid::standard();
  KernelName kernel_name = KernelName::TruncatedNormal;
  double bandwidth_c = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct CoverageReport {
  CoverageConfig config;
  std::vector<std::pair<double, double>> coverage;   // (level, fraction)
  std::vector<std::pair<double, double>> mc_stderr;  // (level, binomial se)
  std::chrono::duration<double> elapsed{};

  double coverage_at(double level) const {
    for (const auto& [l, c] : coverage) {
      if (std::abs(l - level) <= 1e-9) return c;
    }
    throw std::invalid_argument("no coverage estimate for level " +
                                std::to_string(level));
  }
};

namespace detail {

inline void check_coverage_config(const CoverageConfig& cfg) {
  if (cfg.reps < 100) {
    throw std::invalid_argument("coverage: need at least 100 replications");
  }
  if (cfg.levels.empty()) {
    throw std::invalid_argument("coverage: need at least one level");
  }
  for (double l : cfg.levels) {
    if (!(l > 0.0) || !(l < 1.0)) {
      throw std::invalid_argument("coverage: levels must lie in (0, 1)");
    }
  }
}

inline std::vector<double> two_sided_taus(const std::vector<double>& levels) {
  std::vector<double> taus;
  taus.reserve(levels.size());
  for (double l : levels) taus.push_back(1.0 - (1.0 - l) / 2.0);
  return taus;
}

}  // namespace detail

//! Critical-value table a coverage run would simulate for itself: the known
//! process, with the sup-absolute quantiles at tau = 1 - (1 - level)/2 for
//! every requested level.
inline CriticalValues coverage_critical_values(const CoverageConfig& cfg) {
  detail::check_coverage_config(cfg);
  const Kernel kernel = make_kernel(cfg.kernel_name);
  const Bandwidth bw = scaled_bandwidth(cfg.n, cfg.bandwidth_c);
  std::vector<double> taus = detail::two_sided_taus(cfg.levels);
  taus.insert(taus.end(), cfg.levels.begin(), cfg.levels.end());
  return simulate_critvals_known(
      kernel, bw, cfg.grid, cfg.n_sims, std::move(taus),
      derive_seed(cfg.seed, detail::kSeedDomainCritvals), cfg.threads);
}

//! Simulated simultaneous coverage of the two-sided bands: fraction of
//! replications whose band contains the true quantile density at every grid
//! point at once. Deterministic in (seed, config) for any thread count.
inline CoverageReport run_coverage(const CoverageConfig& cfg,
                                   const CriticalValues& critical) {
  detail::check_coverage_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  const Kernel kernel = make_kernel(cfg.kernel_name);
  const Bandwidth bw = scaled_bandwidth(cfg.n, cfg.bandwidth_c);
  const RefDistribution dist = RefDistribution::make(cfg.dist);

  const std::size_t m = cfg.grid.size();
  std::vector<double> truth(m);
  for (std::size_t j = 0; j < m; ++j) truth[j] = dist.true_qd(cfg.grid[j]);

  const std::size_t n_levels = cfg.levels.size();
  std::vector<std::uint8_t> contained(cfg.reps * n_levels, 0);
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
    RngStream rng =
        RngStream::derive(cfg.seed, detail::kSeedDomainReplications, r);
    const SortedSample sample = dist.sample(cfg.n, rng);
    const QdEstimate est = bc_kqd(sample, kernel, bw, cfg.grid);
    for (std::size_t li = 0; li < n_levels; ++li) {
      const ConfidenceBand band =
          build_band(est, critical, cfg.levels[li], BandSide::TwoSided);
      contained[r * n_levels + li] = covers(band, truth) ? 1 : 0;
    }
  });

  CoverageReport report{cfg, {}, {}, {}};
  for (std::size_t li = 0; li < n_levels; ++li) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      hits += contained[r * n_levels + li];
    }
    const double p =
        static_cast<double>(hits) / static_cast<double>(cfg.reps);
    report.coverage.emplace_back(cfg.levels[li], p);
    report.mc_stderr.emplace_back(
        cfg.levels[li],
        std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.reps)));
  }
  report.elapsed = std::chrono::steady_clock::now() - t0;
  return report;
}

inline CoverageReport run_coverage(const CoverageConfig& cfg) {
  return run_coverage(cfg, coverage_critical_values(cfg));
}

//! Independent band realizations plus the true curve, ready for plotting.
struct BandEnsemble {
  Grid grid;
  std::vector<ConfidenceBand> bands;
  std::vector<double> true_qd;
};

inline BandEnsemble band_ensemble(DistributionName dist_name, std::size_t n,
                                  double level, std::size_t realizations,
                                  std::uint64_t seed,
                                  KernelName kernel_name =
                                      KernelName::TruncatedNormal,
                                  const Grid& grid = Grid::standard(),
                                  std::size_t n_sims = 20000,
                                  unsigned threads = 0) {
  if (realizations < 1) {
    throw std::invalid_argument("band_ensemble: need at least 1 realization");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::invalid_argument("band_ensemble: level must lie in (0, 1)");
  }
  const Kernel kernel = make_kernel(kernel_name);
  const Bandwidth bw = default_bandwidth(n);
  const RefDistribution dist = RefDistribution::make(dist_name);

  const CriticalValues critical = simulate_critvals_known(
      kernel, bw, grid, n_sims, {level, 1.0 - (1.0 - level) / 2.0},
      derive_seed(seed, detail::kSeedDomainCritvals), threads);

  BandEnsemble ensemble{grid, {}, {}};
  ensemble.true_qd.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    ensemble.true_qd[j] = dist.true_qd(grid[j]);
  }

  std::vector<ConfidenceBand> bands;
  bands.reserve(realizations);
  for (std::size_t r = 0; r < realizations; ++r) {
    RngStream rng = RngStream::derive(seed, detail::kSeedDomainEnsemble, r);
    const SortedSample sample = dist.sample(n, rng);
    const QdEstimate est = bc_kqd(sample, kernel, bw, grid);
    bands.push_back(build_band(est, critical, level, BandSide::TwoSided));
  }
  ensemble.bands = std::move(bands);
  return ensemble;
}

//! Per-replication suprema over the grid of the studentized process
//! sqrt(nh) (qhat_bc - q) psi / q, for pivotality comparisons across
//! data-generating processes.
inline std::vector<double> studentized_sup_samples(
    DistributionName dist_name, std::size_t n, KernelName kernel_name,
    const Bandwidth& bw, const Grid& grid, std::size_t reps,
    std::uint64_t seed, unsigned threads = 0) {
  if (reps == 0) {
    throw std::invalid_argument("studentized_sup_samples: reps must be > 0");
  }
  const Kernel kernel = make_kernel(kernel_name);
  const RefDistribution dist = RefDistribution::make(dist_name);
  const double sqrt_nh =
      std::sqrt(static_cast<double>(n) * bw.value());

  const std::size_t m = grid.size();
  std::vector<double> truth(m);
  for (std::size_t j = 0; j < m; ++j) truth[j] = dist.true_qd(grid[j]);

  std::vector<double> sups(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    RngStream rng = RngStream::derive(seed, detail::kSeedDomainSupSamples, r);
    const SortedSample sample = dist.sample(n, rng);
    const QdEstimate est = bc_kqd(sample, kernel, bw, grid);
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double z =
          sqrt_nh * (est.qhat_bc[j] - truth[j]) * est.psi[j] / truth[j];
      sup = std::max(sup, z);
    }
    sups[r] = sup;
  });
  return sups;
}

// ---- serialization ----

inline nlohmann::ordered_json to_json(const CoverageReport& report) {
  const CoverageConfig& cfg = report.config;
  nlohmann::ordered_json j;
  j["dist"] = to_string(cfg.dist);
  j["n"] = cfg.n;
  j["levels"] = cfg.levels;
  j["reps"] = cfg.reps;
  j["n_sims"] = cfg.n_sims;
  j["kernel"] = to_string(cfg.kernel_name);
  j["bandwidth_c"] = cfg.bandwidth_c;
  j["h"] = scaled_bandwidth(cfg.n, cfg.bandwidth_c).value();
  j["seed"] = cfg.seed;
  j["grid"] = std::vector<double>(cfg.grid.points().begin(),
                                  cfg.grid.points().end());
  nlohmann::ordered_json cov, se;
  for (const auto& [level, p] : report.coverage) {
    cov[detail::tau_key(level)] = p;
  }
  for (const auto& [level, s] : report.mc_stderr) {
    se[detail::tau_key(level)] = s;
  }
  j["coverage"] = std::move(cov);
  j["mc_stderr"] = std::move(se);
  return j;
}

//! One table row per run: the distribution block and sample size lead, one
//! coverage column per nominal level.
inline std::string to_csv(const CoverageReport& report) {
  std::string header = "distribution,n";
  std::string row = to_string(report.config.dist) + "," +
                    std::to_string(report.config.n);
  char buf[64];
  for (const auto& [level, p] : report.coverage) {
    header += ",cov@" + detail::tau_key(level);
    std::snprintf(buf, sizeof(buf), ",%.6g", p);
    row += buf;
  }
  return header + "\n" + row + "\n";
}

}  // namespace qdband
