#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qdband/estimator.hpp"
#include "qdband/parallel.hpp"
#include "qdband/rng.hpp"

namespace qdband {

enum class CritvalMethod { KnownProcess, PseudoUniform };

inline std::string to_string(CritvalMethod m) {
  return m == CritvalMethod::KnownProcess ? "known" : "pseudo";
}

inline CritvalMethod parse_critval_method(std::string_view s) {
  if (s == "known") return CritvalMethod::KnownProcess;
  if (s == "pseudo") return CritvalMethod::PseudoUniform;
  throw std::invalid_argument("unsupported critical-value method: " +
                              std::string(s));
}

//! Simulated tau-quantiles of the sup statistic (one_sided) and of the
//! sup-absolute statistic (absolute), keyed by tau in ascending order,
//! together with the full configuration they were simulated under.
struct CriticalValues {
  CritvalMethod method;
  std::size_t n;
  double h;
  KernelName kernel;
  Grid grid;
  std::size_t n_sims;
  std::uint64_t seed;
  std::vector<std::pair<double, double>> one_sided;
  std::vector<std::pair<double, double>> absolute;

  double one_sided_at(double tau) const { return lookup(one_sided, tau); }
  double absolute_at(double tau) const { return lookup(absolute, tau); }

 private:
  static double lookup(const std::vector<std::pair<double, double>>& table,
                       double tau) {
    for (const auto& [t, c] : table) {
      if (std::abs(t - tau) <= 1e-9) return c;
    }
    throw std::invalid_argument("no critical value simulated for tau = " +
                                std::to_string(tau));
  }
};

namespace detail {

struct SupPair {
  double sup;
  double sup_abs;
};

//! One simulation draw of the known centered kernel process: n uniforms are
//! scattered onto the grid through the scaled kernel, then centered at
//! sqrt(nh) * psi and scaled by 1/sqrt(nh).
inline SupPair known_process_sup(const Kernel& k, std::size_t n, double h,
                                 std::span<const double> grid,
                                 std::span<const double> centered_psi,
                                 double inv_sqrt_nh, RngStream& rng,
                                 std::vector<double>& acc) {
  std::fill(acc.begin(), acc.end(), 0.0);
  const double half = h / 2.0;
  const double inv_h = 1.0 / h;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    auto first = std::lower_bound(grid.begin(), grid.end(), u - half);
    auto last = std::upper_bound(first, grid.end(), u + half);
    for (auto it = first; it != last; ++it) {
      acc[static_cast<std::size_t>(it - grid.begin())] +=
          k.eval((u - *it) * inv_h);
    }
  }
  double sup = -std::numeric_limits<double>::infinity();
  double sup_abs = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double g = acc[j] * inv_sqrt_nh - centered_psi[j];
    sup = std::max(sup, g);
    sup_abs = std::max(sup_abs, std::abs(g));
  }
  return {sup, sup_abs};
}

//! One simulation draw of the studentized statistic under pseudo-uniform
//! data: sort a fresh uniform sample, evaluate the plain spacing estimate on
//! the grid and record sqrt(nh) * (qtilde - psi).
inline SupPair pseudo_uniform_sup(const Kernel& k, std::size_t n, double h,
                                  std::span<const double> grid,
                                  std::span<const double> psi_vals,
                                  double sqrt_nh, RngStream& rng,
                                  std::vector<double>& sample_buf) {
  for (std::size_t i = 0; i < n; ++i) sample_buf[i] = rng.uniform();
  std::sort(sample_buf.begin(), sample_buf.end());

  double sup = -std::numeric_limits<double>::infinity();
  double sup_abs = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double qtilde = kqd_raw(sample_buf, k, h, grid[j]);
    const double z = sqrt_nh * (qtilde - psi_vals[j]);
    sup = std::max(sup, z);
    sup_abs = std::max(sup_abs, std::abs(z));
  }
  return {sup, sup_abs};
}

//! tau-quantile of simulated sups: the ceil(tau * m)-th smallest value.
//! Sorts w in place. The small slack keeps exact products like 0.9 * 20000
//! from rounding up to the next rank.
inline std::vector<std::pair<double, double>> empirical_quantiles(
    std::vector<double>& w, const std::vector<double>& taus) {
  std::sort(w.begin(), w.end());
  const auto m = static_cast<double>(w.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    auto rank = static_cast<std::size_t>(std::ceil(tau * m - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, w.size());
    out.emplace_back(tau, w[rank - 1]);
  }
  return out;
}

inline std::vector<double> checked_taus(std::vector<double> taus) {
  if (taus.empty()) {
    throw std::invalid_argument("critical values: need at least one tau");
  }
  for (double t : taus) {
    if (!(t > 0.0) || !(t < 1.0)) {
      throw std::invalid_argument("critical values: tau must lie in (0, 1)");
    }
  }
  std::sort(taus.begin(), taus.end());
  return taus;
}

template <typename SimFn>
CriticalValues simulate_critvals(CritvalMethod method, const Kernel& kernel,
                                 const Bandwidth& bandwidth, const Grid& grid,
                                 std::size_t n_sims, std::vector<double> taus,
                                 std::uint64_t seed, unsigned threads,
                                 SimFn&& one_sim) {
  if (n_sims < 1000) {
    throw std::invalid_argument(
        "critical values: need at least 1000 simulations");
  }
  taus = checked_taus(std::move(taus));

  std::vector<double> sups(n_sims);
  std::vector<double> sups_abs(n_sims);
  parallel_for(n_sims, threads, [&](std::size_t s) {
    RngStream rng = RngStream::derive(seed, 0, s);
    const SupPair w = one_sim(rng);
    sups[s] = w.sup;
    sups_abs[s] = w.sup_abs;
  });

  CriticalValues cv{method,
                    bandwidth.sample_size(),
                    bandwidth.value(),
                    kernel.name(),
                    grid,
                    n_sims,
                    seed,
                    {},
                    {}};
  cv.one_sided = empirical_quantiles(sups, taus);
  cv.absolute = empirical_quantiles(sups_abs, taus);
  return cv;
}

}  // namespace detail

//! Critical values from the known driving process: for each simulation, n
//! iid Uniform[0,1] variables are pushed through the centered, scaled kernel
//! sum and the sup / sup-absolute over the grid is recorded. Deterministic
//! in (seed, config) for any thread count.
inline CriticalValues simulate_critvals_known(
    const Kernel& kernel, const Bandwidth& bandwidth, const Grid& grid,
    std::size_t n_sims, std::vector<double> taus, std::uint64_t seed,
    unsigned threads = 0) {
  const std::size_t n = bandwidth.sample_size();
  const double h = bandwidth.value();
  const double sqrt_nh = std::sqrt(static_cast<double>(n) * h);
  const std::size_t m = grid.size();

  std::vector<double> centered_psi(m);
  for (std::size_t j = 0; j < m; ++j) {
    centered_psi[j] = sqrt_nh * psi(kernel, bandwidth, grid[j]);
  }

  return detail::simulate_critvals(
      CritvalMethod::KnownProcess, kernel, bandwidth, grid, n_sims,
      std::move(taus), seed, threads, [&](RngStream& rng) {
        std::vector<double> acc(m);
        return detail::known_process_sup(kernel, n, h, grid.points(),
                                         centered_psi, 1.0 / sqrt_nh, rng,
                                         acc);
      });
}

//! Critical values from a pseudo-sample: each simulation draws n fresh
//! Uniform[0,1] observations, sorts them and records the sup / sup-absolute
//! of sqrt(nh) * (qtilde_h - psi_h) over the grid, qtilde_h being the plain
//! spacing estimate of the pseudo-sample.
inline CriticalValues simulate_critvals_pseudo(
    const Kernel& kernel, const Bandwidth& bandwidth, const Grid& grid,
    std::size_t n_sims, std::vector<double> taus, std::uint64_t seed,
    unsigned threads = 0) {
  const std::size_t n = bandwidth.sample_size();
  const double h = bandwidth.value();
  const double sqrt_nh = std::sqrt(static_cast<double>(n) * h);
  const std::size_t m = grid.size();

  std::vector<double> psi_vals(m);
  for (std::size_t j = 0; j < m; ++j) {
    psi_vals[j] = psi(kernel, bandwidth, grid[j]);
  }

  return detail::simulate_critvals(
      CritvalMethod::PseudoUniform, kernel, bandwidth, grid, n_sims,
      std::move(taus), seed, threads, [&](RngStream& rng) {
        std::vector<double> sample_buf(n);
        return detail::pseudo_uniform_sup(kernel, n, h, grid.points(),
                                          psi_vals, sqrt_nh, rng, sample_buf);
      });
}

enum class BandSide { LowerOneSided, UpperOneSided, TwoSided };

inline std::string to_string(BandSide side) {
  switch (side) {
    case BandSide::LowerOneSided: return "lower";
    case BandSide::UpperOneSided: return "upper";
    case BandSide::TwoSided: return "two";
  }
  return "?";
}

inline BandSide parse_band_side(std::string_view s) {
  if (s == "lower") return BandSide::LowerOneSided;
  if (s == "upper") return BandSide::UpperOneSided;
  if (s == "two") return BandSide::TwoSided;
  throw std::invalid_argument("unsupported band side: " + std::string(s));
}

//! Pointwise envelopes of a uniform confidence band. One-sided bands carry
//! an infinite endpoint on the unconstrained side; a degenerate upper
//! denominator also yields +inf rather than an error.
struct ConfidenceBand {
  Grid grid;
  std::vector<double> lower;
  std::vector<double> upper;
  double level;
  BandSide side;
  QdEstimate estimate;
  CriticalValues critical;
};

//! Builds the band around qhat_bc with half-width factor
//! d_j = c / (psi_j sqrt(nh)):
//!   lower one-sided:  [qhat_bc / (1 + d), +inf)
//!   upper one-sided:  (-inf, qhat_bc / (1 - d)]
//!   two-sided:        both, using the sup-absolute critical value at
//!                     tau = 1 - (1 - level)/2.
//! When 1 - d <= 0 the upper endpoint is +inf: the band is uninformative
//! there, which at small n can happen near the boundary.
inline ConfidenceBand build_band(const QdEstimate& est,
                                 const CriticalValues& cv, double level,
                                 BandSide side) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::invalid_argument("build_band: level must lie in (0, 1)");
  }
  if (cv.n != est.h.sample_size() || cv.h != est.h.value() ||
      cv.kernel != est.kernel_name || !(cv.grid == est.grid)) {
    throw std::invalid_argument(
        "build_band: estimate and critical values were produced under "
        "different configurations");
  }

  const double tau =
      side == BandSide::TwoSided ? 1.0 - (1.0 - level) / 2.0 : level;
  const double c = side == BandSide::TwoSided ? cv.absolute_at(tau)
                                              : cv.one_sided_at(tau);
  const double sqrt_nh =
      std::sqrt(static_cast<double>(cv.n) * cv.h);
  constexpr double inf = std::numeric_limits<double>::infinity();

  const std::size_t m = est.grid.size();
  ConfidenceBand band{est.grid, std::vector<double>(m), std::vector<double>(m),
                      level,    side,                   est,
                      cv};
  for (std::size_t j = 0; j < m; ++j) {
    const double d = c / (est.psi[j] * sqrt_nh);
    if (side == BandSide::UpperOneSided) {
      band.lower[j] = -inf;
    } else {
      band.lower[j] = (1.0 + d > 0.0) ? est.qhat_bc[j] / (1.0 + d) : -inf;
    }
    if (side == BandSide::LowerOneSided) {
      band.upper[j] = inf;
    } else {
      band.upper[j] = (1.0 - d > 0.0) ? est.qhat_bc[j] / (1.0 - d) : inf;
    }
  }
  return band;
}

//! True curve inside the band at every grid point simultaneously?
inline bool covers(const ConfidenceBand& band,
                   std::span<const double> truth) {
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    if (truth[j] < band.lower[j] || truth[j] > band.upper[j]) return false;
  }
  return true;
}

// ---- JSON tabulation ----

namespace detail {

inline std::string tau_key(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", tau);
  return buf;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const CriticalValues& cv) {
  nlohmann::ordered_json j;
  j["method"] = to_string(cv.method);
  j["n"] = cv.n;
  j["h"] = cv.h;
  j["kernel"] = to_string(cv.kernel);
  j["grid"] = std::vector<double>(cv.grid.points().begin(),
                                  cv.grid.points().end());
  j["n_sims"] = cv.n_sims;
  j["seed"] = cv.seed;
  nlohmann::ordered_json one, abs;
  for (const auto& [tau, c] : cv.one_sided) one[detail::tau_key(tau)] = c;
  for (const auto& [tau, c] : cv.absolute) abs[detail::tau_key(tau)] = c;
  j["one_sided"] = std::move(one);
  j["absolute"] = std::move(abs);
  return j;
}

inline CriticalValues critical_values_from_json(const nlohmann::json& j) {
  CriticalValues cv{parse_critval_method(j.at("method").get<std::string>()),
                    j.at("n").get<std::size_t>(),
                    j.at("h").get<double>(),
                    parse_kernel_name(j.at("kernel").get<std::string>()),
                    Grid(j.at("grid").get<std::vector<double>>()),
                    j.at("n_sims").get<std::size_t>(),
                    j.at("seed").get<std::uint64_t>(),
                    {},
                    {}};
  for (const auto& [key, value] : j.at("one_sided").items()) {
    cv.one_sided.emplace_back(std::stod(key), value.get<double>());
  }
  for (const auto& [key, value] : j.at("absolute").items()) {
    cv.absolute.emplace_back(std::stod(key), value.get<double>());
  }
  auto by_tau = [](const auto& a, const auto& b) { return a.first < b.first; };
  std::sort(cv.one_sided.begin(), cv.one_sided.end(), by_tau);
  std::sort(cv.absolute.begin(), cv.absolute.end(), by_tau);
  return cv;
}

}  // namespace qdband
