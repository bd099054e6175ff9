#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qdband/kernels.hpp"

namespace qdband {

//! Ascending, finite sample of at least two observations. Sorting is
//! canonical: estimates depend on the multiset of values only.
class SortedSample {
 public:
  static SortedSample from_unsorted(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return from_sorted(std::move(values));
  }

  static SortedSample from_sorted(std::vector<double> values) {
    if (values.size() < 2) {
      throw std::invalid_argument("SortedSample: need at least 2 observations");
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("SortedSample: all values must be finite");
      }
      if (v < prev) {
        throw std::invalid_argument("SortedSample: values must be ascending");
      }
      prev = v;
    }
    return SortedSample(std::move(values));
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  explicit SortedSample(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

//! Strictly increasing evaluation points in [0, 1].
class Grid {
 public:
  explicit Grid(std::vector<double> pts) : points_(std::move(pts)) {
    if (points_.empty()) {
      throw std::invalid_argument("Grid: need at least one point");
    }
    double prev = -1.0;
    for (double p : points_) {
      if (!(p >= 0.0) || !(p <= 1.0)) {
        throw std::invalid_argument("Grid: points must lie in [0, 1]");
      }
      if (p <= prev) {
        throw std::invalid_argument("Grid: points must be strictly increasing");
      }
      prev = p;
    }
  }

  //! The canonical 199-point tabulation grid 0.005, 0.010, ..., 0.995.
  static Grid standard() {
    std::vector<double> pts(199);
    for (std::size_t j = 0; j < 199; ++j) {
      pts[j] = 0.005 + 0.005 * static_cast<double>(j);
    }
    return Grid(std::move(pts));
  }

  //! count equispaced points; endpoints 0 and 1 included for count >= 2.
  static Grid equispaced(std::size_t count) {
    if (count == 0) throw std::invalid_argument("Grid: count must be positive");
    if (count == 1) return Grid({0.5});
    std::vector<double> pts(count);
    for (std::size_t j = 0; j < count; ++j) {
      pts[j] = static_cast<double>(j) / static_cast<double>(count - 1);
    }
    return Grid(std::move(pts));
  }

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t j) const noexcept { return points_[j]; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.points_ == b.points_;
  }

 private:
  std::vector<double> points_;
};

//! Quantile-density estimates on a grid: the raw kernel estimate qhat, the
//! boundary mass psi, and the corrected estimate qhat_bc = qhat / psi.
struct QdEstimate {
  Grid grid;
  std::vector<double> qhat;
  std::vector<double> psi;
  std::vector<double> qhat_bc;
  Bandwidth h;
  KernelName kernel_name;
};

//! Empirical quantile: the (floor(n u) + 1)-th order statistic for u in
//! [0, 1), the sample maximum at u = 1.
inline double empirical_quantile(const SortedSample& s, double u) {
  if (u < 0.0 || u > 1.0) {
    throw std::invalid_argument("empirical_quantile: u must lie in [0, 1]");
  }
  const std::size_t n = s.size();
  if (u == 1.0) return s[n - 1];
  auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(n) * u));
  if (idx >= n) idx = n - 1;  // guard: n*u may round up to n for u < 1
  return s[idx];
}

namespace detail {

//! Spacing-weighted kernel sum over the indices i with |u - i/n| <= h/2.
//! `sorted` must be ascending with at least two entries; no validation.
inline double kqd_raw(std::span<const double> sorted, const Kernel& k,
                      double h, double u) noexcept {
  const auto n = static_cast<std::int64_t>(sorted.size());
  const double nd = static_cast<double>(n);
  const double inv_h = 1.0 / h;

  // Candidate window, widened by one index on each side so that support ties
  // are decided by the kernel itself (its support is closed).
  std::int64_t lo =
      static_cast<std::int64_t>(std::ceil((u - h / 2.0) * nd)) - 1;
  std::int64_t hi =
      static_cast<std::int64_t>(std::floor((u + h / 2.0) * nd)) + 1;
  lo = std::max<std::int64_t>(lo, 1);
  hi = std::min<std::int64_t>(hi, n - 1);

  double acc = 0.0;
  for (std::int64_t i = lo; i <= hi; ++i) {
    const double w = k.eval((u - static_cast<double>(i) / nd) * inv_h);
    if (w != 0.0) acc += w * (sorted[static_cast<std::size_t>(i)] -
                              sorted[static_cast<std::size_t>(i - 1)]);
  }
  return acc * inv_h;
}

}  // namespace detail

//! Kernel quantile-density estimate at u: the kernel-weighted sum of order
//! statistic spacings, sum_i K_h(u - i/n) (X_(i+1) - X_(i)). Only indices
//! with |u - i/n| <= h/2 contribute, so one evaluation costs O(n h).
inline double kqd(const SortedSample& s, const Kernel& k, const Bandwidth& h,
                  double u) {
  if (u < 0.0 || u > 1.0) {
    throw std::invalid_argument("kqd: u must lie in [0, 1]");
  }
  if (h.sample_size() != s.size()) {
    throw std::invalid_argument(
        "kqd: bandwidth was constructed for a different sample size");
  }
  return detail::kqd_raw(s.values(), k, h.value(), u);
}

//! Boundary-corrected estimate on a grid: qhat_bc = qhat / psi_h pointwise.
//! In the interior, where psi_h = 1, the correction is the identity.
inline QdEstimate bc_kqd(const SortedSample& s, const Kernel& k,
                         const Bandwidth& h, const Grid& grid) {
  if (h.sample_size() != s.size()) {
    throw std::invalid_argument(
        "bc_kqd: bandwidth was constructed for a different sample size");
  }
  QdEstimate est{grid, {}, {}, {}, h, k.name()};
  const std::size_t m = grid.size();
  est.qhat.resize(m);
  est.psi.resize(m);
  est.qhat_bc.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    est.qhat[j] = detail::kqd_raw(s.values(), k, h.value(), grid[j]);
    est.psi[j] = psi(k, h, grid[j]);
    est.qhat_bc[j] = est.qhat[j] / est.psi[j];
  }
  return est;
}

//! Rate-optimal default bandwidth h = c * n^(-3/8), clamped to [2/n, 1].
inline Bandwidth scaled_bandwidth(std::size_t n, double c) {
  if (n < 2) {
    throw std::invalid_argument("scaled_bandwidth: n must be at least 2");
  }
  if (!(c > 0.0)) {
    throw std::invalid_argument("scaled_bandwidth: c must be positive");
  }
  double h = c * std::pow(static_cast<double>(n), -0.375);
  h = std::min(1.0, std::max(h, 2.0 / static_cast<double>(n)));
  return Bandwidth(h, n);
}

inline Bandwidth default_bandwidth(std::size_t n) {
  return scaled_bandwidth(n, 1.0);
}

enum class BandwidthFlag { Ok, Oversmoothed, Undersmoothed };

struct BandwidthDiagnostic {
  BandwidthFlag flag = BandwidthFlag::Ok;
  std::string message;
  bool ok() const noexcept { return flag == BandwidthFlag::Ok; }
};

//! Finite-n sanity check of the undersmoothing window n^(-1/2) < h < n^(-1/3)
//! that valid bands need. Never errors; the default n^(-3/8) rate sits inside
//! the window for every n.
inline BandwidthDiagnostic check_bandwidth(const Bandwidth& h) {
  const double n = static_cast<double>(h.sample_size());
  const double over = std::pow(n, -1.0 / 3.0);
  const double under = std::pow(n, -0.5);
  if (h.value() >= over) {
    return {BandwidthFlag::Oversmoothed,
            "bandwidth " + std::to_string(h.value()) +
                " reaches the cube-root rate n^(-1/3) = " +
                std::to_string(over) +
                "; smoothing bias may dominate and bands may undercover"};
  }
  if (h.value() <= under) {
    return {BandwidthFlag::Undersmoothed,
            "bandwidth " + std::to_string(h.value()) +
                " is at or below n^(-1/2) = " + std::to_string(under) +
                "; the estimate is dominated by noise"};
  }
  return {};
}

}  // namespace qdband
