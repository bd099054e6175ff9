#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qdband/normal.hpp"

namespace qdband {

enum class KernelName { TruncatedNormal, Rectangular, Epanechnikov };

inline std::string to_string(KernelName name) {
  switch (name) {
    case KernelName::TruncatedNormal: return "truncnormal";
    case KernelName::Rectangular: return "rect";
    case KernelName::Epanechnikov: return "epanechnikov";
  }
  return "?";
}

inline KernelName parse_kernel_name(std::string_view s) {
  if (s == "truncnormal") return KernelName::TruncatedNormal;
  if (s == "rect") return KernelName::Rectangular;
  if (s == "epanechnikov") return KernelName::Epanechnikov;
  throw std::invalid_argument("unsupported kernel name: " + std::string(s));
}

//! Smoothing kernel on [-1/2, 1/2]: nonnegative, symmetric around 0, unit
//! mass, with a closed-form antiderivative and a stored L2 norm.
class Kernel {
 public:
  //! Density value K(z); zero outside [-1/2, 1/2], endpoints included in the
  //! support.
  double eval(double z) const noexcept {
    if (std::abs(z) > 0.5) return 0.0;
    switch (name_) {
      case KernelName::Rectangular:
        return 1.0;
      case KernelName::Epanechnikov:
        return 1.5 * (1.0 - 4.0 * z * z);
      case KernelName::TruncatedNormal:
        return normal_pdf(z) * inv_mass_;
    }
    return 0.0;
  }

  //! Antiderivative: cdf(z) = integral of K over (-inf, z].
  double cdf(double z) const noexcept {
    if (z <= -0.5) return 0.0;
    if (z >= 0.5) return 1.0;
    switch (name_) {
      case KernelName::Rectangular:
        return z + 0.5;
      case KernelName::Epanechnikov:
        return 0.5 + 1.5 * z - 2.0 * z * z * z;
      case KernelName::TruncatedNormal:
        return (normal_cdf(z) - cdf_lo_) * inv_mass_;
    }
    return 0.0;
  }

  //! Integral of K^2 over the support.
  double l2norm_sq() const noexcept { return l2_; }

  KernelName name() const noexcept { return name_; }

 private:
  friend Kernel make_kernel(KernelName);
  Kernel() = default;

  KernelName name_ = KernelName::Rectangular;
  double inv_mass_ = 1.0;
  double cdf_lo_ = 0.0;
  double l2_ = 1.0;
};

inline Kernel make_kernel(KernelName name) {
  Kernel k;
  k.name_ = name;
  switch (name) {
    case KernelName::Rectangular:
      k.l2_ = 1.0;
      break;
    case KernelName::Epanechnikov:
      // int of (3/2)^2 (1 - 4z^2)^2 over [-1/2, 1/2]
      k.l2_ = 1.2;
      break;
    case KernelName::TruncatedNormal: {
      const double mass = normal_cdf(0.5) - normal_cdf(-0.5);
      k.inv_mass_ = 1.0 / mass;
      k.cdf_lo_ = normal_cdf(-0.5);
      // int of (phi(z)/mass)^2 over [-1/2, 1/2] = erf(1/2) / (2 sqrt(pi) mass^2)
      k.l2_ = std::erf(0.5) /
              (2.0 * std::sqrt(std::numbers::pi) * mass * mass);
      break;
    }
  }
  return k;
}

inline Kernel make_kernel(std::string_view name) {
  return make_kernel(parse_kernel_name(name));
}

//! Bandwidth h tied to the sample size it smooths. Requires 0 < h <= 1 and
//! h >= 2/n, the one-spacing resolution limit below which the spacing-based
//! estimator is meaningless.
class Bandwidth {
 public:
  Bandwidth(double h, std::size_t n) : h_(h), n_(n) {
    if (n < 2) {
      throw std::invalid_argument("Bandwidth: sample size must be at least 2");
    }
    if (!(h > 0.0) || h > 1.0) {
      throw std::invalid_argument("Bandwidth: h must lie in (0, 1]");
    }
    if (h < 2.0 / static_cast<double>(n)) {
      throw std::invalid_argument(
          "bandwidth too small: h = " + std::to_string(h) +
          " is below 2/n = " + std::to_string(2.0 / static_cast<double>(n)));
    }
  }

  double value() const noexcept { return h_; }
  std::size_t sample_size() const noexcept { return n_; }

 private:
  double h_;
  std::size_t n_;
};

//! Scaled kernel K_h(z) = K(z/h) / h.
inline double kh(const Kernel& k, const Bandwidth& h, double z) noexcept {
  return k.eval(z / h.value()) / h.value();
}

//! Mass of the localized kernel inside [0, 1]:
//!   psi_h(u) = cdf((u - a)/h) - cdf((u - b)/h),
//! with a = max(u - h/2, 0), b = min(u + h/2, 1). Equals 1 on
//! [h/2, 1 - h/2], drops to 1/2 at the endpoints, and is symmetric around
//! u = 1/2.
inline double psi(const Kernel& k, const Bandwidth& h, double u) {
  if (u < 0.0 || u > 1.0) {
    throw std::invalid_argument("psi: u must lie in [0, 1]");
  }
  const double hv = h.value();
  const double a = std::max(u - hv / 2.0, 0.0);
  const double b = std::min(u + hv / 2.0, 1.0);
  return k.cdf((u - a) / hv) - k.cdf((u - b) / hv);
}

}  // namespace qdband
