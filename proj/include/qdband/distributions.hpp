#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdband/estimator.hpp"
#include "qdband/normal.hpp"
#include "qdband/rng.hpp"

namespace qdband {

enum class DistributionName { Uniform, Linear, TruncNormal };

inline std::string to_string(DistributionName name) {
  switch (name) {
    case DistributionName::Uniform: return "uniform";
    case DistributionName::Linear: return "linear";
    case DistributionName::TruncNormal: return "truncnormal";
  }
  return "?";
}

inline DistributionName parse_distribution_name(std::string_view s) {
  if (s == "uniform") return DistributionName::Uniform;
  if (s == "linear") return DistributionName::Linear;
  if (s == "truncnormal") return DistributionName::TruncNormal;
  throw std::invalid_argument("unsupported distribution name: " +
                              std::string(s));
}

//! Reference data-generating processes on [0, 1] with closed-form quantile
//! functions:
//!   uniform      flat density,
//!   linear       density f(x) = x + 1/2,
//!   truncnormal  N(1/2, 1) truncated to [0, 1].
//! All sampling is by inverse CDF, so a single uniform stream drives every
//! distribution and common-random-number comparisons across them are exact.
class RefDistribution {
 public:
  static RefDistribution make(DistributionName name) {
    return RefDistribution(name);
  }

  DistributionName name() const noexcept { return name_; }

  //! Quantile function Q(u) = F^{-1}(u).
  double quantile(double u) const {
    if (u < 0.0 || u > 1.0) {
      throw std::invalid_argument("quantile: u must lie in [0, 1]");
    }
    switch (name_) {
      case DistributionName::Uniform:
        return u;
      case DistributionName::Linear:
        return (-1.0 + std::sqrt(1.0 + 8.0 * u)) / 2.0;
      case DistributionName::TruncNormal: {
        if (u == 0.0) return 0.0;
        if (u == 1.0) return 1.0;
        const double x = 0.5 + normal_quantile(cdf_lo_ + u * mass_);
        return std::clamp(x, 0.0, 1.0);
      }
    }
    return 0.0;
  }

  //! CDF F(x), clamped to [0, 1] outside the support.
  double cdf(double x) const noexcept {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    switch (name_) {
      case DistributionName::Uniform:
        return x;
      case DistributionName::Linear:
        return x * x / 2.0 + x / 2.0;
      case DistributionName::TruncNormal:
        return (normal_cdf(x - 0.5) - cdf_lo_) / mass_;
    }
    return 0.0;
  }

  //! Quantile density q(u) = 1 / f(Q(u)), the derivative of Q.
  double true_qd(double u) const {
    if (u < 0.0 || u > 1.0) {
      throw std::invalid_argument("true_qd: u must lie in [0, 1]");
    }
    switch (name_) {
      case DistributionName::Uniform:
        return 1.0;
      case DistributionName::Linear:
        return 2.0 / std::sqrt(1.0 + 8.0 * u);
      case DistributionName::TruncNormal:
        return mass_ / normal_pdf(quantile(u) - 0.5);
    }
    return 0.0;
  }

  //! n iid draws through the inverse CDF, returned in ascending order.
  SortedSample sample(std::size_t n, RngStream& stream) const {
    if (n < 2) {
      throw std::invalid_argument("sample: n must be at least 2");
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = quantile(stream.uniform());
    return SortedSample::from_unsorted(std::move(values));
  }

 private:
  explicit RefDistribution(DistributionName name) : name_(name) {
    if (name_ == DistributionName::TruncNormal) {
      cdf_lo_ = normal_cdf(-0.5);
      mass_ = normal_cdf(0.5) - cdf_lo_;
    }
  }

  DistributionName name_;
  double cdf_lo_ = 0.0;
  double mass_ = 1.0;
};

}  // namespace qdband
