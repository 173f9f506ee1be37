#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

namespace hardmc {

/// Two-sided confidence level used for every binomial interval.
inline constexpr double kConfidenceAlpha = 1e-3;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact Clopper-Pearson interval for `hits` successes in `n` trials.
inline Interval clopper_pearson(std::uint64_t hits, std::uint64_t n,
                                double alpha = kConfidenceAlpha) {
  if (hits > n) throw std::invalid_argument("clopper_pearson: hits > n");
  if (n == 0) return {0.0, 1.0};
  const auto k = static_cast<double>(hits);
  const auto nn = static_cast<double>(n);
  Interval out;
  out.lo = hits == 0 ? 0.0
                     : boost::math::ibeta_inv(k, nn - k + 1.0, alpha / 2.0);
  out.hi = hits == n
               ? 1.0
               : boost::math::ibeta_inv(k + 1.0, nn - k, 1.0 - alpha / 2.0);
  return out;
}

/// Welford running mean / variance with associative merge.
class RunningMoments {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningMoments& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const auto na = static_cast<double>(n_);
    const auto nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    n_ += other.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const {
    return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
  }
  double standard_error() const {
    return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace hardmc
