#pragma once

// Separable target densities pi(x) ~ exp(-f(x)) with f(x) = sum_i f_i(x_i).
// Each f_i is either a quadratic lambda c^2 / 2 or the cosine-perturbed
// quadratic (kappa/3) c^2 - (kappa h / 3) cos(c / sqrt(h)), whose second
// derivative 2 kappa/3 + (kappa/3) cos(c / sqrt(h)) stays in [kappa/3, kappa].
// All targets have their minimizer at the origin and curvature in [1, kappa].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hardmc/chebyshev.hpp"
#include "hardmc/quadrature.hpp"
#include "hardmc/random.hpp"

namespace hardmc {

using Point = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a sampler or estimator would have to leave its validated regime.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CoordinateKind { quadratic, cosine };

struct CoordinateSpec {
  CoordinateKind kind = CoordinateKind::quadratic;
  double lambda = 1.0;  // quadratic curvature
  double kappa = 0.0;   // cosine: curvature base 2 kappa / 3, amplitude kappa / 3
  double h = 0.0;       // cosine: period 2 pi sqrt(h)
  double sqrt_h = 0.0;

  static CoordinateSpec quadratic(double lambda) {
    if (!(lambda > 0.0)) {
      throw std::domain_error("quadratic coordinate needs lambda > 0");
    }
    CoordinateSpec s;
    s.kind = CoordinateKind::quadratic;
    s.lambda = lambda;
    return s;
  }

  static CoordinateSpec cosine(double kappa, double h) {
    if (!(h > 0.0)) throw std::domain_error("cosine coordinate needs h > 0");
    if (!(kappa > 0.0)) {
      throw std::domain_error("cosine coordinate needs kappa > 0");
    }
    CoordinateSpec s;
    s.kind = CoordinateKind::cosine;
    s.kappa = kappa;
    s.h = h;
    s.sqrt_h = std::sqrt(h);
    return s;
  }

  double value(double c) const {
    if (kind == CoordinateKind::quadratic) return 0.5 * lambda * c * c;
    return kappa / 3.0 * c * c - kappa * h / 3.0 * std::cos(c / sqrt_h);
  }

  double derivative(double c) const {
    if (kind == CoordinateKind::quadratic) return lambda * c;
    return 2.0 * kappa / 3.0 * c + kappa * sqrt_h / 3.0 * std::sin(c / sqrt_h);
  }

  double second_derivative(double c) const {
    if (kind == CoordinateKind::quadratic) return lambda;
    return 2.0 * kappa / 3.0 + kappa / 3.0 * std::cos(c / sqrt_h);
  }

  double curvature_lo() const {
    return kind == CoordinateKind::quadratic ? lambda : kappa / 3.0;
  }
  double curvature_hi() const {
    return kind == CoordinateKind::quadratic ? lambda : kappa;
  }
};

/// A run of consecutive coordinates [begin, end) sharing one spec.
struct CoordinateBlock {
  Index begin = 0;
  Index end = 0;
  CoordinateSpec spec;
};

enum class TargetKind { hard_quadratic, hqc, resonant, cosine_hard, gaussian_iso };

inline const char* to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::hard_quadratic: return "hq";
    case TargetKind::hqc: return "hqc";
    case TargetKind::resonant: return "resonant";
    case TargetKind::cosine_hard: return "cosine";
    case TargetKind::gaussian_iso: return "gaussian_iso";
  }
  return "unknown";
}

/// Immutable separable target. Safe to share across threads.
class Target {
 public:
  Target(TargetKind kind, std::vector<CoordinateBlock> blocks)
      : kind_(kind), blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::domain_error("target needs coordinates");
    Index expected = 0;
    mu_lo_ = blocks_.front().spec.curvature_lo();
    L_hi_ = blocks_.front().spec.curvature_hi();
    for (const auto& b : blocks_) {
      if (b.begin != expected || b.end <= b.begin) {
        throw std::domain_error("target blocks must tile [0, d)");
      }
      expected = b.end;
      mu_lo_ = std::min(mu_lo_, b.spec.curvature_lo());
      L_hi_ = std::max(L_hi_, b.spec.curvature_hi());
    }
    dimension_ = expected;
  }

  TargetKind kind() const { return kind_; }
  Index dimension() const { return dimension_; }
  double curvature_lo() const { return mu_lo_; }
  double curvature_hi() const { return L_hi_; }
  bool separable() const { return true; }
  const std::vector<CoordinateBlock>& blocks() const { return blocks_; }

  const CoordinateSpec& coordinate(Index i) const {
    for (const auto& b : blocks_) {
      if (i >= b.begin && i < b.end) return b.spec;
    }
    throw std::out_of_range("coordinate index out of range");
  }

  bool is_quadratic() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](const auto& b) {
      return b.spec.kind == CoordinateKind::quadratic;
    });
  }

  /// Diagonal of the Hessian; only defined for quadratic targets.
  Eigen::VectorXd quadratic_diagonal() const {
    Eigen::VectorXd lambda(dimension_);
    for (const auto& b : blocks_) {
      if (b.spec.kind != CoordinateKind::quadratic) {
        throw std::domain_error("quadratic_diagonal: target is not quadratic");
      }
      lambda.segment(b.begin, b.end - b.begin).setConstant(b.spec.lambda);
    }
    return lambda;
  }

  double potential(const Point& x) const {
    check_dim(x);
    double total = 0.0;
    for (const auto& b : blocks_) {
      const auto& s = b.spec;
      if (s.kind == CoordinateKind::quadratic) {
        total += 0.5 * s.lambda * x.segment(b.begin, b.end - b.begin).squaredNorm();
      } else {
        double acc = 0.0;
        for (Index i = b.begin; i < b.end; ++i) acc += s.value(x[i]);
        total += acc;
      }
    }
    return total;
  }

  void gradient(const Point& x, Point& out) const {
    check_dim(x);
    out.resize(dimension_);
    for (const auto& b : blocks_) {
      const auto& s = b.spec;
      if (s.kind == CoordinateKind::quadratic) {
        out.segment(b.begin, b.end - b.begin) =
            s.lambda * x.segment(b.begin, b.end - b.begin);
      } else {
        for (Index i = b.begin; i < b.end; ++i) out[i] = s.derivative(x[i]);
      }
    }
  }

  Point gradient(const Point& x) const {
    Point g;
    gradient(x, g);
    return g;
  }

 private:
  void check_dim(const Point& x) const {
    if (x.size() != dimension_) {
      throw std::invalid_argument("point dimension " + std::to_string(x.size()) +
                                  " does not match target dimension " +
                                  std::to_string(dimension_));
    }
  }

  TargetKind kind_;
  std::vector<CoordinateBlock> blocks_;
  Index dimension_ = 0;
  double mu_lo_ = 0.0;
  double L_hi_ = 0.0;
};

/// diag(1, kappa, ..., kappa).
inline Target make_hard_quadratic(Index d, double kappa) {
  if (d < 2) throw std::domain_error("make_hard_quadratic: d must be >= 2");
  if (!(kappa >= 1.0)) {
    throw std::domain_error("make_hard_quadratic: kappa must be >= 1");
  }
  return Target(TargetKind::hard_quadratic,
                {{0, 1, CoordinateSpec::quadratic(1.0)},
                 {1, d, CoordinateSpec::quadratic(kappa)}});
}

/// diag(1, kappa/pi^2, ..., kappa/pi^2, kappa).
inline Target make_hqc(Index d, double kappa) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  if (d < 3) throw std::domain_error("make_hqc: d must be >= 3");
  if (!(kappa >= pi2)) {
    throw std::domain_error("make_hqc: kappa must be >= pi^2");
  }
  return Target(TargetKind::hqc, {{0, 1, CoordinateSpec::quadratic(1.0)},
                                  {1, d - 1, CoordinateSpec::quadratic(kappa / pi2)},
                                  {d - 1, d, CoordinateSpec::quadratic(kappa)}});
}

inline Target make_gaussian_iso(Index d) {
  if (d < 1) throw std::domain_error("make_gaussian_iso: d must be >= 1");
  return Target(TargetKind::gaussian_iso, {{0, d, CoordinateSpec::quadratic(1.0)}});
}

struct ResonantTarget {
  Target target;
  int j = 0;              // resonance index, 1 <= j <= K-1
  double lambda = 0.0;    // eigenvalue of the resonant coordinate (index 1)
};

/// diag(1, lambda, kappa, ..., kappa) where lambda is the smallest-j resonant
/// eigenvalue of K-step leapfrog with step eta lying in [1, kappa].
/// `lambda_scale` multiplies the chosen lambda (for sharpness experiments).
inline ResonantTarget make_resonant_gaussian(Index d, double kappa, double eta,
                                             int K, double lambda_scale = 1.0) {
  if (d < 2) throw std::domain_error("make_resonant_gaussian: d must be >= 2");
  if (K < 2) throw std::domain_error("make_resonant_gaussian: K must be >= 2");
  if (!(kappa >= 1.0)) {
    throw std::domain_error("make_resonant_gaussian: kappa must be >= 1");
  }
  if (!(lambda_scale > 0.0)) {
    throw std::domain_error("make_resonant_gaussian: lambda_scale must be > 0");
  }
  for (int j = 1; j <= K - 1; ++j) {
    const double lambda = resonant_lambda(eta, K, j);
    if (lambda >= 1.0 && lambda <= kappa) {
      const double scaled = lambda * lambda_scale;
      std::vector<CoordinateBlock> blocks = {
          {0, 1, CoordinateSpec::quadratic(1.0)},
          {1, 2, CoordinateSpec::quadratic(scaled)}};
      if (d > 2) blocks.push_back({2, d, CoordinateSpec::quadratic(kappa)});
      return {Target(TargetKind::resonant, std::move(blocks)), j, scaled};
    }
  }
  throw std::domain_error(
      "make_resonant_gaussian: no resonant eigenvalue in [1, kappa] for eta=" +
      std::to_string(eta) + ", K=" + std::to_string(K));
}

/// f_1(c) = c^2/2, f_i(c) = (kappa/3) c^2 - (kappa h/3) cos(c/sqrt(h)).
/// The HMC form parameterized by eta is the same target with h = eta^2 / 2.
inline Target make_cosine_hard(Index d, double kappa, double h) {
  if (d < 2) throw std::domain_error("make_cosine_hard: d must be >= 2");
  if (!(kappa >= 3.0)) {
    throw std::domain_error("make_cosine_hard: kappa must be >= 3");
  }
  if (!(h > 0.0)) throw std::domain_error("make_cosine_hard: h must be > 0");
  return Target(TargetKind::cosine_hard,
                {{0, 1, CoordinateSpec::quadratic(1.0)},
                 {1, d, CoordinateSpec::cosine(kappa, h)}});
}

// ---------------------------------------------------------------------------
// Exact stationary sampling

inline constexpr std::uint64_t kMaxCoordinateRetries = 1'000'000;

/// Largest cosine amplitude kappa h / 3 for which the Gaussian-envelope
/// rejection sampler is used (worst-case acceptance exp(-20)).
inline constexpr double kMaxCosineAmplitude = 10.0;

inline void check_cosine_sampler_guard(const CoordinateSpec& s) {
  const double amplitude = s.kappa * s.h / 3.0;
  if (amplitude > kMaxCosineAmplitude) {
    throw GuardError("cosine rejection sampler: amplitude kappa*h/3 = " +
                     std::to_string(amplitude) +
                     " gives envelope acceptance below exp(-20)");
  }
}

/// One exact draw from the normalized 1-D marginal exp(-f_i).
inline double sample_coordinate(const CoordinateSpec& s, DrawSequence& draws) {
  if (s.kind == CoordinateKind::quadratic) {
    return draws.normal() / std::sqrt(s.lambda);
  }
  check_cosine_sampler_guard(s);
  const double envelope_sd = std::sqrt(1.5 / s.kappa);
  const double amplitude = s.kappa * s.h / 3.0;
  for (std::uint64_t attempt = 0; attempt < kMaxCoordinateRetries; ++attempt) {
    const double c = envelope_sd * draws.normal();
    const double u = draws.uniform();
    if (std::log(u) < amplitude * (std::cos(c / s.sqrt_h) - 1.0)) return c;
  }
  throw GuardError("cosine rejection sampler exceeded retry cap");
}

/// Exact draw from the coordinate marginal conditioned on [lo, hi].
inline double sample_coordinate_in(const CoordinateSpec& s, double lo, double hi,
                                   DrawSequence& draws) {
  for (std::uint64_t attempt = 0; attempt < kMaxCoordinateRetries; ++attempt) {
    const double c = sample_coordinate(s, draws);
    if (c >= lo && c <= hi) return c;
  }
  throw GuardError("conditional coordinate sampler exceeded retry cap");
}

inline void sample_stationary_into(const Target& target, DrawSequence& draws,
                                   Point& out) {
  out.resize(target.dimension());
  for (const auto& b : target.blocks()) {
    for (Index i = b.begin; i < b.end; ++i) out[i] = sample_coordinate(b.spec, draws);
  }
}

/// n i.i.d. exact draws; draw k uses the (k, stationary) address of `rng`.
inline std::vector<Point> exact_sample_stationary(const Target& target,
                                                  std::size_t n,
                                                  const RandomStream& rng) {
  for (const auto& b : target.blocks()) {
    if (b.spec.kind == CoordinateKind::cosine) check_cosine_sampler_guard(b.spec);
  }
  std::vector<Point> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto draws = rng.draws(k, DrawKind::stationary);
    sample_stationary_into(target, draws, out[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1-D marginal masses

namespace detail {

// Unnormalized cosine marginal density exp(-kappa c^2/3 + (kappa h/3)(cos - 1)).
inline double cosine_density(const CoordinateSpec& s, double c) {
  return std::exp(-s.kappa / 3.0 * c * c +
                  s.kappa * s.h / 3.0 * (std::cos(c / s.sqrt_h) - 1.0));
}

inline double cosine_support_radius(const CoordinateSpec& s) {
  return 10.0 * std::sqrt(3.0 / s.kappa);
}

// Integral of the unnormalized cosine density over [a, b], split at the
// density's local minima c = (2k+1) pi sqrt(h) so that every piece is a
// single smooth bump.
inline double cosine_mass(const CoordinateSpec& s, double a, double b) {
  const double radius = cosine_support_radius(s);
  a = std::max(a, -radius);
  b = std::min(b, radius);
  if (!(b > a)) return 0.0;
  const double period = 2.0 * std::numbers::pi * s.sqrt_h;
  auto density = [&s](double c) { return cosine_density(s, c); };
  const double pieces = (b - a) / period;
  if (pieces > 200000.0) return integrate(density, a, b);
  const double first = std::ceil((a / s.sqrt_h / std::numbers::pi - 1.0) / 2.0);
  double total = 0.0;
  double lo = a;
  for (double k = first;; k += 1.0) {
    const double edge = (2.0 * k + 1.0) * std::numbers::pi * s.sqrt_h;
    const double hi = std::min(edge, b);
    if (hi > lo) total += integrate(density, lo, hi);
    lo = std::max(lo, hi);
    if (hi >= b) break;
  }
  return total;
}

}  // namespace detail

/// Probability that the exact 1-D marginal of `s` lies in [a, b].
inline double marginal_mass(const CoordinateSpec& s, double a, double b) {
  if (!(b > a)) return 0.0;
  if (s.kind == CoordinateKind::quadratic) {
    const double scale = std::sqrt(0.5 * s.lambda);
    return 0.5 * (std::erfc(-b * scale) - std::erfc(-a * scale));
  }
  const double radius = detail::cosine_support_radius(s);
  const double total = detail::cosine_mass(s, -radius, radius);
  return detail::cosine_mass(s, a, b) / total;
}

/// Expectation of phi(c) under the normalized 1-D cosine marginal (quadrature).
template <typename F>
double cosine_marginal_expectation(const CoordinateSpec& s, F&& phi) {
  const double radius = detail::cosine_support_radius(s);
  const double total = detail::cosine_mass(s, -radius, radius);
  auto weighted = [&](double c) { return phi(c) * detail::cosine_density(s, c); };
  const double period = 2.0 * std::numbers::pi * s.sqrt_h;
  double acc = 0.0;
  if (2.0 * radius / period > 200000.0) {
    acc = integrate(weighted, -radius, radius);
  } else {
    double lo = -radius;
    const double first =
        std::ceil((-radius / s.sqrt_h / std::numbers::pi - 1.0) / 2.0);
    for (double k = first;; k += 1.0) {
      const double hi =
          std::min((2.0 * k + 1.0) * std::numbers::pi * s.sqrt_h, radius);
      if (hi > lo) acc += integrate(weighted, lo, hi);
      lo = std::max(lo, hi);
      if (hi >= radius) break;
    }
  }
  return acc / total;
}

}  // namespace hardmc
