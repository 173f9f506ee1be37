#pragma once

// Polynomial closed form of K-step leapfrog on a scalar quadratic
// f(c) = lambda c^2 / 2. With z = eta^2 lambda the leapfrog map is
//
//   x_K = p_K(z) x_0 + eta q_K(z) v_0,
//   p_K(z) = sum_j D_{j,K} z^j = T_K(1 - z/2),
//   q_K(z) = sum_j E_{j,K} z^j = U_{K-1}(1 - z/2),
//
// with D_{j,k} = (-1)^j k/(k+j) binom(k+j, 2j) and
//      E_{j,k} = (-1)^j binom(k+j, 2j+1).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardmc {

inline constexpr int kMaxLeapfrogSteps = 64;
inline constexpr int kMaxExactCoefficientSteps = 20;

struct LeapfrogCoefficients {
  int K = 0;
  std::vector<double> D;  // D_{0..K, K}
  std::vector<double> E;  // E_{0..K-1, K}
};

/// Dimensionless contraction and length-scale noise coefficients of one
/// K-step HMC (or MALA, K = 1) move on a quadratic coordinate:
/// y = (1 - alpha) x + beta g.
struct StepCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
};

namespace detail {

inline std::uint64_t binomial_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t out = 1;
  for (int i = 1; i <= k; ++i) {
    out = out * static_cast<std::uint64_t>(n - k + i) /
          static_cast<std::uint64_t>(i);
  }
  return out;
}

inline LeapfrogCoefficients exact_coeffs(int K) {
  LeapfrogCoefficients c;
  c.K = K;
  c.D.resize(K + 1);
  c.E.resize(K);
  for (int j = 0; j <= K; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    const std::uint64_t num =
        static_cast<std::uint64_t>(K) * binomial_exact(K + j, 2 * j);
    c.D[j] = sign * static_cast<double>(num) / static_cast<double>(K + j);
  }
  for (int j = 0; j < K; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    c.E[j] = sign * static_cast<double>(binomial_exact(K + j, 2 * j + 1));
  }
  return c;
}

// D_{j,k+1} = 2 D_{j,k} - D_{j-1,k} - D_{j,k-1}; same recurrence for E.
inline std::vector<LeapfrogCoefficients> build_coefficient_table() {
  std::vector<LeapfrogCoefficients> table(kMaxLeapfrogSteps + 1);
  table[0] = {0, {1.0}, {}};
  for (int K = 1; K <= kMaxExactCoefficientSteps; ++K) {
    table[K] = exact_coeffs(K);
  }
  for (int K = kMaxExactCoefficientSteps + 1; K <= kMaxLeapfrogSteps; ++K) {
    const auto& prev = table[K - 1];
    const auto& prev2 = table[K - 2];
    auto at = [](const std::vector<double>& v, int j) {
      return (j >= 0 && j < static_cast<int>(v.size())) ? v[j] : 0.0;
    };
    LeapfrogCoefficients c;
    c.K = K;
    c.D.resize(K + 1);
    c.E.resize(K);
    for (int j = 0; j <= K; ++j) {
      c.D[j] = 2.0 * at(prev.D, j) - at(prev.D, j - 1) - at(prev2.D, j);
    }
    for (int j = 0; j < K; ++j) {
      c.E[j] = 2.0 * at(prev.E, j) - at(prev.E, j - 1) - at(prev2.E, j);
    }
    table[K] = std::move(c);
  }
  return table;
}

inline const std::vector<LeapfrogCoefficients>& coefficient_table() {
  static const std::vector<LeapfrogCoefficients> table =
      build_coefficient_table();
  return table;
}

inline void check_steps(int K) {
  if (K < 1 || K > kMaxLeapfrogSteps) {
    throw std::domain_error("leapfrog step count K=" + std::to_string(K) +
                            " outside [1, " +
                            std::to_string(kMaxLeapfrogSteps) + "]");
  }
}

}  // namespace detail

/// Closed-form coefficients D_{j,K}, E_{j,K}. Exact integer binomials for
/// K <= 20, floating recurrence up to K = 64.
inline LeapfrogCoefficients leapfrog_coeffs(int K) {
  detail::check_steps(K);
  return detail::coefficient_table()[K];
}

/// p_K(z) by the three-term recurrence.
inline double eval_p(int K, double z) {
  if (K < 0) throw std::domain_error("eval_p: K must be nonnegative");
  if (K == 0) return 1.0;
  const double two_w = 2.0 - z;
  double prev = 1.0;
  double cur = 1.0 - 0.5 * z;
  for (int k = 1; k < K; ++k) {
    const double next = two_w * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// q_K(z) by the three-term recurrence (q_0 = 0, q_1 = 1).
inline double eval_q(int K, double z) {
  if (K < 0) throw std::domain_error("eval_q: K must be nonnegative");
  if (K == 0) return 0.0;
  const double two_w = 2.0 - z;
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 1; k < K; ++k) {
    const double next = two_w * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace detail {

// Angle theta = arccos(w) for |w| <= 1, computed from the half-angle form so
// it keeps full relative accuracy near w = +-1.
inline double accurate_arccos(double w) {
  if (w >= 0.0) return 2.0 * std::asin(std::sqrt(0.5 * (1.0 - w)));
  return std::numbers::pi - 2.0 * std::asin(std::sqrt(0.5 * (1.0 + w)));
}

}  // namespace detail

/// Chebyshev polynomial of the first kind, trigonometric/hyperbolic form.
inline double chebyshev_T(int k, double w) {
  if (k < 0) throw std::domain_error("chebyshev_T: k must be nonnegative");
  if (std::abs(w) <= 1.0) {
    return std::cos(k * detail::accurate_arccos(w));
  }
  const double t = std::acosh(std::abs(w));
  const double sign = (w < 0.0 && k % 2 == 1) ? -1.0 : 1.0;
  return sign * std::cosh(k * t);
}

/// Chebyshev polynomial of the second kind, U_k(w). U_{-1} is taken as 0.
inline double chebyshev_U(int k, double w) {
  if (k < -1) throw std::domain_error("chebyshev_U: k must be >= -1");
  if (k == -1) return 0.0;
  const double sign = (w < 0.0 && k % 2 == 1) ? -1.0 : 1.0;
  if (std::abs(w) == 1.0) return sign * (k + 1);
  if (std::abs(w) < 1.0) {
    const double theta = detail::accurate_arccos(w);
    return std::sin((k + 1) * theta) / std::sin(theta);
  }
  const double t = std::acosh(std::abs(w));
  return sign * std::sinh((k + 1) * t) / std::sinh(t);
}

/// (alpha, beta) for K-step HMC with h = eta^2 / 2 on eigenvalue lambda.
/// Uses the coefficient sums (which decay geometrically) when
/// 2 h lambda K^2 <= 1 and the recurrence otherwise.
inline StepCoefficients hmc_alpha_beta(double h, double lambda, int K) {
  if (!(h > 0.0) || !(lambda > 0.0)) {
    throw std::domain_error("hmc_alpha_beta: h and lambda must be positive");
  }
  detail::check_steps(K);
  const double z = 2.0 * h * lambda;
  StepCoefficients out;
  if (z * K * K <= 1.0) {
    const auto& c = detail::coefficient_table()[K];
    double alpha = 0.0;
    double zj = z;
    for (int j = 1; j <= K; ++j, zj *= z) alpha -= c.D[j] * zj;
    double qsum = 0.0;
    zj = 1.0;
    for (int j = 0; j < K; ++j, zj *= z) qsum += c.E[j] * zj;
    out.alpha = alpha;
    out.beta = std::sqrt(2.0 * h) * qsum;

    const double a_top = h * lambda * K * K;
    const double b_top = std::sqrt(2.0 * h) * K;
    const double slack = 1e-12;
    if (out.alpha < 0.8 * a_top * (1.0 - slack) ||
        out.alpha > a_top * (1.0 + slack) ||
        out.beta < 0.8 * b_top * (1.0 - slack) ||
        out.beta > b_top * (1.0 + slack)) {
      throw std::logic_error(
          "hmc_alpha_beta: small-step bracket violated (numerical defect)");
    }
  } else {
    out.alpha = 1.0 - eval_p(K, z);
    out.beta = std::sqrt(2.0 * h) * eval_q(K, z);
  }
  return out;
}

/// Eigenvalue at which K-step leapfrog with step eta returns +-identity:
/// lambda = 2 (1 - cos(j pi / K)) / eta^2, for 1 <= j <= K - 1.
inline double resonant_lambda(double eta, int K, int j) {
  if (!(eta > 0.0)) throw std::domain_error("resonant_lambda: eta <= 0");
  if (K < 2 || j < 1 || j > K - 1) {
    throw std::domain_error("resonant_lambda: need 1 <= j <= K-1, got j=" +
                            std::to_string(j) + ", K=" + std::to_string(K));
  }
  const double s = std::sin(j * std::numbers::pi / (2.0 * K));
  return 4.0 * s * s / (eta * eta);
}

/// Final position of K-step leapfrog on f(c) = lambda c^2 / 2.
inline double closed_form_hmc_map(double lambda, double eta, int K, double x0,
                                  double v0) {
  const double z = eta * eta * lambda;
  return eval_p(K, z) * x0 + eta * eval_q(K, z) * v0;
}

}  // namespace hardmc
