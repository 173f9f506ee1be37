#pragma once

// Closed-form acceptance identities, Hamiltonian telescoping, per-coordinate
// drift statistics and 1-D Gaussian moments for the hard targets.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hardmc/chebyshev.hpp"
#include "hardmc/kernels.hpp"
#include "hardmc/quadrature.hpp"
#include "hardmc/targets.hpp"

namespace hardmc {

/// MALA log acceptance rewritten through gradients only:
///   -f(y) + f(x) - <x - y, grad f(x) + grad f(y)>/2
///   + (h/4) |grad f(x)|^2 - (h/4) |grad f(y)|^2
inline double mala_log_accept_general(const Target& target, const Point& x,
                                      const Point& y, double h) {
  if (!(h > 0.0)) throw std::domain_error("mala_log_accept_general: h <= 0");
  const Point gx = target.gradient(x);
  const Point gy = target.gradient(y);
  return -target.potential(y) + target.potential(x) - 0.5 * (x - y).dot(gx + gy) +
         0.25 * h * gx.squaredNorm() - 0.25 * h * gy.squaredNorm();
}

/// For f = x^T diag(lambda) x / 2 the MALA log ratio collapses to
/// (h/4) sum_i lambda_i^2 (x_i^2 - y_i^2).
inline double mala_log_accept_quadratic(const Eigen::VectorXd& lambda,
                                        const Point& x, const Point& y, double h) {
  if ((lambda.array() <= 0.0).any()) {
    throw std::domain_error("mala_log_accept_quadratic: lambda must be positive");
  }
  return 0.25 * h *
         (lambda.array().square() * (x.array().square() - y.array().square())).sum();
}

/// Expectation over g of the quadratic log ratio when
/// y_i = (1 - alpha_i) x_i + beta_i g_i:
///   (h/4) sum_i lambda_i^2 ((2 alpha_i - alpha_i^2) x_i^2 - beta_i^2).
inline double expected_quadratic_log_accept(const Eigen::VectorXd& lambda,
                                            const Point& x,
                                            const Eigen::VectorXd& alpha,
                                            const Eigen::VectorXd& beta, double h) {
  const auto a = alpha.array();
  return 0.25 * h *
         (lambda.array().square() *
          ((2.0 * a - a.square()) * x.array().square() - beta.array().square()))
             .sum();
}

/// Per-coordinate (alpha, beta) of a kernel on a quadratic target.
struct CoordinateCoefficients {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

inline CoordinateCoefficients kernel_coefficients(const KernelSpec& kernel,
                                                  const Eigen::VectorXd& lambda) {
  CoordinateCoefficients c{Eigen::VectorXd(lambda.size()), Eigen::VectorXd(lambda.size())};
  for (Index i = 0; i < lambda.size(); ++i) {
    if (kernel.kind == KernelKind::mala) {
      c.alpha[i] = kernel.h * lambda[i];
      c.beta[i] = std::sqrt(2.0 * kernel.h);
    } else {
      const auto ab = hmc_alpha_beta(kernel.equivalent_h(), lambda[i], kernel.K);
      c.alpha[i] = ab.alpha;
      c.beta[i] = ab.beta;
    }
  }
  return c;
}

/// (eta^2/8)(|grad f(x_0)|^2 - |grad f(x_K)|^2) on a quadratic.
inline double hmc_delta_H_quadratic(const Eigen::VectorXd& lambda, const Point& x0,
                                    const Point& xK, double eta) {
  return eta * eta / 8.0 *
         (lambda.array().square() * (x0.array().square() - xK.array().square())).sum();
}

/// H(x_0, v_0) - H(x_K, v_K) written as a sum over leapfrog segments:
///   sum_k [f(x_k) - f(x_{k+1}) + <grad f(x_k) + grad f(x_{k+1}), x_{k+1} - x_k>/2]
///   + (eta^2/8)(|grad f(x_0)|^2 - |grad f(x_K)|^2).
inline double hmc_telescoped_delta_H(const Target& target, const Trajectory& traj,
                                     double eta) {
  if (traj.steps.empty()) {
    throw std::invalid_argument("hmc_telescoped_delta_H: trajectory has no sub-iterates");
  }
  double total = 0.0;
  Point x_prev = traj.x0;
  Point g_prev = target.gradient(x_prev);
  double f_prev = target.potential(x_prev);
  const Point g0 = g_prev;
  for (const auto& s : traj.steps) {
    const Point g_next = target.gradient(s.x);
    const double f_next = target.potential(s.x);
    total += f_prev - f_next + 0.5 * (g_prev + g_next).dot(s.x - x_prev);
    x_prev = s.x;
    g_prev = g_next;
    f_prev = f_next;
  }
  return total + eta * eta / 8.0 * (g0.squaredNorm() - g_prev.squaredNorm());
}

/// Decomposition of the MALA log ratio with x_g = x + sqrt(2h) g,
/// y = x_g - h grad f(x):
///   stochastic     = -f(x_g) + f(x) - <x - x_g, grad f(x) + grad f(x_g)>/2
///   drift_coupling = f(x_g) - f(y) - <x - x_g, grad f(y) - grad f(x_g)>/2
///   gradient_terms = -<x_g - y, grad f(x) + grad f(y)>/2
///                    + (h/4)|grad f(x)|^2 - (h/4)|grad f(y)|^2
struct AcceptDecomposition {
  double total = 0.0;
  double stochastic = 0.0;
  double drift_coupling = 0.0;
  double gradient_terms = 0.0;
};

inline AcceptDecomposition decompose_mala_log_accept(const Target& target,
                                                     const Point& x,
                                                     const Point& g, double h) {
  const Point gx = target.gradient(x);
  const Point xg = x + std::sqrt(2.0 * h) * g;
  const Point y = xg - h * gx;
  const Point gxg = target.gradient(xg);
  const Point gy = target.gradient(y);
  const double fx = target.potential(x);
  const double fxg = target.potential(xg);
  const double fy = target.potential(y);
  AcceptDecomposition out;
  out.stochastic = -fxg + fx - 0.5 * (x - xg).dot(gx + gxg);
  out.drift_coupling = fxg - fy - 0.5 * (x - xg).dot(gy - gxg);
  out.gradient_terms = -0.5 * (xg - y).dot(gx + gy) + 0.25 * h * gx.squaredNorm() -
                       0.25 * h * gy.squaredNorm();
  out.total = mala_log_accept_general(target, x, y, h);
  return out;
}

enum class DriftKind { quadratic, cosine };

/// One coordinate's share of the stochastic term,
/// S_i = -f_i(x_g,i) + f_i(x_i) - (x_i - x_g,i)(f_i'(x_i) + f_i'(x_g,i))/2,
/// with its expectation over g_i.
struct CoordinateDrift {
  Index coordinate = 0;
  double value = 0.0;
  double expectation = 0.0;
  DriftKind kind = DriftKind::quadratic;
};

inline double coordinate_drift_value(const CoordinateSpec& s, double x, double g,
                                     double h) {
  const double xg = x + std::sqrt(2.0 * h) * g;
  return -s.value(xg) + s.value(x) - 0.5 * (x - xg) * (s.derivative(x) + s.derivative(xg));
}

/// E[cos(a + sqrt(2) g)] = cos(a) / e for g ~ N(0, 1).
inline double gaussian_cos_moment(double a) { return std::cos(a) / std::numbers::e; }

/// E[g sin(a + sqrt(2) g)] = sqrt(2) cos(a) / e for g ~ N(0, 1).
inline double gaussian_sin_g_moment(double a) {
  return std::numbers::sqrt2 * std::cos(a) / std::numbers::e;
}

/// Exact E[S_i] on a cosine coordinate with MALA step h equal to the
/// coordinate's own h: (kappa h/3)(2/e - 1) cos(x / sqrt(h)).
inline double cosine_drift_expectation(double kappa, double h, double x) {
  if (!(h > 0.0)) throw std::domain_error("cosine_drift_expectation: h <= 0");
  return kappa * h / 3.0 * (2.0 / std::numbers::e - 1.0) * std::cos(x / std::sqrt(h));
}

inline CoordinateDrift coordinate_drift(const Target& target, Index i, double x,
                                        double g, double h) {
  const auto& s = target.coordinate(i);
  CoordinateDrift out;
  out.coordinate = i;
  out.value = coordinate_drift_value(s, x, g, h);
  if (s.kind == CoordinateKind::quadratic) {
    out.kind = DriftKind::quadratic;
    out.expectation = 0.0;  // quadratic terms cancel exactly
  } else {
    out.kind = DriftKind::cosine;
    if (std::abs(s.h - h) > 1e-15 * s.h) {
      throw std::domain_error("coordinate_drift: closed-form expectation needs MALA h "
                              "equal to the coordinate's period parameter");
    }
    out.expectation = cosine_drift_expectation(s.kappa, h, x);
  }
  return out;
}

/// Left-hand side of the scalar remainder identity:
/// -f(x_g) + f(x) - (x - x_g)(f'(x) + f'(x_g))/2.
template <typename Scalar1D>
double remainder_direct(const Scalar1D& f, double x, double xg) {
  return -f.value(xg) + f.value(x) - 0.5 * (x - xg) * (f.derivative(x) + f.derivative(xg));
}

/// -2h * int_0^1 (1/2 - s) g^2 f''(x + s (x_g - x)) ds with g^2 = (x_g - x)^2 / (2h),
/// by adaptive Simpson. Equals remainder_direct for twice-differentiable f.
template <typename Scalar1D>
double second_order_remainder(const Scalar1D& f, double x, double xg, double h) {
  if (!(h > 0.0)) throw std::domain_error("second_order_remainder: h <= 0");
  if (xg == x) return 0.0;
  const double dx = xg - x;
  const double g2 = dx * dx / (2.0 * h);
  auto integrand = [&](double s) { return (0.5 - s) * f.second_derivative(x + s * dx); };
  QuadratureOptions opt;
  // The integral is O(f'' / 12); make the tolerance relative to that scale so the
  // product with -2h g^2 meets the relative target.
  opt.abs_tol = 1e-14 * std::max(1.0, std::abs(f.second_derivative(x)));
  return -2.0 * h * g2 * integrate(integrand, 0.0, 1.0, opt);
}

/// Drift coefficient c_K = sum_{j<K} [e^{-j^2} - e^{-(j+1)^2} - j e^{-j^2}
/// - (j+1) e^{-(j+1)^2}] of K-step HMC on the cosine coordinates; the expected
/// drift is -(kappa eta^2 / 6) c_K cos(sqrt(2) x / eta).
inline double hmc_cosine_drift_coeff(int K) {
  if (K < 1) throw std::domain_error("hmc_cosine_drift_coeff: K must be >= 1");
  double c = 0.0;
  for (int j = 0; j < K; ++j) {
    const double a = std::exp(-static_cast<double>(j) * j);
    const double b = std::exp(-static_cast<double>(j + 1) * (j + 1));
    c += a - b - j * a - (j + 1) * b;
  }
  if (c < 0.129) {
    throw std::logic_error("hmc_cosine_drift_coeff: coefficient below 0.129");
  }
  return c;
}

}  // namespace hardmc
