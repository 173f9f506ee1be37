#pragma once

// Suite of exact identities checked numerically over fixed-seed fuzzed
// inputs. Each row reports the worst error seen and the tolerance it is held
// to; errors are relative to the magnitude of the largest term involved
// unless the row says otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hardmc/analysis.hpp"
#include "hardmc/chebyshev.hpp"
#include "hardmc/kernels.hpp"
#include "hardmc/random.hpp"
#include "hardmc/targets.hpp"

namespace hardmc {

struct IdentityRow {
  std::string name;
  std::uint64_t cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct IdentityOptions {
  int k_max = kMaxLeapfrogSteps;
  std::uint64_t seed = 0;
  std::uint64_t fuzz_cases = 1000;
  bool flip_q_sign = false;  // fault injection for the harness
};

/// Nodes and weights of n-point Gauss-Hermite quadrature for E[phi(g)],
/// g ~ N(0, 1), via the Golub-Welsch eigenproblem.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <typename F>
  double expectation(F&& phi) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * phi(nodes[i]);
    return acc;
  }
};

inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::domain_error("gauss_hermite: n must be >= 1");
  // Probabilists' Hermite recurrence: off-diagonal sqrt(k).
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    J(k, k - 1) = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = J(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()[i];
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

namespace detail {

class RowBuilder {
 public:
  RowBuilder(std::string name, double tolerance) {
    row_.name = std::move(name);
    row_.tolerance = tolerance;
  }
  void add(double error) {
    ++row_.cases;
    if (!(error <= row_.max_error)) row_.max_error = std::isnan(error) ? INFINITY : error;
  }
  void add(double a, double b, double scale) {
    add(std::abs(a - b) / std::max(scale, std::numeric_limits<double>::min()));
  }
  IdentityRow finish() {
    row_.passed = row_.cases > 0 && row_.max_error <= row_.tolerance;
    return row_;
  }

 private:
  IdentityRow row_;
};

inline double max_abs(std::initializer_list<double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

inline Target scalar_quadratic(double lambda) {
  return Target(TargetKind::gaussian_iso, {{0, 1, CoordinateSpec::quadratic(lambda)}});
}

inline double log_uniform(DrawSequence& d, double lo, double hi) {
  return lo * std::exp(std::log(hi / lo) * d.uniform());
}

inline int uniform_int(DrawSequence& d, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(d.next_bits() % span);
}

inline Point normal_point(DrawSequence& d, Index n, double scale = 1.0) {
  Point x(n);
  d.fill_normal({x.data(), static_cast<std::size_t>(n)});
  return scale * x;
}

/// A small random separable target: hq, hqc or cosine with modest parameters.
inline Target random_target(DrawSequence& d, bool cosine) {
  const Index dim = uniform_int(d, 3, 12);
  const double kappa = log_uniform(d, 10.0, 1000.0);
  if (cosine) return make_cosine_hard(dim, kappa, log_uniform(d, 1e-4, 1e-1) / kappa);
  return uniform_int(d, 0, 1) == 0 ? make_hard_quadratic(dim, kappa) : make_hqc(dim, kappa);
}

/// Stationary-scale random point.
inline Point random_state(const Target& t, DrawSequence& d) {
  Point x;
  sample_stationary_into(t, d, x);
  return x * log_uniform(d, 0.3, 3.0);
}

inline double sum_abs(const Point& a) { return a.cwiseAbs().sum(); }

}  // namespace detail

/// Runs every identity check. Rows for Chebyshev step counts are restricted
/// to K <= options.k_max.
inline std::vector<IdentityRow> verify_identities(const IdentityOptions& options = {}) {
  using detail::RowBuilder;
  const int k_max = std::clamp(options.k_max, 1, kMaxLeapfrogSteps);
  const RandomStream rng(options.seed, 0);
  const std::uint64_t n = options.fuzz_cases;
  std::uint64_t stream_id = 0;
  auto next_draws = [&] { return rng.draws(stream_id++, DrawKind::witness); };
  auto q_eval = [&](int K, double z) {
    return options.flip_q_sign ? -eval_q(K, z) : eval_q(K, z);
  };

  std::vector<IdentityRow> rows;

  // Recurrence versus trigonometric/hyperbolic Chebyshev forms on z in [0, 6].
  constexpr int kGrid = 1000;
  for (int K : {1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64}) {
    if (K > k_max) continue;
    RowBuilder p_row("chebyshev_p_vs_T_K" + std::to_string(K), 1e-8);
    RowBuilder q_row("chebyshev_q_vs_U_K" + std::to_string(K), 1e-8);
    for (int i = 0; i < kGrid; ++i) {
      const double z = 6.0 * i / (kGrid - 1);
      const double w = 1.0 - 0.5 * z;
      const double t = chebyshev_T(K, w);
      const double u = chebyshev_U(K - 1, w);
      p_row.add(eval_p(K, z), t, std::max(1.0, std::abs(t)));
      q_row.add(q_eval(K, z), u, std::max(1.0, std::abs(u)));
    }
    rows.push_back(p_row.finish());
    rows.push_back(q_row.finish());
  }

  {
    // Explicit coefficient sums agree with the recurrence where the sums are
    // well conditioned (z K^2 <= 1).
    RowBuilder row("coefficient_sum_vs_recurrence", 1e-12);
    for (int K = 1; K <= k_max; ++K) {
      const auto c = leapfrog_coeffs(K);
      for (int i = 0; i <= 20; ++i) {
        const double z = static_cast<double>(i) / (20.0 * K * K);
        double p = 0.0, q = 0.0, zj = 1.0;
        for (int j = 0; j <= K; ++j, zj *= z) {
          p += c.D[j] * zj;
          if (j < K) q += c.E[j] * zj;
        }
        row.add(p, eval_p(K, z), std::max(1.0, std::abs(p)));
        row.add(q, q_eval(K, z), std::max(1.0, std::abs(q)));
      }
    }
    rows.push_back(row.finish());
  }

  {
    // Coefficients recovered by interpolating simulated scalar leapfrog
    // through K+1 eigenvalues reproduce D_{j,K} and E_{j,K}.
    RowBuilder row("coefficient_fit_vs_closed_form", 1e-8);
    for (int K = 1; K <= std::min(12, k_max); ++K) {
      const int m = K + 1;
      Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> V(m, m);
      Eigen::Matrix<long double, Eigen::Dynamic, 1> px(m), qx(m);
      for (int i = 0; i < m; ++i) {
        const double z = 2.0 - 2.0 * std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * m));
        const Target t = detail::scalar_quadratic(z);  // eta = 1 so eta^2 lambda = z
        const Point one = Point::Constant(1, 1.0);
        const Point zero = Point::Zero(1);
        px[i] = leapfrog_trajectory(t, one, zero, 1.0, K, false).xK[0];
        qx[i] = leapfrog_trajectory(t, zero, one, 1.0, K, false).xK[0];
        long double zj = 1.0L;
        for (int j = 0; j < m; ++j, zj *= z) V(i, j) = zj;
      }
      const auto qr = V.colPivHouseholderQr();
      const Eigen::Matrix<long double, Eigen::Dynamic, 1> dfit = qr.solve(px);
      const Eigen::Matrix<long double, Eigen::Dynamic, 1> efit = qr.solve(qx);
      const auto c = leapfrog_coeffs(K);
      const double dscale = Eigen::Map<const Eigen::VectorXd>(c.D.data(), m).cwiseAbs().maxCoeff();
      const double escale = Eigen::Map<const Eigen::VectorXd>(c.E.data(), K).cwiseAbs().maxCoeff();
      for (int j = 0; j <= K; ++j) row.add(static_cast<double>(dfit[j]), c.D[j], dscale);
      for (int j = 0; j < K; ++j) row.add(static_cast<double>(efit[j]), c.E[j], escale);
      row.add(std::abs(static_cast<double>(efit[K])) / escale);  // degree K-1 exactly
    }
    rows.push_back(row.finish());
  }

  {
    // At z = 2(1 - cos(j pi / K)): |p_K| = 1 and q_K = 0.
    RowBuilder row("resonance_p_unit_q_zero", 1e-9);
    for (int K = 2; K <= std::min(16, k_max); ++K) {
      for (int j = 1; j < K; ++j) {
        const double z = resonant_lambda(1.0, K, j);
        row.add(std::abs(std::abs(eval_p(K, z)) - 1.0));
        row.add(std::abs(q_eval(K, z)) / K);
      }
    }
    rows.push_back(row.finish());
  }

  {
    RowBuilder row("alpha_beta_small_step_vs_trigonometric", 1e-10);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n; ++c) {
      const int K = detail::uniform_int(d, 1, k_max);
      const double lambda = detail::log_uniform(d, 1.0, 1000.0);
      const double h = detail::log_uniform(d, 1e-8, 1.0) / (2.0 * lambda * K * K);
      const auto ab = hmc_alpha_beta(h, lambda, K);
      // 1 - T_K(cos theta) = 2 sin^2(K theta / 2), U_{K-1}(cos theta) = sin(K theta) / sin(theta)
      // with theta / 2 = asin(sqrt(z) / 2): no cancellation for small z.
      const double half_theta = std::asin(0.5 * std::sqrt(2.0 * h * lambda));
      const double s = std::sin(K * half_theta);
      const double alpha = 2.0 * s * s;
      const double q = std::sin(2.0 * K * half_theta) / std::sin(2.0 * half_theta);
      row.add(ab.alpha, alpha, std::abs(alpha));
      row.add(ab.beta, std::sqrt(2.0 * h) * q, std::sqrt(2.0 * h) * std::abs(q));
    }
    rows.push_back(row.finish());
  }

  {
    // Simulated leapfrog on a scalar quadratic equals the polynomial map.
    RowBuilder row("leapfrog_vs_polynomial_map", 1e-9);
    auto d = next_draws();
    const int k_cap = std::min(32, k_max);
    for (std::uint64_t c = 0; c < n; ++c) {
      const int K = detail::uniform_int(d, 1, k_cap);
      const double lambda = detail::log_uniform(d, 1.0, 100.0);
      const double z = 4.0 * d.uniform();
      const double eta = std::sqrt(z / lambda);
      const double x0 = d.normal();
      const double v0 = d.normal();
      const Target t = detail::scalar_quadratic(lambda);
      const double sim = leapfrog_trajectory(t, Point::Constant(1, x0), Point::Constant(1, v0),
                                             eta, K, false)
                             .xK[0];
      const double p = eval_p(K, z);
      const double q = q_eval(K, z);
      row.add(sim, p * x0 + eta * q * v0,
              std::abs(p * x0) + std::abs(eta * q * v0) + std::abs(sim));
    }
    rows.push_back(row.finish());
  }

  {
    // x_k = x_0 + eta k v_0 - (eta^2 k / 2) grad f(x_0)
    //       - eta^2 sum_{j=1}^{k-1} (k - j) grad f(x_j), on quadratic and cosine targets.
    RowBuilder row("leapfrog_iterate_expansion", 1e-9);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n / 10; ++c) {
      const Target t = detail::random_target(d, c % 2 == 1);
      const int K = detail::uniform_int(d, 1, std::min(16, k_max));
      const double eta = detail::log_uniform(d, 0.05, 1.0) / std::sqrt(t.curvature_hi());
      const Point x0 = detail::random_state(t, d);
      const Point v0 = detail::normal_point(d, t.dimension());
      const auto traj = leapfrog_trajectory(t, x0, v0, eta, K, true);
      std::vector<Point> grads{t.gradient(x0)};
      for (const auto& s : traj.steps) grads.push_back(t.gradient(s.x));
      for (int k = 1; k <= K; ++k) {
        Point pred = x0 + eta * k * v0 - 0.5 * eta * eta * k * grads[0];
        double scale = detail::sum_abs(x0) + eta * k * detail::sum_abs(v0) +
                       0.5 * eta * eta * k * detail::sum_abs(grads[0]);
        for (int j = 1; j < k; ++j) {
          pred -= eta * eta * (k - j) * grads[j];
          scale += eta * eta * (k - j) * detail::sum_abs(grads[j]);
        }
        row.add((traj.steps[k - 1].x - pred).cwiseAbs().sum() / scale);
      }
    }
    rows.push_back(row.finish());
  }

  {
    RowBuilder row("leapfrog_reversibility", 1e-9);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n / 10; ++c) {
      const Target t = detail::random_target(d, c % 2 == 1);
      const int K = detail::uniform_int(d, 1, std::min(32, k_max));
      const double eta = detail::log_uniform(d, 0.05, 1.0) / std::sqrt(t.curvature_hi());
      const Point x0 = detail::random_state(t, d);
      const Point v0 = detail::normal_point(d, t.dimension());
      const auto fwd = leapfrog_trajectory(t, x0, v0, eta, K, false);
      const auto back = leapfrog_trajectory(t, fwd.xK, -fwd.vK, eta, K, false);
      const double scale = x0.cwiseAbs().maxCoeff() + eta * K * v0.cwiseAbs().maxCoeff();
      row.add((back.xK - x0).cwiseAbs().maxCoeff() / scale);
    }
    rows.push_back(row.finish());
  }

  auto mala_rows = [&](bool cosine) {
    const std::string suffix = cosine ? "_cosine" : "_quadratic";
    RowBuilder general("mala_gradient_form_vs_direct" + suffix, 1e-9);
    RowBuilder split("mala_three_term_split" + suffix, 1e-9);
    RowBuilder separable("mala_gradient_form_separable" + suffix, 1e-9);
    RowBuilder quad("mala_quadratic_closed_form", 1e-9);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n; ++c) {
      const Target t = detail::random_target(d, cosine);
      const double h = detail::log_uniform(d, 1e-4, 1.0) / t.curvature_hi();
      const Point x = detail::random_state(t, d);
      const Point g = detail::normal_point(d, t.dimension());
      const Point gx = t.gradient(x);
      const Point y = x - h * gx + std::sqrt(2.0 * h) * g;
      const Point gy = t.gradient(y);
      const double direct = mala_log_ratio(t, x, y, h);
      const double form = mala_log_accept_general(t, x, y, h);
      const double scale = detail::max_abs({t.potential(x), t.potential(y),
                                            0.5 * (x - y).dot(gx + gy),
                                            0.25 * h * gx.squaredNorm(),
                                            0.25 * h * gy.squaredNorm(), direct});
      general.add(form, direct, scale);

      const auto parts = decompose_mala_log_accept(t, x, g, h);
      split.add(parts.stochastic + parts.drift_coupling + parts.gradient_terms, parts.total,
                detail::max_abs({parts.stochastic, parts.drift_coupling, parts.gradient_terms,
                                 scale}));

      double per_coord = 0.0;
      for (Index i = 0; i < t.dimension(); ++i) {
        const auto& s = t.coordinate(i);
        per_coord += -s.value(y[i]) + s.value(x[i]) -
                     0.5 * (x[i] - y[i]) * (s.derivative(x[i]) + s.derivative(y[i])) +
                     0.25 * h * s.derivative(x[i]) * s.derivative(x[i]) -
                     0.25 * h * s.derivative(y[i]) * s.derivative(y[i]);
      }
      separable.add(per_coord, form, scale);

      if (!cosine) {
        const Eigen::VectorXd lambda = t.quadratic_diagonal();
        quad.add(mala_log_accept_quadratic(lambda, x, y, h), direct,
                 detail::max_abs({0.25 * h * (lambda.array().square() * x.array().square()).sum(),
                                  0.25 * h * (lambda.array().square() * y.array().square()).sum(),
                                  scale}));
      }
    }
    rows.push_back(general.finish());
    rows.push_back(split.finish());
    rows.push_back(separable.finish());
    if (!cosine) rows.push_back(quad.finish());
  };
  mala_rows(false);
  mala_rows(true);

  auto hmc_rows = [&](bool cosine) {
    const std::string suffix = cosine ? "_cosine" : "_quadratic";
    RowBuilder tele("hmc_telescoped_delta_H" + suffix, 1e-9);
    RowBuilder quad("hmc_quadratic_delta_H", 1e-9);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n; ++c) {
      const Target t = detail::random_target(d, cosine);
      const int K = detail::uniform_int(d, 1, std::min(16, k_max));
      const double eta = detail::log_uniform(d, 0.01, 1.0) / std::sqrt(t.curvature_hi());
      const Point x0 = detail::random_state(t, d);
      const Point v0 = detail::normal_point(d, t.dimension());
      const auto rec = hmc_step_with(t, x0, eta, K, v0, 0.5, true);
      Trajectory traj;
      traj.x0 = x0;
      traj.v0 = v0;
      traj.steps = rec.subiterates;
      traj.xK = rec.proposal;
      const double tele_value = hmc_telescoped_delta_H(t, traj, eta);
      const Point g0 = t.gradient(x0);
      const Point gK = t.gradient(rec.proposal);
      const double scale = detail::max_abs({t.potential(x0), t.potential(rec.proposal),
                                            0.5 * v0.squaredNorm(),
                                            eta * eta / 8.0 * g0.squaredNorm(),
                                            eta * eta / 8.0 * gK.squaredNorm()});
      tele.add(tele_value, rec.log_accept, scale);
      if (!cosine) {
        quad.add(hmc_delta_H_quadratic(t.quadratic_diagonal(), x0, rec.proposal, eta),
                 rec.log_accept, scale);
      }
    }
    rows.push_back(tele.finish());
    if (!cosine) rows.push_back(quad.finish());
  };
  hmc_rows(false);
  hmc_rows(true);

  {
    // One-step HMC with eta = sqrt(2h) and MALA with h share noise and outcome.
    RowBuilder row("hmc_one_step_equals_mala", 1e-12);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n; ++c) {
      const Target t = detail::random_target(d, c % 2 == 1);
      const double h = detail::log_uniform(d, 1e-4, 1.0) / t.curvature_hi();
      const Point x = detail::random_state(t, d);
      const RandomStream chain(options.seed, c + 1);
      const auto m = mala_step(t, x, h, chain, 0);
      const auto hm = hmc_step(t, x, std::sqrt(2.0 * h), 1, chain, 0);
      const double scale = x.cwiseAbs().maxCoeff() + std::sqrt(2.0 * h) * m.noise.cwiseAbs().maxCoeff();
      row.add((m.proposal - hm.proposal).cwiseAbs().maxCoeff() / scale);
      row.add(m.accepted == hm.accepted ? 0.0 : 1.0);
    }
    rows.push_back(row.finish());
  }

  {
    // Integral form of the second-order remainder on cosine coordinates.
    RowBuilder row("second_order_remainder_cosine", 1e-8);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < n; ++c) {
      const double kappa = detail::log_uniform(d, 3.0, 1000.0);
      const double h = detail::log_uniform(d, 1e-6, 1e-1) / kappa;
      const auto s = CoordinateSpec::cosine(kappa, h);
      const double x = std::sqrt(1.5 / kappa) * d.normal();
      const double xg = x + std::sqrt(2.0 * h) * d.normal();
      const double direct = remainder_direct(s, x, xg);
      const double integral = second_order_remainder(s, x, xg, h);
      const double scale = detail::max_abs(
          {s.value(x), s.value(xg), 0.5 * (x - xg) * (s.derivative(x) + s.derivative(xg))});
      row.add(integral, direct, std::max(scale, 1e-300));
    }
    rows.push_back(row.finish());
  }

  const auto rule = gauss_hermite(64);
  {
    RowBuilder cos_row("gaussian_cos_moment_vs_hermite", 1e-12);
    RowBuilder sin_row("gaussian_sin_g_moment_vs_hermite", 1e-12);
    for (int i = 0; i <= 64; ++i) {
      const double a = -2.0 * std::numbers::pi + 4.0 * std::numbers::pi * i / 64.0;
      cos_row.add(std::abs(gaussian_cos_moment(a) -
                           rule.expectation([&](double g) {
                             return std::cos(a + std::numbers::sqrt2 * g);
                           })));
      sin_row.add(std::abs(gaussian_sin_g_moment(a) -
                           rule.expectation([&](double g) {
                             return g * std::sin(a + std::numbers::sqrt2 * g);
                           })));
    }
    rows.push_back(cos_row.finish());
    rows.push_back(sin_row.finish());
  }

  {
    // E[S] on a cosine coordinate by Gauss-Hermite versus the closed form;
    // error relative to kappa h or the potential values being differenced.
    RowBuilder row("cosine_drift_expectation_vs_hermite", 1e-10);
    auto d = next_draws();
    for (std::uint64_t c = 0; c < 200; ++c) {
      const double kappa = detail::log_uniform(d, 3.0, 1000.0);
      const double h = detail::log_uniform(d, 1e-6, 1e-1) / kappa;
      const auto s = CoordinateSpec::cosine(kappa, h);
      const double x = std::sqrt(1.5 / kappa) * d.normal();
      const double quad =
          rule.expectation([&](double g) { return coordinate_drift_value(s, x, g, h); });
      const double xg_scale = x + std::sqrt(2.0 * h) * 8.0;
      row.add(quad, cosine_drift_expectation(kappa, h, x),
              std::max(kappa * h, std::abs(s.value(x)) + std::abs(s.value(xg_scale))));
    }
    rows.push_back(row.finish());
  }

  {
    RowBuilder first("hmc_drift_coeff_K1", 1e-12);
    first.add(std::abs(hmc_cosine_drift_coeff(1) - (1.0 - 2.0 / std::numbers::e)));
    rows.push_back(first.finish());
    RowBuilder floor("hmc_drift_coeff_floor", 0.0);
    for (int K = 1; K <= kMaxLeapfrogSteps; ++K) {
      double c = 0.0;
      try {
        c = hmc_cosine_drift_coeff(K);
      } catch (const std::logic_error&) {
        c = -INFINITY;
      }
      floor.add(std::max(0.0, 0.129 - c));
    }
    rows.push_back(floor.finish());
  }

  return rows;
}

}  // namespace hardmc
