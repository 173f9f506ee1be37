#pragma once

// Empirical side of the lower bounds: witness sets, their stationary
// measures, escape probabilities, Dirichlet-form gap estimates and total
// variation witnesses.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "hardmc/kernels.hpp"
#include "hardmc/parallel.hpp"
#include "hardmc/random.hpp"
#include "hardmc/stats.hpp"
#include "hardmc/targets.hpp"

namespace hardmc {

// ---------------------------------------------------------------------------
// Witness sets

/// Constraint on each coordinate in [begin, end): either a closed interval or
/// a union of closed windows |c - k * period| <= half_width, |k| <= k_max.
struct CoordinateConstraint {
  enum class Kind { interval, periodic };

  Index begin = 0;
  Index end = 0;
  Kind kind = Kind::interval;
  double lo = 0.0;
  double hi = 0.0;
  double period = 0.0;
  double half_width = 0.0;
  std::int64_t k_max = 0;

  bool contains(double c) const {
    if (kind == Kind::interval) return c >= lo && c <= hi;
    const double k = std::round(c / period);
    if (std::abs(k) > static_cast<double>(k_max)) return false;
    return std::abs(c - k * period) <= half_width;
  }

  /// Windows intersecting [-radius, radius].
  std::vector<std::pair<double, double>> windows(double radius) const {
    if (kind == Kind::interval) return {{lo, hi}};
    std::vector<std::pair<double, double>> out;
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / period)) + 1;
    const std::int64_t k_lo = std::max(-k_max, -reach);
    const std::int64_t k_hi = std::min(k_max, reach);
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
      const double center = static_cast<double>(k) * period;
      out.emplace_back(center - half_width, center + half_width);
    }
    return out;
  }
};

/// |x_[begin,end)|^2 <= radius_sq (inside) or >= radius_sq (outside).
struct BallConstraint {
  Index begin = 0;
  Index end = 0;
  double radius_sq = 0.0;
  bool inside = true;

  bool contains(const Point& x) const {
    const double r2 = x.segment(begin, end - begin).squaredNorm();
    return inside ? r2 <= radius_sq : r2 >= radius_sq;
  }
};

enum class WitnessKind {
  gaussian_bad,
  omega_hard,
  small_ball,
  omega_large,
  hmc_bad,
  slab,
  full_space,
};

inline const char* to_string(WitnessKind kind) {
  switch (kind) {
    case WitnessKind::gaussian_bad: return "gaussian_bad";
    case WitnessKind::omega_hard: return "omega_hard";
    case WitnessKind::small_ball: return "small_ball";
    case WitnessKind::omega_large: return "omega_large";
    case WitnessKind::hmc_bad: return "hmc_bad";
    case WitnessKind::slab: return "slab";
    case WitnessKind::full_space: return "full_space";
  }
  return "unknown";
}

/// A witness set is an intersection of per-coordinate constraints and
/// Euclidean-ball constraints on disjoint coordinate ranges.
struct WitnessSet {
  WitnessKind kind = WitnessKind::full_space;
  Index d = 0;
  std::vector<CoordinateConstraint> coordinates;
  std::vector<BallConstraint> balls;

  bool is_product() const { return balls.empty(); }
};

/// Exact predicate evaluation.
inline bool membership(const WitnessSet& set, const Point& x) {
  if (x.size() != set.d) {
    throw std::invalid_argument("membership: point dimension " +
                                std::to_string(x.size()) + " != set dimension " +
                                std::to_string(set.d));
  }
  for (const auto& c : set.coordinates) {
    for (Index i = c.begin; i < c.end; ++i) {
      if (!c.contains(x[i])) return false;
    }
  }
  for (const auto& b : set.balls) {
    if (!b.contains(x)) return false;
  }
  return true;
}

inline WitnessSet full_space_set(Index d) { return {WitnessKind::full_space, d, {}, {}}; }

/// {x : |x_{-1}|^2 <= 2d/(3 kappa), x_1^2 <= 25 log d}.
inline WitnessSet gaussian_bad_set(Index d, double kappa) {
  if (d < 2) throw std::domain_error("gaussian_bad_set: d must be >= 2");
  const double x1 = 5.0 * std::sqrt(std::log(static_cast<double>(d)));
  WitnessSet s{WitnessKind::gaussian_bad, d, {}, {}};
  s.coordinates.push_back({0, 1, CoordinateConstraint::Kind::interval, -x1, x1});
  s.balls.push_back({1, d, 2.0 * static_cast<double>(d) / (3.0 * kappa), true});
  return s;
}

/// |x_1| <= 2 and, for i >= 2, x_i within (9/20) pi sqrt(h) of 2 pi k sqrt(h)
/// for some integer |k| <= floor(5 / (pi sqrt(h kappa))).
inline WitnessSet omega_hard_set(Index d, double kappa, double h) {
  if (d < 2) throw std::domain_error("omega_hard_set: d must be >= 2");
  if (!(h > 0.0) || !(kappa > 0.0)) {
    throw std::domain_error("omega_hard_set: h and kappa must be positive");
  }
  const double sqrt_h = std::sqrt(h);
  CoordinateConstraint windows;
  windows.begin = 1;
  windows.end = d;
  windows.kind = CoordinateConstraint::Kind::periodic;
  windows.period = 2.0 * std::numbers::pi * sqrt_h;
  windows.half_width = 0.45 * std::numbers::pi * sqrt_h;
  windows.k_max =
      static_cast<std::int64_t>(std::floor(5.0 / (std::numbers::pi * std::sqrt(h * kappa))));
  WitnessSet s{WitnessKind::omega_hard, d, {}, {}};
  s.coordinates.push_back({0, 1, CoordinateConstraint::Kind::interval, -2.0, 2.0});
  s.coordinates.push_back(windows);
  return s;
}

/// {x : |x|^2 <= d/2}.
inline WitnessSet small_ball_set(Index d) {
  return {WitnessKind::small_ball, d, {}, {{0, d, 0.5 * static_cast<double>(d), true}}};
}

/// {x : |x|^2 >= 0.81 d}.
inline WitnessSet omega_large_set(Index d) {
  return {WitnessKind::omega_large, d, {}, {{0, d, 0.81 * static_cast<double>(d), false}}};
}

/// Start set for K-step HMC on the hqc target:
/// |x_{-1d}|^2 <= 2d/(3 kappa), |x_1| <= 5 sqrt(log d), |x_d| <= log d / sqrt(kappa).
inline WitnessSet hmc_bad_set(Index d, double kappa) {
  if (d < 3) throw std::domain_error("hmc_bad_set: d must be >= 3");
  const double logd = std::log(static_cast<double>(d));
  const double x1 = 5.0 * std::sqrt(logd);
  const double xd = logd / std::sqrt(kappa);
  WitnessSet s{WitnessKind::hmc_bad, d, {}, {}};
  s.coordinates.push_back({0, 1, CoordinateConstraint::Kind::interval, -x1, x1});
  s.coordinates.push_back({d - 1, d, CoordinateConstraint::Kind::interval, -xd, xd});
  s.balls.push_back({1, d - 1, 2.0 * static_cast<double>(d) / (3.0 * kappa), true});
  return s;
}

/// Symmetric slab |x_coordinate| <= half_width.
inline WitnessSet slab_set(Index d, Index coordinate, double half_width) {
  if (coordinate < 0 || coordinate >= d) throw std::domain_error("slab_set: bad coordinate");
  if (!(half_width > 0.0)) throw std::domain_error("slab_set: half_width must be > 0");
  WitnessSet s{WitnessKind::slab, d, {}, {}};
  s.coordinates.push_back({coordinate, coordinate + 1, CoordinateConstraint::Kind::interval,
                           -half_width, half_width});
  return s;
}

// ---------------------------------------------------------------------------
// Exact stationary measure of a witness set (factorized over independent
// coordinate blocks)

namespace detail {

inline double support_radius(const CoordinateSpec& s) {
  if (s.kind == CoordinateKind::quadratic) return 40.0 / std::sqrt(s.lambda);
  return 10.0 * std::sqrt(3.0 / s.kappa);
}

inline double constraint_mass(const CoordinateSpec& spec, const CoordinateConstraint& c) {
  const auto windows = c.windows(support_radius(spec));
  double total = 0.0;
  if (spec.kind == CoordinateKind::quadratic) {
    for (const auto& [a, b] : windows) total += marginal_mass(spec, a, b);
    return std::min(total, 1.0);
  }
  const double radius = cosine_support_radius(spec);
  const double norm = cosine_mass(spec, -radius, radius);
  for (const auto& [a, b] : windows) total += cosine_mass(spec, a, b);
  return std::min(total / norm, 1.0);
}

/// Single quadratic curvature shared by all coordinates in [begin, end).
inline double isotropic_lambda(const Target& target, Index begin, Index end) {
  std::optional<double> lambda;
  for (const auto& b : target.blocks()) {
    if (b.end <= begin || b.begin >= end) continue;
    if (b.spec.kind != CoordinateKind::quadratic ||
        (lambda && *lambda != b.spec.lambda)) {
      throw GuardError("ball constraint needs an isotropic Gaussian coordinate block");
    }
    lambda = b.spec.lambda;
  }
  if (!lambda) throw std::invalid_argument("ball constraint outside target");
  return *lambda;
}

// Below this the regularized gamma functions are taken in log space; the
// double results would be denormal or zero.
inline constexpr double kGammaUnderflow = 1e-280;

/// log P(a, x). When P underflows (x well below a) uses the series
/// P = x^a e^-x / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k)).
inline double log_gamma_p(double a, double x) {
  const double p = boost::math::gamma_p(a, x);
  if (p > kGammaUnderflow) return std::log(p);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return a * std::log(x) - x - std::lgamma(a + 1.0) + std::log(sum);
}

/// log Q(a, x). When Q underflows (x well above a) uses the Legendre
/// continued fraction, evaluated by modified Lentz.
inline double log_gamma_q(double a, double x) {
  const double q = boost::math::gamma_q(a, x);
  if (q > kGammaUnderflow) return std::log(q);
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double frac = d;
  for (int i = 1; i < 1000000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double step = d * c;
    frac *= step;
    if (std::abs(step - 1.0) < 1e-16) break;
  }
  return a * std::log(x) - x - std::lgamma(a) + std::log(frac);
}

/// log Pr[|x_block|^2 <= r2] (inside) or >= r2 for x_block ~ N(0, I / lambda).
inline double ball_log_mass(double lambda, Index m, double r2, bool inside) {
  const double a = 0.5 * static_cast<double>(m);
  const double t = 0.5 * lambda * r2;
  return inside ? log_gamma_p(a, t) : log_gamma_q(a, t);
}

}  // namespace detail

/// log pi*(set), computed as a product over independent blocks: 1-D marginal
/// masses (closed form or quadrature) for coordinate constraints and
/// chi-square probabilities for ball constraints.
inline double witness_log_measure(const Target& target, const WitnessSet& set) {
  if (set.d != target.dimension()) {
    throw std::invalid_argument("witness_log_measure: dimension mismatch");
  }
  double log_mass = 0.0;
  for (const auto& c : set.coordinates) {
    for (const auto& b : target.blocks()) {
      const Index lo = std::max(b.begin, c.begin);
      const Index hi = std::min(b.end, c.end);
      if (hi <= lo) continue;
      log_mass += static_cast<double>(hi - lo) * std::log(detail::constraint_mass(b.spec, c));
    }
  }
  for (const auto& ball : set.balls) {
    const double lambda = detail::isotropic_lambda(target, ball.begin, ball.end);
    log_mass += detail::ball_log_mass(lambda, ball.end - ball.begin, ball.radius_sq, ball.inside);
  }
  return log_mass;
}

// ---------------------------------------------------------------------------
// Stationary draws restricted to a witness set

/// Sets at least this heavy are sampled by plain rejection from the exact
/// sampler; lighter sets use blockwise conditional sampling, which is exact
/// at any measure and costs about one full draw per start.
inline constexpr double kRejectionMeasureFloor = 1e-2;
inline constexpr std::uint64_t kMaxRestrictedRetries = 1'000'000;

namespace detail {

// Radial-conditional draw of an isotropic Gaussian block N(0, I/lambda) of
// size m restricted to |x|^2 <= r2 (inside) or >= r2: the squared radius is
// drawn from the truncated chi-square law by inversion, the direction
// uniformly on the sphere.
inline void sample_ball_block(double lambda, const BallConstraint& ball, DrawSequence& draws,
                              Point& x) {
  const Index m = ball.end - ball.begin;
  const double a = 0.5 * static_cast<double>(m);
  const double t = 0.5 * lambda * ball.radius_sq;
  const double u = draws.uniform();
  const double mass = ball.inside ? boost::math::gamma_p(a, t) : boost::math::gamma_q(a, t);
  if (!(mass > kGammaUnderflow)) {
    throw GuardError("ball constraint mass below 1e-280: radial inversion would underflow");
  }
  double radius_sq_std = 0.0;
  if (ball.inside) {
    radius_sq_std = 2.0 * boost::math::gamma_p_inv(a, u * mass);
  } else {
    radius_sq_std = 2.0 * boost::math::gamma_q_inv(a, u * mass);
  }
  Eigen::VectorXd dir(m);
  draws.fill_normal({dir.data(), static_cast<std::size_t>(m)});
  const double norm = dir.norm();
  x.segment(ball.begin, m) = dir * (std::sqrt(radius_sq_std / lambda) / norm);
}

}  // namespace detail

/// One exact draw from pi* conditioned on `set`.
inline Point sample_restricted(const Target& target, const WitnessSet& set,
                               DrawSequence& draws, double log_measure) {
  Point x(target.dimension());
  if (log_measure >= std::log(kRejectionMeasureFloor)) {
    for (std::uint64_t attempt = 0; attempt < kMaxRestrictedRetries; ++attempt) {
      sample_stationary_into(target, draws, x);
      if (membership(set, x)) return x;
    }
    throw GuardError("restricted start sampler exhausted its retry budget");
  }
  sample_stationary_into(target, draws, x);
  for (const auto& c : set.coordinates) {
    for (Index i = c.begin; i < c.end; ++i) {
      const auto& spec = target.coordinate(i);
      std::uint64_t attempt = 0;
      while (!c.contains(x[i])) {
        if (++attempt > kMaxCoordinateRetries) {
          throw GuardError("restricted start sampler exhausted coordinate " + std::to_string(i));
        }
        x[i] = sample_coordinate(spec, draws);
      }
    }
  }
  for (const auto& ball : set.balls) {
    const double lambda = detail::isotropic_lambda(target, ball.begin, ball.end);
    detail::sample_ball_block(lambda, ball, draws, x);
  }
  return x;
}

inline Point sample_restricted(const Target& target, const WitnessSet& set,
                               DrawSequence& draws) {
  return sample_restricted(target, set, draws, witness_log_measure(target, set));
}

// ---------------------------------------------------------------------------
// Measures

enum class MeasureMethod { automatic, direct, factorized };

struct MeasureEstimate {
  std::uint64_t hits = 0;
  std::uint64_t n = 0;
  double estimate = 0.0;
  double log_estimate = -std::numeric_limits<double>::infinity();
  Interval interval;
  MeasureMethod method = MeasureMethod::direct;
};

inline MeasureEstimate binomial_estimate(std::uint64_t hits, std::uint64_t n) {
  MeasureEstimate m;
  m.hits = hits;
  m.n = n;
  m.estimate = n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
  m.log_estimate = std::log(m.estimate);
  m.interval = clopper_pearson(hits, n);
  m.method = MeasureMethod::direct;
  return m;
}

/// Smallest log-measure the factorized estimate reports as a double.
inline constexpr double kFactorizedLogFloor = -700.0;

/// Stationary measure of `set`. Direct: n i.i.d. exact draws classified by
/// membership. Factorized: product of exact per-block probabilities.
/// Automatic picks factorized for d > 20.
inline MeasureEstimate set_measure_mc(const Target& target, const WitnessSet& set,
                                      std::uint64_t n, const RandomStream& rng,
                                      MeasureMethod method = MeasureMethod::automatic,
                                      unsigned threads = 1) {
  if (set.d != target.dimension()) {
    throw std::invalid_argument("set_measure_mc: dimension mismatch");
  }
  if (method == MeasureMethod::automatic) {
    method = target.dimension() > 20 ? MeasureMethod::factorized : MeasureMethod::direct;
  }
  if (method == MeasureMethod::factorized) {
    MeasureEstimate m;
    m.method = MeasureMethod::factorized;
    m.log_estimate = witness_log_measure(target, set);
    if (m.log_estimate < kFactorizedLogFloor) {
      throw GuardError("set measure exp(" + std::to_string(m.log_estimate) +
                       ") is below the factorized precision floor");
    }
    m.estimate = std::exp(m.log_estimate);
    m.interval = {m.estimate, m.estimate};
    return m;
  }
  std::vector<unsigned char> hit(n, 0);
  parallel_for(n, threads, [&](std::size_t k) {
    auto draws = rng.draws(k, DrawKind::stationary);
    Point x;
    sample_stationary_into(target, draws, x);
    hit[k] = membership(set, x) ? 1 : 0;
  });
  std::uint64_t hits = 0;
  for (auto v : hit) hits += v;
  return binomial_estimate(hits, n);
}

/// log Pr[chi^2_n <= n/2] / n.
inline double small_ball_log_rate(Index n) {
  const double a = 0.5 * static_cast<double>(n);
  return detail::log_gamma_p(a, 0.25 * static_cast<double>(n)) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Escape probability

struct EscapeEstimate {
  MeasureEstimate escape;  // accepted and left the set
  MeasureEstimate accept;
  RunningMoments log_accept;
};

/// One kernel step from each of n stationary-restricted starts in `set`.
/// Start k uses rng.child(k): its (0, start) address for the start and step 0
/// for the transition.
inline EscapeEstimate escape_probability(const KernelSpec& kernel, const Target& target,
                                         const WitnessSet& set, std::uint64_t n,
                                         const RandomStream& rng, unsigned threads = 1) {
  kernel.validate();
  const double log_measure = witness_log_measure(target, set);
  struct Outcome {
    double log_accept = 0.0;
    bool accepted = false;
    bool escaped = false;
  };
  std::vector<Outcome> outcomes(n);
  parallel_for(n, threads, [&](std::size_t k) {
    const RandomStream sub = rng.child(k);
    auto start_draws = sub.draws(0, DrawKind::start);
    const Point x = sample_restricted(target, set, start_draws, log_measure);
    const auto rec = kernel_step(kernel, target, x, sub, 0);
    outcomes[k].log_accept = rec.log_accept;
    outcomes[k].accepted = rec.accepted;
    outcomes[k].escaped = rec.accepted && !membership(set, rec.proposal);
  });
  EscapeEstimate out;
  std::uint64_t accepted = 0;
  std::uint64_t escaped = 0;
  for (const auto& o : outcomes) {
    out.log_accept.push(o.log_accept);
    accepted += o.accepted ? 1 : 0;
    escaped += o.escaped ? 1 : 0;
  }
  out.escape = binomial_estimate(escaped, n);
  out.accept = binomial_estimate(accepted, n);
  return out;
}

// ---------------------------------------------------------------------------
// Dirichlet-form gap witness

struct GapEstimate {
  double numerator = 0.0;     // E(g, g) = E[(g(x) - g(y))^2] / 2
  double numerator_se = 0.0;
  double variance = 0.0;      // Var_pi[g]
  double ratio = 0.0;
  double ratio_se = 0.0;
  std::uint64_t n = 0;
};

/// Dirichlet ratio for the witness g(x) = x_1 under stationary starts.
/// Rejected moves contribute zero. Var_pi[x_1] = 1/lambda_1 exactly.
inline GapEstimate dirichlet_gap_estimate(const KernelSpec& kernel, const Target& target,
                                          std::uint64_t n, const RandomStream& rng,
                                          unsigned threads = 1) {
  kernel.validate();
  const auto& first = target.coordinate(0);
  if (first.kind != CoordinateKind::quadratic) {
    throw std::domain_error("dirichlet_gap_estimate: coordinate 1 must be quadratic");
  }
  std::vector<double> sq(n, 0.0);
  parallel_for(n, threads, [&](std::size_t k) {
    const RandomStream sub = rng.child(k);
    auto draws = sub.draws(0, DrawKind::stationary);
    Point x;
    sample_stationary_into(target, draws, x);
    const auto rec = kernel_step(kernel, target, x, sub, 0);
    if (rec.accepted) {
      const double diff = x[0] - rec.proposal[0];
      sq[k] = diff * diff;
    }
  });
  RunningMoments m;
  for (double v : sq) m.push(v);
  GapEstimate out;
  out.n = n;
  out.numerator = 0.5 * m.mean();
  out.numerator_se = 0.5 * m.standard_error();
  out.variance = 1.0 / first.lambda;
  out.ratio = out.numerator / out.variance;
  out.ratio_se = out.numerator_se / out.variance;
  return out;
}

// ---------------------------------------------------------------------------
// Total variation witness

struct TvBound {
  double chain_frequency = 0.0;
  double stationary_frequency = 0.0;
  double gap = 0.0;
  double lower_bound = 0.0;
};

/// Conservative TV lower bound |pi(W) - chain(W)| minus both interval
/// half-widths on the relevant sides, clipped at zero.
inline TvBound tv_witness_gap(std::uint64_t chain_hits, std::uint64_t chain_n,
                              Interval stationary_interval, double stationary_frequency) {
  const auto chain_ci = clopper_pearson(chain_hits, chain_n);
  TvBound out;
  out.chain_frequency = chain_n == 0 ? 0.0 : static_cast<double>(chain_hits) / chain_n;
  out.stationary_frequency = stationary_frequency;
  out.gap = std::abs(out.chain_frequency - stationary_frequency);
  if (out.chain_frequency >= stationary_frequency) {
    out.lower_bound = std::max(0.0, chain_ci.lo - stationary_interval.hi);
  } else {
    out.lower_bound = std::max(0.0, stationary_interval.lo - chain_ci.hi);
  }
  return out;
}

inline TvBound tv_witness_gap(std::uint64_t chain_hits, std::uint64_t chain_n,
                              std::uint64_t stationary_hits, std::uint64_t stationary_n) {
  const double freq = stationary_n == 0
                          ? 0.0
                          : static_cast<double>(stationary_hits) / stationary_n;
  return tv_witness_gap(chain_hits, chain_n, clopper_pearson(stationary_hits, stationary_n),
                        freq);
}

/// Frequencies of `witness` among chain states and among stationary draws.
inline TvBound tv_witness_gap(const std::vector<Point>& chain_states,
                              const std::vector<Point>& stationary_states,
                              const WitnessSet& witness) {
  std::uint64_t chain_hits = 0;
  for (const auto& x : chain_states) chain_hits += membership(witness, x) ? 1 : 0;
  std::uint64_t stat_hits = 0;
  for (const auto& x : stationary_states) stat_hits += membership(witness, x) ? 1 : 0;
  return tv_witness_gap(chain_hits, chain_states.size(), stat_hits, stationary_states.size());
}

// ---------------------------------------------------------------------------
// Acceptance scan

struct ScanRow {
  KernelSpec kernel;
  std::uint64_t n = 0;
  double mean_log_accept = 0.0;
  double accept_rate = 0.0;
  double escape_rate = 0.0;
  double gap_est = std::numeric_limits<double>::quiet_NaN();
  double gap_se = std::numeric_limits<double>::quiet_NaN();
  double tv_lb = 0.0;
};

struct ScanOptions {
  std::uint64_t trials = 1000;       // restricted starts per grid point
  std::uint64_t gap_samples = 0;     // 0 disables the gap column
  unsigned threads = 1;
};

/// For each kernel in `grid`: one step from `trials` stationary-restricted
/// starts in `start_set` (log-acceptance, acceptance and escape frequencies),
/// an optional Dirichlet gap estimate, and the TV lower bound between the
/// one-step distribution and pi* on `start_set`. Grid point i uses rng.child(i).
inline std::vector<ScanRow> acceptance_scan(const Target& target,
                                            const std::vector<KernelSpec>& grid,
                                            const WitnessSet& start_set,
                                            const RandomStream& rng,
                                            const ScanOptions& options = {}) {
  if (grid.empty()) throw std::invalid_argument("acceptance_scan: empty grid");
  const double log_measure = witness_log_measure(target, start_set);
  const double set_mass = std::exp(log_measure);
  std::vector<ScanRow> rows;
  rows.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const RandomStream point_rng = rng.child(g);
    const auto esc = escape_probability(grid[g], target, start_set, options.trials,
                                        point_rng.child(0), options.threads);
    ScanRow row;
    row.kernel = grid[g];
    row.n = options.trials;
    row.mean_log_accept = esc.log_accept.mean();
    row.accept_rate = esc.accept.estimate;
    row.escape_rate = esc.escape.estimate;
    if (options.gap_samples > 0) {
      const auto gap = dirichlet_gap_estimate(grid[g], target, options.gap_samples,
                                              point_rng.child(1), options.threads);
      row.gap_est = gap.ratio;
      row.gap_se = gap.ratio_se;
    }
    const std::uint64_t stayed = options.trials - esc.escape.hits;
    row.tv_lb = tv_witness_gap(stayed, options.trials, Interval{set_mass, set_mass}, set_mass)
                    .lower_bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hardmc
