#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "hardmc/estimators.hpp"

using namespace hardmc;

namespace {

constexpr double kPi = std::numbers::pi;

// P[chi^2_m <= r]
double chi2_cdf(double m, double r) { return boost::math::gamma_p(0.5 * m, 0.5 * r); }

}  // namespace

TEST(Membership, Examples) {
  EXPECT_TRUE(membership(small_ball_set(5), Point::Zero(5)));
  Point x = Point::Zero(100);
  x[0] = 9.0;  // |x|^2 = 81 = 0.81 d
  EXPECT_TRUE(membership(omega_large_set(100), x));
  x[0] = 8.999;
  EXPECT_FALSE(membership(omega_large_set(100), x));

  const double kappa = 100.0, h = 1e-4;
  const auto hard = omega_hard_set(3, kappa, h);
  Point c = Point::Zero(3);
  c[1] = c[2] = 2 * kPi * std::sqrt(h);
  EXPECT_TRUE(membership(hard, c));
  c[2] = kPi * std::sqrt(h);
  EXPECT_FALSE(membership(hard, c));
  EXPECT_THROW(membership(hard, Point::Zero(4)), std::invalid_argument);
}

TEST(Membership, OmegaHardPeriodShiftInvariance) {
  const double kappa = 50.0, h = 2e-4;
  const auto set = omega_hard_set(4, kappa, h);
  const double period = 2 * kPi * std::sqrt(h);
  const auto k_max = set.coordinates[1].k_max;
  ASSERT_GE(k_max, 3);
  auto d = RandomStream(61, 0).draws(0, DrawKind::witness);
  for (int rep = 0; rep < 2000; ++rep) {
    Point x(4);
    x[0] = 3.0 * d.uniform() - 1.5;
    for (Index i = 1; i < 4; ++i) x[i] = (d.uniform() - 0.5) * period;  // k = 0 cell
    const bool base = membership(set, x);
    for (std::int64_t k : {-k_max, -1L, 1L, k_max}) {
      Point y = x;
      y[2] += static_cast<double>(k) * period;
      EXPECT_EQ(membership(set, y), base);
    }
    Point out = x;
    out[3] += static_cast<double>(k_max + 1) * period;
    EXPECT_FALSE(membership(set, out));
  }
}

TEST(WitnessFactories, Preconditions) {
  EXPECT_THROW(gaussian_bad_set(1, 10.0), std::domain_error);
  EXPECT_THROW(hmc_bad_set(2, 10.0), std::domain_error);
  EXPECT_THROW(slab_set(3, 3, 0.1), std::domain_error);
  EXPECT_THROW(slab_set(3, 0, 0.0), std::domain_error);
  EXPECT_STREQ(to_string(omega_hard_set(3, 10, 0.01).kind), "omega_hard");
}

TEST(SetMeasure, FullSpaceIsOne) {
  const auto t = make_cosine_hard(30, 40.0, 0.002);
  EXPECT_NEAR(set_measure_mc(t, full_space_set(30), 100, RandomStream(1, 0)).estimate, 1.0, 1e-12);
  const auto direct = set_measure_mc(t, full_space_set(30), 100, RandomStream(1, 0), MeasureMethod::direct);
  EXPECT_EQ(direct.hits, 100u);
}

TEST(SetMeasure, SmallBallInTwoDimensions) {
  const double exact = 1.0 - std::exp(-0.5);
  const auto t = make_gaussian_iso(2);
  const auto f = set_measure_mc(t, small_ball_set(2), 0, RandomStream(1, 0), MeasureMethod::factorized);
  EXPECT_NEAR(f.estimate, exact, 1e-12);
  const auto m = set_measure_mc(t, small_ball_set(2), 100000, RandomStream(62, 0), MeasureMethod::direct);
  EXPECT_LE(m.interval.lo, exact);
  EXPECT_GE(m.interval.hi, exact);
  EXPECT_NEAR(m.estimate, 0.3935, 0.01);
}

TEST(SetMeasure, OmegaHardAtLeastExpMinusD) {
  const double kappa = 100.0;
  const double h = 1.0 / (10000 * kPi * kPi * kappa);
  const auto t = make_cosine_hard(6, kappa, h);
  const auto m = set_measure_mc(t, omega_hard_set(6, kappa, h), 0, RandomStream(1, 0),
                                MeasureMethod::factorized);
  EXPECT_GE(m.log_estimate, -6.0);
}

TEST(SetMeasure, FactorizedAgreesWithDirect) {
  struct Case {
    Target target;
    WitnessSet set;
  };
  const double h = 0.01;
  const std::vector<Case> cases = {
      {make_hard_quadratic(2, 4.0), gaussian_bad_set(2, 4.0)},
      {make_hard_quadratic(3, 10.0), slab_set(3, 1, 0.2)},
      {make_cosine_hard(2, 20.0, h), omega_hard_set(2, 20.0, h)},
      {make_cosine_hard(3, 10.0, h), omega_hard_set(3, 10.0, h)},
      {make_hqc(3, 20.0), hmc_bad_set(3, 20.0)},
      {make_gaussian_iso(4), omega_large_set(4)},
  };
  std::uint64_t trial = 0;
  for (const auto& c : cases) {
    const double exact = std::exp(witness_log_measure(c.target, c.set));
    const auto m = set_measure_mc(c.target, c.set, 100000, RandomStream(63, trial++), MeasureMethod::direct);
    EXPECT_LE(m.interval.lo, exact) << to_string(c.set.kind);
    EXPECT_GE(m.interval.hi, exact) << to_string(c.set.kind);
  }
}

TEST(SetMeasure, GuardBelowPrecisionFloor) {
  const auto t = make_cosine_hard(1000, 100.0, 7e-4);
  EXPECT_THROW(set_measure_mc(t, omega_hard_set(1000, 100.0, 7e-4), 0, RandomStream(1, 0)), GuardError);
}

TEST(SetMeasure, ThreadCountDoesNotChangeResult) {
  const auto t = make_hard_quadratic(3, 5.0);
  const auto a = set_measure_mc(t, slab_set(3, 2, 0.3), 20000, RandomStream(64, 0), MeasureMethod::direct, 1);
  const auto b = set_measure_mc(t, slab_set(3, 2, 0.3), 20000, RandomStream(64, 0), MeasureMethod::direct, 4);
  EXPECT_EQ(a.hits, b.hits);
}

TEST(SmallBallRate, FollowsChiSquareLargeDeviations) {
  // log Pr[chi^2_n <= n/2] / n -> -(ln 2 - 1/2)/2 = -0.0966, strictly below
  // the often quoted -1/12. Pin the actual limit.
  const double limit = -(std::log(2.0) - 0.5) / 2.0;
  EXPECT_NEAR(small_ball_log_rate(100000), limit, 1e-3);
  EXPECT_NEAR(small_ball_log_rate(1000000), limit, 2e-4);
  EXPECT_LT(small_ball_log_rate(100000), -1.0 / 12.0);
  double prev_gap = 1.0;
  for (int n : {50, 100, 200}) {
    const double r = small_ball_log_rate(n);
    EXPECT_LT(r, 0.0) << n;
    EXPECT_LT(std::abs(r - limit), prev_gap) << n;
    prev_gap = std::abs(r - limit);
  }
  RecordProperty("rate_at_1e5", std::to_string(small_ball_log_rate(100000)));
}

TEST(BallLogMass, LogSpaceTailsMatchDirectWhereRepresentable) {
  // Where the direct value is representable both paths must agree; beyond it
  // the log-space value continues the same curve.
  for (double a : {5.0, 50.0, 400.0}) {
    for (double ratio : {0.05, 0.2, 0.5}) {
      const double x = ratio * a;
      const double p = boost::math::gamma_p(a, x);
      if (p > 1e-250) {
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 10000; ++k) {
          term *= x / (a + k);
          sum += term;
        }
        EXPECT_NEAR(std::log(p), a * std::log(x) - x - std::lgamma(a + 1) + std::log(sum),
                    1e-10 * std::abs(std::log(p)));
      }
    }
  }
  // 1e5-dimensional small ball: log P[chi2 <= n/2] ~ -0.0966 n, finite.
  const double lp = detail::ball_log_mass(1.0, 100000, 50000.0, true);
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_NEAR(lp / 1e5, -(std::log(2.0) - 0.5) / 2.0, 1e-3);
  // Far upper tail: log Q(a, x) against the asymptotic x^{a-1} e^{-x} / Gamma(a) (1 + (a-1)/x).
  const double a = 2.0, x = 800.0;
  const double lq = detail::ball_log_mass(1.0, 4, 2 * x, false);
  EXPECT_NEAR(lq, (a - 1) * std::log(x) - x - std::lgamma(a) + std::log1p((a - 1) / x), 1e-9 * x);
}

TEST(RestrictedSampler, DrawsLieInSet) {
  const auto t = make_hard_quadratic(200, 50.0);
  const auto set = gaussian_bad_set(200, 50.0);
  const double lm = witness_log_measure(t, set);
  EXPECT_LT(lm, std::log(kRejectionMeasureFloor));  // exercises the conditional path
  for (std::uint64_t k = 0; k < 200; ++k) {
    auto d = RandomStream(65, k).draws(0, DrawKind::start);
    EXPECT_TRUE(membership(set, sample_restricted(t, set, d, lm)));
  }
}

TEST(RestrictedSampler, BallRadiusFollowsTruncatedChiSquare) {
  // E[|x|^2 lambda | lambda |x|^2 <= r] = m P(chi2_{m+2} <= r) / P(chi2_m <= r).
  const Index d = 50;
  const double kappa = 20.0;
  const auto t = make_hard_quadratic(d, kappa);
  const auto set = gaussian_bad_set(d, kappa);
  const double r = kappa * set.balls[0].radius_sq;
  const double m = static_cast<double>(d - 1);
  const double oracle = m * chi2_cdf(m + 2, r) / chi2_cdf(m, r);
  RunningMoments radial;
  for (std::uint64_t k = 0; k < 20000; ++k) {
    auto draws = RandomStream(66, k).draws(0, DrawKind::start);
    const Point x = sample_restricted(t, set, draws);
    radial.push(kappa * x.tail(d - 1).squaredNorm());
  }
  EXPECT_NEAR(radial.mean(), oracle, 4 * radial.standard_error());
}

TEST(RestrictedSampler, SlabCoordinateIsTruncatedNormal) {
  // Var of N(0,1) truncated to [-a, a]: 1 - 2 a phi(a) / (2 Phi(a) - 1).
  const double a = 0.5;
  const auto t = make_gaussian_iso(2);
  const auto set = slab_set(2, 0, a);
  RunningMoments sq;
  for (std::uint64_t k = 0; k < 50000; ++k) {
    auto d = RandomStream(67, k).draws(0, DrawKind::start);
    const Point x = sample_restricted(t, set, d);
    ASSERT_LE(std::abs(x[0]), a);
    sq.push(x[0] * x[0]);
  }
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2 * kPi);
  const double oracle = 1.0 - 2 * a * phi / std::erf(a / std::numbers::sqrt2);
  EXPECT_NEAR(sq.mean(), oracle, 4 * sq.standard_error());
}

TEST(EscapeProbability, ResonantSlabNeverEscapes) {
  const auto res = make_resonant_gaussian(2, 100.0, 1.0, 2);
  const auto e = escape_probability(KernelSpec::hmc(1.0, 2), res.target, slab_set(2, 1, 0.3), 2000,
                                    RandomStream(68, 0));
  EXPECT_EQ(e.escape.hits, 0u);
  EXPECT_GT(e.accept.estimate, 0.5);
}

TEST(EscapeProbability, TinyStepAcceptsButDoesNotMove) {
  const auto t = make_hard_quadratic(10, 10.0);
  const auto e = escape_probability(KernelSpec::mala(1e-10), t, slab_set(10, 0, 2.0), 2000,
                                    RandomStream(69, 0));
  EXPECT_GT(e.accept.estimate, 0.999);
  EXPECT_EQ(e.escape.hits, 0u);
}

TEST(EscapeProbability, BadSetCollapse) {
  const double h = 4 * std::sqrt(std::log(200.0)) / (50.0 * std::sqrt(200.0));
  const auto e = escape_probability(KernelSpec::mala(h), make_hard_quadratic(200, 50.0),
                                    gaussian_bad_set(200, 50.0), 2000, RandomStream(70, 0));
  EXPECT_LE(e.escape.estimate, e.accept.estimate);
  EXPECT_LT(e.accept.estimate, 0.01);
  EXPECT_LT(e.log_accept.mean(), -10.0);
}

TEST(DirichletGap, NeverAcceptingKernelGivesZero) {
  const auto g = dirichlet_gap_estimate(KernelSpec::mala(10.0), make_hard_quadratic(50, 1000.0), 500,
                                        RandomStream(71, 0));
  EXPECT_EQ(g.ratio, 0.0);
  EXPECT_EQ(g.variance, 1.0);
}

TEST(DirichletGap, WithinStepSizeBounds) {
  const auto t = make_hard_quadratic(10, 10.0);
  const auto m = dirichlet_gap_estimate(KernelSpec::mala(1e-3), t, 20000, RandomStream(72, 0));
  EXPECT_LE(m.ratio, 10 * (1e-3 + 1e-6) + 4 * m.ratio_se);
  EXPECT_GT(m.ratio, 0.0);
  const auto k = dirichlet_gap_estimate(KernelSpec::hmc(std::sqrt(2e-3), 4), t, 20000, RandomStream(72, 1));
  EXPECT_LE(k.ratio, 10 * (1e-3 * 16 + 1e-6 * 256) + 4 * k.ratio_se);
  const Target all_cosine(TargetKind::cosine_hard, {{0, 2, CoordinateSpec::cosine(10.0, 0.1)}});
  EXPECT_THROW(dirichlet_gap_estimate(KernelSpec::mala(0.1), all_cosine, 10, RandomStream(1, 0)),
               std::domain_error);
}

TEST(TvWitnessGap, ExactSamplerChainIsIndistinguishable) {
  const auto t = make_gaussian_iso(5);
  const auto a = exact_sample_stationary(t, 5000, RandomStream(73, 0));
  const auto b = exact_sample_stationary(t, 5000, RandomStream(73, 1));
  EXPECT_EQ(tv_witness_gap(a, b, small_ball_set(5)).lower_bound, 0.0);
}

TEST(TvWitnessGap, FrozenChainAtOrigin) {
  // Stationary mass of omega_large under N(0, I_1000) is P[chi2_1000 >= 810] > 0.9999.
  const Index d = 1000;
  const auto t = make_gaussian_iso(d);
  const double mass = std::exp(witness_log_measure(t, omega_large_set(d)));
  EXPECT_GT(mass, 0.9999);
  const std::vector<Point> frozen(5000, Point::Zero(d));
  std::uint64_t hits = 0;
  for (const auto& x : frozen) hits += membership(omega_large_set(d), x) ? 1 : 0;
  EXPECT_GE(tv_witness_gap(hits, frozen.size(), Interval{mass, mass}, mass).lower_bound, 0.98);
}

TEST(TvWitnessGap, BoundIsClippedAndOrdered) {
  const auto b = tv_witness_gap(40, 100, 60, 100);
  EXPECT_GE(b.lower_bound, 0.0);
  EXPECT_LE(b.lower_bound, b.gap);
  EXPECT_NEAR(b.gap, 0.2, 1e-15);
  EXPECT_EQ(tv_witness_gap(50, 100, 50, 100).lower_bound, 0.0);
}

TEST(TvWitnessGap, DecaysAsChainMixes) {
  // MALA on N(0, I_20) from a point far out: the omega_large witness gap at
  // T = 0 exceeds the gap after 400 steps.
  const Index d = 20;
  const auto t = make_gaussian_iso(d);
  const auto w = small_ball_set(d);
  const double mass = std::exp(witness_log_measure(t, w));
  std::uint64_t hits0 = 0, hits_late = 0;
  const std::uint64_t trials = 400;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const Point x0 = Point::Constant(d, 1.5);
    const auto tr = run_chain(KernelSpec::mala(0.2), t, x0, 400, RandomStream(74, i));
    hits0 += membership(w, tr.states.front()) ? 1 : 0;
    hits_late += membership(w, tr.final_state) ? 1 : 0;
  }
  const double tv0 = tv_witness_gap(hits0, trials, Interval{mass, mass}, mass).lower_bound;
  const double tv_late = tv_witness_gap(hits_late, trials, Interval{mass, mass}, mass).lower_bound;
  EXPECT_GT(tv0, 0.0);
  EXPECT_LT(tv0, 1.0);
  EXPECT_LT(tv_late, tv0);
}

TEST(AcceptanceScan, SingleTrivialPoint) {
  const auto t = make_gaussian_iso(2);
  const auto rows = acceptance_scan(t, {KernelSpec::mala(1e-10)}, full_space_set(2), RandomStream(1, 0),
                                    {.trials = 50});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].escape_rate, 0.0);
  EXPECT_TRUE(std::isnan(rows[0].gap_est));
  EXPECT_THROW(acceptance_scan(t, {}, full_space_set(2), RandomStream(1, 0)), std::invalid_argument);
}

TEST(AcceptanceScan, MalaStepScanIsMonotone) {
  const double h = 4 * std::sqrt(std::log(200.0)) / (50.0 * std::sqrt(200.0));
  const std::vector<KernelSpec> grid = {KernelSpec::mala(h / 4), KernelSpec::mala(h / 2), KernelSpec::mala(h)};
  const auto rows = acceptance_scan(make_hard_quadratic(200, 50.0), grid, gaussian_bad_set(200, 50.0),
                                    RandomStream(75, 0), {.trials = 1000});
  EXPECT_GT(rows[0].mean_log_accept, rows[1].mean_log_accept);
  EXPECT_GT(rows[1].mean_log_accept, rows[2].mean_log_accept);
  EXPECT_LT(rows[2].mean_log_accept, -10.0);
}

TEST(AcceptanceScan, ResonantRowHasNoEscapes) {
  const auto res = make_resonant_gaussian(2, 100.0, 1.0, 2);
  const std::vector<KernelSpec> grid = {KernelSpec::hmc(0.3, 2), KernelSpec::hmc(1.0, 2)};
  const auto rows = acceptance_scan(res.target, grid, slab_set(2, 1, 0.25 / std::sqrt(res.lambda)),
                                    RandomStream(76, 0), {.trials = 2000});
  EXPECT_GT(rows[0].escape_rate, 0.1);
  EXPECT_EQ(rows[1].escape_rate, 0.0);
  EXPECT_GT(rows[1].accept_rate, 0.5);
}
