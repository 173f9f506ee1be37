#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hardmc/analysis.hpp"
#include "hardmc/chebyshev.hpp"
#include "hardmc/kernels.hpp"

using namespace hardmc;

namespace {

Target scalar(double lambda) {
  return Target(TargetKind::gaussian_iso, {{0, 1, CoordinateSpec::quadratic(lambda)}});
}

Point normals(DrawSequence& d, Index n) {
  Point x(n);
  for (Index i = 0; i < n; ++i) x[i] = d.normal();
  return x;
}

// log N(y; x - h grad f(x), 2h I), up to the shared normalizing constant.
double log_proposal(const Target& t, const Point& x, const Point& y, double h) {
  return -(y - (x - h * t.gradient(x))).squaredNorm() / (4 * h);
}

}  // namespace

TEST(KernelSpec, Validation) {
  EXPECT_THROW(KernelSpec::mala(0.0), std::domain_error);
  EXPECT_THROW(KernelSpec::mala(-1.0), std::domain_error);
  EXPECT_THROW(KernelSpec::hmc(0.1, 0), std::domain_error);
  EXPECT_THROW(KernelSpec::hmc(0.0, 3), std::domain_error);
  EXPECT_EQ(KernelSpec::mala(0.1).gradient_evals_per_step(), 2);
  EXPECT_EQ(KernelSpec::hmc(0.1, 5).gradient_evals_per_step(), 6);
  EXPECT_DOUBLE_EQ(KernelSpec::hmc(0.2, 5).equivalent_h(), 0.02);
}

TEST(MalaStep, FixedPointAtOrigin) {
  const Target t = make_gaussian_iso(3);
  const auto rec = mala_step_with(t, Point::Zero(3), 0.3, Point::Zero(3), 0.999);
  EXPECT_EQ(rec.proposal, Point::Zero(3));
  EXPECT_EQ(rec.log_accept, 0.0);
  EXPECT_TRUE(rec.accepted);
  EXPECT_EQ(rec.gradient_evals, 2);
}

TEST(MalaStep, OneDimensionalHandExample) {
  // x = 2, h = 0.5: y = x - h x + g = 1 + g, so g = -1 lands on y = 0.
  const auto rec = mala_step_with(scalar(1.0), Point::Constant(1, 2.0), 0.5,
                                  Point::Constant(1, -1.0), 0.5);
  EXPECT_NEAR(rec.proposal[0], 0.0, 1e-15);
  EXPECT_NEAR(rec.log_accept, 0.5, 1e-14);
}

TEST(MalaStep, LogAcceptMatchesGradientForm) {
  auto d = RandomStream(31, 0).draws(0, DrawKind::witness);
  const std::vector<Target> targets = {make_hard_quadratic(8, 200.0), make_cosine_hard(8, 90.0, 0.003)};
  for (const auto& t : targets) {
    for (int rep = 0; rep < 200; ++rep) {
      const Point x = 0.1 * normals(d, 8);
      const double h = 1e-4 + 0.01 * d.uniform();
      const auto rec = mala_step_with(t, x, h, normals(d, 8), d.uniform());
      EXPECT_NEAR(rec.log_accept, mala_log_accept_general(t, x, rec.proposal, h), 1e-10);
    }
  }
}

TEST(MalaStep, DetailedBalance) {
  // pi(x) q(x, y) a(x, y) = pi(y) q(y, x) a(y, x), checked in log space with
  // the proposal density written out independently.
  auto d = RandomStream(32, 0).draws(0, DrawKind::witness);
  const Target t = make_cosine_hard(4, 30.0, 0.01);
  for (int rep = 0; rep < 500; ++rep) {
    const Point x = 0.3 * normals(d, 4);
    const Point y = x + 0.1 * normals(d, 4);
    const double h = 0.005;
    const double fwd = -t.potential(x) + log_proposal(t, x, y, h) +
                       std::min(0.0, mala_log_ratio(t, x, y, h));
    const double bwd = -t.potential(y) + log_proposal(t, y, x, h) +
                       std::min(0.0, mala_log_ratio(t, y, x, h));
    EXPECT_NEAR(fwd, bwd, 1e-10 * std::max(1.0, std::abs(fwd)));
  }
}

TEST(MalaStep, LogSpaceAcceptanceNeverOverflows) {
  // A step far too large for the curvature gives log_accept ~ -1e6.
  const Target t = make_hard_quadratic(50, 1000.0);
  auto d = RandomStream(33, 0).draws(0, DrawKind::witness);
  const auto rec = mala_step_with(t, 0.03 * normals(d, 50), 0.5, normals(d, 50), 1e-300);
  EXPECT_LT(rec.log_accept, -1e3);
  EXPECT_TRUE(std::isfinite(rec.log_accept));
  EXPECT_FALSE(rec.accepted);
}

TEST(MalaStep, NonFiniteStateIsNumericError) {
  Point x = Point::Zero(2);
  x[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(mala_step_with(make_gaussian_iso(2), x, 0.1, Point::Zero(2), 0.5), NumericError);
}

TEST(Leapfrog, OneStepQuadratic) {
  const double lambda = 3.0, eta = 0.4, x0 = 1.3, v0 = -0.7;
  const auto tr = leapfrog_trajectory(scalar(lambda), Point::Constant(1, x0),
                                      Point::Constant(1, v0), eta, 1);
  EXPECT_NEAR(tr.xK[0], (1 - eta * eta * lambda / 2) * x0 + eta * v0, 1e-15);
  EXPECT_EQ(tr.steps.size(), 1u);
  EXPECT_EQ(tr.gradient_evals, 2);
}

TEST(Leapfrog, NearlyFreeParticle) {
  // Curvature 1e-300 is numerically zero: x_K = x0 + eta K v0, v_K = v0.
  const auto tr = leapfrog_trajectory(scalar(1e-300), Point::Constant(1, 0.5),
                                      Point::Constant(1, 2.0), 0.1, 7);
  EXPECT_NEAR(tr.xK[0], 0.5 + 0.1 * 7 * 2.0, 1e-14);
  EXPECT_NEAR(tr.vK[0], 2.0, 1e-15);
}

TEST(Leapfrog, MatchesClosedFormMap) {
  auto d = RandomStream(34, 0).draws(0, DrawKind::witness);
  for (int rep = 0; rep < 1000; ++rep) {
    const int K = 1 + static_cast<int>(d.next_bits() % 32);
    const double lambda = std::pow(100.0, d.uniform());
    const double eta = std::sqrt(4.0 * d.uniform() / lambda);
    const double x0 = d.normal(), v0 = d.normal();
    const double sim = leapfrog_trajectory(scalar(lambda), Point::Constant(1, x0),
                                           Point::Constant(1, v0), eta, K, false).xK[0];
    const double closed = closed_form_hmc_map(lambda, eta, K, x0, v0);
    EXPECT_NEAR(sim, closed, 1e-9 * std::max(1.0, std::abs(closed)));
  }
}

TEST(Leapfrog, TimeReversible) {
  auto d = RandomStream(35, 0).draws(0, DrawKind::witness);
  const Target t = make_cosine_hard(5, 50.0, 0.004);
  for (int rep = 0; rep < 100; ++rep) {
    const Point x0 = 0.2 * normals(d, 5), v0 = normals(d, 5);
    const auto fwd = leapfrog_trajectory(t, x0, v0, 0.01, 12, false);
    const auto back = leapfrog_trajectory(t, fwd.xK, -fwd.vK, 0.01, 12, false);
    EXPECT_LE((back.xK - x0).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((back.vK + v0).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(HmcStep, OneStepCouplesWithMala) {
  auto d = RandomStream(36, 0).draws(0, DrawKind::witness);
  const Target t = make_cosine_hard(6, 40.0, 0.002);
  for (int rep = 0; rep < 300; ++rep) {
    const Point x = 0.15 * normals(d, 6), noise = normals(d, 6);
    const double eta = 0.005 + 0.05 * d.uniform();
    const double u = d.uniform();
    const auto hmc = hmc_step_with(t, x, eta, 1, noise, u);
    const auto mala = mala_step_with(t, x, eta * eta / 2, noise, u);
    EXPECT_LE((hmc.proposal - mala.proposal).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(hmc.log_accept, mala.log_accept, 1e-10 * std::max(1.0, std::abs(mala.log_accept)));
    EXPECT_EQ(hmc.accepted, mala.accepted);
  }
}

TEST(HmcStep, QuadraticLogAcceptIsGradientNormDifference) {
  auto d = RandomStream(37, 0).draws(0, DrawKind::witness);
  const Target t = make_hqc(6, 60.0);
  for (int rep = 0; rep < 300; ++rep) {
    const Point x = 0.2 * normals(d, 6), v = normals(d, 6);
    const double eta = 0.2 * d.uniform() / std::sqrt(60.0);
    const int K = 1 + static_cast<int>(d.next_bits() % 20);
    const auto rec = hmc_step_with(t, x, eta, K, v, 0.5);
    const double closed =
        eta * eta / 8 * (t.gradient(x).squaredNorm() - t.gradient(rec.proposal).squaredNorm());
    EXPECT_NEAR(rec.log_accept, closed, 1e-9 * std::max(1.0, std::abs(closed)));
    EXPECT_EQ(rec.gradient_evals, K + 1);
  }
}

TEST(HmcStep, ResonantCoordinateMagnitudeInvariant) {
  const auto res = make_resonant_gaussian(4, 100.0, 0.3, 5);
  auto d = RandomStream(38, 0).draws(0, DrawKind::witness);
  for (int rep = 0; rep < 200; ++rep) {
    const Point x = normals(d, 4), v = 3.0 * normals(d, 4);
    const auto rec = hmc_step_with(res.target, x, 0.3, 5, v, 0.5);
    EXPECT_NEAR(std::abs(rec.proposal[1]), std::abs(x[1]), 1e-9 * std::abs(x[1]));
  }
}

TEST(RunChain, ZeroStepsHoldsStart) {
  const Point x0 = Point::Constant(3, 0.25);
  const auto tr = run_chain(KernelSpec::mala(0.1), make_gaussian_iso(3), x0, 0, RandomStream(1, 0));
  ASSERT_EQ(tr.states.size(), 1u);
  EXPECT_EQ(tr.states[0], x0);
  EXPECT_EQ(tr.final_state, x0);
  EXPECT_EQ(tr.steps, 0u);
}

TEST(RunChain, SameSeedBitwiseIdentical) {
  const Target t = make_cosine_hard(10, 50.0, 0.004);
  RecordPolicy policy;
  policy.keep_records = true;
  for (const auto& k : {KernelSpec::mala(0.003), KernelSpec::hmc(0.05, 4)}) {
    const auto a = run_chain(k, t, Point::Zero(10), 300, RandomStream(77, 3), policy);
    const auto b = run_chain(k, t, Point::Zero(10), 300, RandomStream(77, 3), policy);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      EXPECT_EQ(a.records[i].log_accept, b.records[i].log_accept);
    }
    EXPECT_EQ(a.accepted, b.accepted);
    const auto c = run_chain(k, t, Point::Zero(10), 300, RandomStream(78, 3), policy);
    EXPECT_NE(a.final_state, c.final_state);
  }
}

TEST(RunChain, ResonantMagnitudeConstantWhileAccepting) {
  // d = 2 keeps every coordinate stable at eta = 1, so moves are accepted and
  // the resonant coordinate is visibly flipped rather than frozen.
  const auto res = make_resonant_gaussian(2, 100.0, 1.0, 2);
  const Point x0 = (Point(2) << 0.4, -0.9).finished();
  RecordPolicy policy;
  const auto tr = run_chain(KernelSpec::hmc(1.0, 2), res.target, x0, 10000, RandomStream(5, 0), policy);
  EXPECT_GT(tr.accept_rate(), 0.5);
  for (const auto& x : tr.states) EXPECT_NEAR(std::abs(x[1]), 0.9, 1e-9 * 0.9);
}

TEST(RunChain, ThinningAndWitnessCounts) {
  RecordPolicy policy;
  policy.thin = 10;
  policy.witnesses.push_back([](const Point&) { return true; });
  const auto tr = run_chain(KernelSpec::mala(0.1), make_gaussian_iso(2), Point::Zero(2), 95,
                            RandomStream(1, 0), policy);
  EXPECT_EQ(tr.states.size(), 10u);
  EXPECT_EQ(tr.witness_hits[0], 96u);
  EXPECT_EQ(tr.gradient_evals, 190u);
  policy.thin = 0;
  EXPECT_THROW(run_chain(KernelSpec::mala(0.1), make_gaussian_iso(2), Point::Zero(2), 1,
                         RandomStream(1, 0), policy),
               std::invalid_argument);
}

TEST(Kernels, OneStepPreservesStationarity) {
  // Exact stationary start plus one Metropolis-adjusted step stays stationary:
  // second moments of each coordinate match 1/lambda within 4 standard errors.
  const Target t = make_hard_quadratic(3, 9.0);
  for (const auto& k : {KernelSpec::mala(0.05), KernelSpec::hmc(0.3, 3)}) {
    std::vector<RunningMoments> m(3);
    for (std::uint64_t i = 0; i < 100000; ++i) {
      const RandomStream r(39, i);
      auto draws = r.draws(0, DrawKind::stationary);
      Point x;
      sample_stationary_into(t, draws, x);
      const auto rec = kernel_step(k, t, x, r, 1);
      const Point& y = rec.accepted ? rec.proposal : x;
      for (Index j = 0; j < 3; ++j) m[j].push(y[j] * y[j]);
    }
    for (Index j = 0; j < 3; ++j) {
      const double var = j == 0 ? 1.0 : 1.0 / 9.0;
      EXPECT_NEAR(m[j].mean(), var, 4 * m[j].standard_error()) << k.describe() << " " << j;
    }
  }
}
