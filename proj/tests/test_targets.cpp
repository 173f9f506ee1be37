#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hardmc/stats.hpp"
#include "hardmc/targets.hpp"

using namespace hardmc;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

Point vec(std::initializer_list<double> v) {
  Point x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

void expect_gradient_matches_differences(const Target& t, const Point& x) {
  const Point g = t.gradient(x);
  for (Index i = 0; i < x.size(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
    Point a = x, b = x;
    a[i] += step;
    b[i] -= step;
    const double fd = (t.potential(a) - t.potential(b)) / (2 * step);
    EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "coordinate " << i;
  }
}

}  // namespace

TEST(HardQuadratic, Examples) {
  EXPECT_DOUBLE_EQ(make_hard_quadratic(3, 10.0).potential(vec({1, 1, 1})), 10.5);
  const Target iso = make_hard_quadratic(2, 1.0);
  const Point x = vec({0.3, -1.7});
  EXPECT_DOUBLE_EQ(iso.potential(x), 0.5 * x.squaredNorm());
  const Point g = make_hard_quadratic(4, 100.0).gradient(vec({0, 1, 0, 0}));
  EXPECT_EQ(g, vec({0, 100, 0, 0}));
  EXPECT_THROW(make_hard_quadratic(1, 10.0), std::domain_error);
  EXPECT_THROW(make_hard_quadratic(3, 0.5), std::domain_error);
}

TEST(HardQuadraticChebyshev, Eigenvalues) {
  const auto a = make_hqc(3, 4 * kPi2).quadratic_diagonal();
  EXPECT_NEAR(a[0], 1.0, 1e-15);
  EXPECT_NEAR(a[1], 4.0, 1e-14);
  EXPECT_NEAR(a[2], 4 * kPi2, 1e-13);
  const auto b = make_hqc(4, kPi2).quadratic_diagonal();
  EXPECT_NEAR(b[1], 1.0, 1e-15);
  EXPECT_NEAR(b[2], 1.0, 1e-15);
  EXPECT_NEAR(b[3], kPi2, 1e-15);
  EXPECT_THROW(make_hqc(3, 5.0), std::domain_error);
}

TEST(ResonantGaussian, Examples) {
  const auto r = make_resonant_gaussian(3, 100.0, 1.0, 2);
  EXPECT_EQ(r.j, 1);
  EXPECT_NEAR(r.lambda, 2.0, 1e-14);
  EXPECT_NEAR(r.target.quadratic_diagonal()[2], 100.0, 0.0);

  // eta^2 = pi^2 / (kappa K^2) with kappa = pi^2, K = 4.
  const double eta = std::sqrt(kPi2 / (kPi2 * 16.0));
  const auto s = make_resonant_gaussian(3, kPi2, eta, 4);
  EXPECT_EQ(s.j, 1);
  const double expected = 2.0 * (1.0 - std::cos(std::numbers::pi / 4)) * kPi2 * 16.0 / kPi2;
  EXPECT_NEAR(s.lambda, expected, 1e-12);
  EXPECT_GE(s.lambda, 1.0);
  EXPECT_LE(s.lambda, kPi2);

  EXPECT_THROW(make_resonant_gaussian(3, 100.0, 10.0, 2), std::domain_error);
  EXPECT_THROW(make_resonant_gaussian(3, 100.0, 1.0, 1), std::domain_error);
}

TEST(ResonantGaussian, LambdaScaleMovesOffResonance) {
  const auto r = make_resonant_gaussian(2, 100.0, 1.0, 2, 1.001);
  EXPECT_NEAR(r.lambda, 2.002, 1e-12);
  EXPECT_EQ(r.target.dimension(), 2);
}

TEST(CosineHard, Examples) {
  const double kappa = 30.0, h = 0.004;
  const auto& s = make_cosine_hard(4, kappa, h).coordinate(1);
  EXPECT_EQ(s.derivative(0.0), 0.0);
  const double c = std::sqrt(h) * std::numbers::pi;
  EXPECT_NEAR(s.value(c), kappa / 3 * h * kPi2 + kappa * h / 3, 1e-14);
  const auto& flat = make_cosine_hard(2, 3.0, 0.7).coordinate(1);
  for (int i = -500; i <= 500; ++i) {
    const double f2 = flat.second_derivative(i * 0.01);
    EXPECT_GE(f2, 1.0 - 1e-15);
    EXPECT_LE(f2, 3.0 + 1e-15);
  }
  EXPECT_THROW(make_cosine_hard(3, 2.0, 0.1), std::domain_error);
}

TEST(Target, GradientMatchesFiniteDifferences) {
  auto d = RandomStream(21, 0).draws(0, DrawKind::witness);
  const std::vector<Target> targets = {make_hard_quadratic(5, 40.0), make_hqc(6, 50.0),
                                       make_resonant_gaussian(4, 100.0, 0.7, 3).target,
                                       make_cosine_hard(6, 80.0, 0.002), make_gaussian_iso(3)};
  for (const auto& t : targets) {
    for (int rep = 0; rep < 20; ++rep) {
      Point x(t.dimension());
      for (Index i = 0; i < x.size(); ++i) x[i] = 0.5 * d.normal();
      expect_gradient_matches_differences(t, x);
    }
  }
}

TEST(Target, DimensionMismatchThrows) {
  EXPECT_THROW(make_gaussian_iso(3).potential(Point::Zero(2)), std::invalid_argument);
  EXPECT_THROW(make_gaussian_iso(3).gradient(Point::Zero(4)), std::invalid_argument);
}

TEST(Target, CurvatureBounds) {
  const Target t = make_cosine_hard(5, 60.0, 0.01);
  EXPECT_DOUBLE_EQ(t.curvature_lo(), 1.0);
  EXPECT_DOUBLE_EQ(t.curvature_hi(), 60.0);
  EXPECT_THROW(t.quadratic_diagonal(), std::domain_error);
}

TEST(ExactSampler, EmptyRequest) {
  EXPECT_TRUE(exact_sample_stationary(make_gaussian_iso(2), 0, RandomStream(1, 0)).empty());
}

TEST(ExactSampler, GaussianVariancePerCoordinate) {
  const Target t = make_hard_quadratic(3, 25.0);
  constexpr std::size_t n = 100000;
  const auto xs = exact_sample_stationary(t, n, RandomStream(22, 0));
  for (Index i = 0; i < 3; ++i) {
    RunningMoments m;
    for (const auto& x : xs) m.push(x[i]);
    const double var = i == 0 ? 1.0 : 1.0 / 25.0;
    EXPECT_NEAR(m.variance(), var, 3.0 * var * std::sqrt(2.0 / n)) << i;
    EXPECT_NEAR(m.mean(), 0.0, 3.0 * std::sqrt(var / n)) << i;
  }
}

TEST(ExactSampler, CosineMomentMatchesQuadrature) {
  const double kappa = 40.0, h = 0.01;
  const Target t = make_cosine_hard(2, kappa, h);
  const auto& s = t.coordinate(1);
  const auto xs = exact_sample_stationary(t, 100000, RandomStream(23, 0));
  RunningMoments m;
  for (const auto& x : xs) m.push(std::cos(x[1] / std::sqrt(h)));
  const double oracle = cosine_marginal_expectation(s, [&](double c) { return std::cos(c / std::sqrt(h)); });
  EXPECT_NEAR(m.mean(), oracle, 3.0 * m.standard_error());
}

TEST(ExactSampler, CosineDistributionKolmogorovSmirnov) {
  // Empirical CDF against the quadrature CDF on a fine grid; the grid
  // supremum is a lower bound on the KS statistic, so the 1% critical value
  // applies conservatively.
  const auto s = CoordinateSpec::cosine(12.0, 0.05);
  auto d = RandomStream(24, 0).draws(0, DrawKind::stationary);
  constexpr int n = 20000;
  std::vector<double> xs(n);
  for (double& x : xs) x = sample_coordinate(s, d);
  std::sort(xs.begin(), xs.end());
  double sup = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double c = -1.5 + 3.0 * i / 400.0;
    const double empirical =
        static_cast<double>(std::upper_bound(xs.begin(), xs.end(), c) - xs.begin()) / n;
    sup = std::max(sup, std::abs(empirical - marginal_mass(s, -10.0, c)));
  }
  EXPECT_LE(sup, 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST(ExactSampler, GuardOnLargeCosineAmplitude) {
  const auto s = CoordinateSpec::cosine(3.0, 100.0);  // amplitude 100
  auto d = RandomStream(1, 0).draws(0, DrawKind::stationary);
  EXPECT_THROW(sample_coordinate(s, d), GuardError);
}

TEST(MarginalMass, QuadraticAndCosineNormalization) {
  const auto q = CoordinateSpec::quadratic(4.0);
  EXPECT_NEAR(marginal_mass(q, -0.5, 0.5), std::erf(0.5 * std::sqrt(2.0)), 1e-14);
  const auto c = CoordinateSpec::cosine(50.0, 0.002);
  EXPECT_NEAR(marginal_mass(c, -10.0, 10.0), 1.0, 1e-10);
  EXPECT_NEAR(marginal_mass(c, -10.0, 0.0), 0.5, 1e-10);
  EXPECT_EQ(marginal_mass(c, 1.0, 0.5), 0.0);
}
