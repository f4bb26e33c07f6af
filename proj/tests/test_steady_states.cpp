#include <gtest/gtest.h>

#include <random>

#include "fujita/ode.hpp"
#include "fujita/steady_states.hpp"

using namespace fujita;

TEST(Ode, ExponentialAndOscillator) {
  DormandPrince<2> dp({1e-12, 1e-14});
  double t = 0.0;
  OdeState<2> y{1.0, 0.0};
  dp.integrate_to([](double, const OdeState<2>& z) { return OdeState<2>{z[1], -z[0]}; }, t, y,
                  10.0);
  EXPECT_NEAR(y[0], std::cos(10.0), 1e-9);
  EXPECT_NEAR(y[1], -std::sin(10.0), 1e-9);

  DormandPrince<1> e({1e-12, 1e-14});
  double s = 0.0;
  OdeState<1> x{1.0};
  e.integrate_to([](double, const OdeState<1>& z) { return OdeState<1>{-2.0 * z[0]}; }, s, x, 3.0);
  EXPECT_NEAR(x[0], std::exp(-6.0), 1e-12);
}

TEST(SteadyStates, InstantonAtSobolevExponent) {
  const Params P{3, 5.0};
  const double alpha = std::pow(3.0, 0.25);
  const auto s = shoot_steady(P, alpha, 10.0, 2048);
  const auto r = s.profile.grid().nodes();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double ex = instanton(3, alpha, r[i]);
    EXPECT_LT(std::fabs(s.profile[i] - ex) / ex, 1e-6) << r[i];
  }
  EXPECT_NEAR(instanton(3, alpha, 1.0), alpha / std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(s.positivity_radius.is_infinite());
}

TEST(SteadyStates, ScalingLawProperty) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> la(std::log(0.2), std::log(5.0));
  for (const Params P : {Params{3, 5.0}, Params{11, 8.0}, Params{3, 5.5}}) {
    const std::vector<double> r{0.0, 0.05, 0.3, 1.0, 2.5, 6.0};
    const auto u1 = [&](double x) {
      const double rr[1] = {x};
      return steady_values(P, 1.0, rr)[0];
    };
    for (int k = 0; k < 10; ++k) {
      const double a = std::exp(la(rng));
      const auto ua = steady_values(P, a, r);
      const double s = std::pow(a, 0.5 * (P.p - 1.0));
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double ex = a * u1(s * r[i]);
        EXPECT_LT(std::fabs(ua[i] - ex) / ex, 1e-8) << P.n << " " << P.p << " a=" << a;
      }
    }
  }
}

TEST(SteadyStates, SubcriticalSolutionsChangeSign) {
  const auto s = shoot_steady({3, 3.0}, 1.0, 30.0, 1024);
  ASSERT_TRUE(s.positivity_radius.is_finite());
  EXPECT_GT(s.positivity_radius.value(), 1.0);
  for (std::size_t i = 0; i < s.profile.size(); ++i)
    if (s.profile.grid()[i] > s.positivity_radius.value()) EXPECT_EQ(s.profile[i], 0.0);
}

TEST(SteadyStates, OrderedAboveJosephLundgren) {
  const Params P{11, 8.0};
  EXPECT_EQ(intersection_profile(P, 1.0, AgainstSingular{}, 1000.0), 0);
  EXPECT_EQ(intersection_profile(P, 1.0, AgainstSteady{0.5}, 100.0), 0);
  const auto u = shoot_steady(P, 1.0, 100.0, 1024);
  for (std::size_t i = 1; i < u.profile.size(); ++i)
    EXPECT_LT(u.profile[i], singular_state(P, u.profile.grid()[i]));
}

TEST(SteadyStates, IntersectionsBelowJosephLundgren) {
  // Crossings near r = 0.55, 5.3 and 606.
  EXPECT_GE(intersection_profile({3, 5.5}, 1.0, AgainstSingular{}, 1000.0), 3);
  EXPECT_GE(intersection_profile({3, 5.5}, 1.0, AgainstSingular{}, 10.0), 2);
  EXPECT_GE(intersection_profile({3, 5.0}, 1.0, AgainstSingular{}, 100.0), 1);
  EXPECT_EQ(intersection_profile({3, 5.0}, 1.0, AgainstSteady{0.5}, 100.0), 1);
}

TEST(SteadyStates, IntersectionScaleInvariance) {
  // u_a vs u_* is a rescaling of u_1 vs u_*.
  const Params P{3, 5.5};
  const int z1 = intersection_profile(P, 1.0, AgainstSingular{}, 50.0);
  const double a = 2.0, s = std::pow(a, 0.5 * (P.p - 1.0));
  EXPECT_EQ(intersection_profile(P, a, AgainstSingular{}, 50.0 / s), z1);
}

TEST(SteadyStates, Errors) {
  EXPECT_THROW(shoot_steady({3, 5.0}, -1.0, 10.0), InvalidArgument);
  EXPECT_THROW(intersection_profile({3, 2.0}, 1.0, AgainstSingular{}, 10.0), InvalidArgument);
  EXPECT_THROW(intersection_profile({3, 5.0}, 1.0, AgainstSteady{-1.0}, 10.0), InvalidArgument);
  EXPECT_THROW(instanton(2, 1.0, 1.0), InvalidArgument);
}
