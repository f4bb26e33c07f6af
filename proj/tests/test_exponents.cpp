#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <random>

#include "fujita/exponents.hpp"

using namespace fujita;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Big oracle_pJL(int n) {
  const Big nn = n;
  return 1 + 4 * (nn - 4 + 2 * sqrt(nn - 1)) / ((nn - 2) * (nn - 10));
}

Big oracle_L(int n, const Big& p) {
  return pow(2 * ((n - 2) * p - n) / ((p - 1) * (p - 1)), 1 / (p - 1));
}

double rel(double a, const Big& b) { return static_cast<double>(abs((Big(a) - b) / b)); }

}  // namespace

TEST(Exponents, ClosedFormsInDimensionThree) {
  const auto e = compute_exponents({3, 2.0});
  EXPECT_DOUBLE_EQ(e.p_F, 1.0 + 2.0 / 3.0);
  EXPECT_EQ(e.p_sg.value(), 3.0);
  EXPECT_EQ(e.p_S.value(), 5.0);
  EXPECT_TRUE(e.p_JL.is_infinite());
}

TEST(Exponents, AgainstExtendedPrecision) {
  EXPECT_LT(rel(compute_exponents({11, 8.0}).p_JL.value(), oracle_pJL(11)), 1e-12);
  EXPECT_LT(rel(compute_exponents({3, 5.0}).L, oracle_L(3, Big(5))), 1e-12);
  EXPECT_LT(rel(compute_exponents({11, 8.0}).L, oracle_L(11, Big(8))), 1e-12);
  EXPECT_NEAR(compute_exponents({3, 5.0}).L, std::sqrt(0.5), 1e-15);
}

TEST(Exponents, RandomParamsMatchOracle) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dim(3, 30);
  std::uniform_real_distribution<double> frac(0.01, 3.0);
  for (int k = 0; k < 200; ++k) {
    const int n = dim(rng);
    const double p = 1.0 + 2.0 / (n - 2) + frac(rng);
    const auto e = compute_exponents({n, p});
    EXPECT_LT(rel(e.L, oracle_L(n, Big(p))), 1e-13) << n << " " << p;
    if (n > 10) EXPECT_LT(rel(e.p_JL.value(), oracle_pJL(n)), 1e-14);
  }
}

TEST(Exponents, OrderingOfCriticalExponents) {
  for (int n = 3; n <= 40; ++n) {
    const auto e = compute_exponents({n, 2.0});
    EXPECT_LT(e.p_F, e.p_sg.value());
    EXPECT_LT(e.p_sg.value(), e.p_S.value());
    if (n > 10) EXPECT_LT(e.p_S.value(), e.p_JL.value());
  }
}

TEST(Exponents, NoSingularStateAtOrBelowPsg) {
  EXPECT_EQ(compute_exponents({3, 3.0}).L, 0.0);
  EXPECT_EQ(compute_exponents({3, 2.0}).L, 0.0);
  EXPECT_EQ(compute_exponents({2, 5.0}).L, 0.0);
  EXPECT_FALSE(has_singular_state({3, 3.0}));
  EXPECT_THROW(singular_state({3, 2.0}, 1.0), InvalidArgument);
}

TEST(Exponents, SingularStateSolvesTheOde) {
  for (const Params P : {Params{3, 5.0}, Params{11, 8.0}, Params{5, 2.0}}) {
    for (double r : {0.1, 1.0, 7.0, 100.0}) {
      const double m = P.tail_exponent();
      const double u = singular_state(P, r);
      const double up = -m * u / r;
      const double upp = m * (m + 1) * u / (r * r);
      const double res = upp + (P.n - 1) / r * up + std::pow(u, P.p);
      EXPECT_LT(std::fabs(res) / std::pow(u, P.p), 1e-12);
    }
  }
}

TEST(Exponents, Regimes) {
  EXPECT_EQ(classify_regime({3, 2.0}).tag, RegimeTag::Subcritical);
  EXPECT_EQ(classify_regime({3, 5.0}).tag, RegimeTag::Critical);
  EXPECT_EQ(classify_regime({3, 5.5}).tag, RegimeTag::Intermediate);
  EXPECT_EQ(classify_regime({11, 8.0}).tag, RegimeTag::Supercritical);
  EXPECT_EQ(classify_regime({11, 6.5}).tag, RegimeTag::Intermediate);
  EXPECT_FALSE(classify_regime({3, 1.5}).admissible);
  EXPECT_FALSE(classify_regime({3, 5.0 / 3.0}).admissible);
  EXPECT_TRUE(classify_regime({3, 1.7}).admissible);
  EXPECT_EQ(classify_regime({3, 2.0}, RegimeTag::Supercritical).tag, RegimeTag::Supercritical);
}

TEST(Exponents, ToleranceAtPs) {
  EXPECT_TRUE(is_sobolev_critical({3, 5.0 + 1e-13}));
  EXPECT_FALSE(is_sobolev_critical({3, 5.0 + 1e-9}));
  EXPECT_TRUE(at_or_above_jl({11, compute_exponents({11, 2.0}).p_JL.value()}));
  EXPECT_FALSE(at_or_above_jl({10, 100.0}));
  EXPECT_TRUE(at_or_above_sobolev({3, 5.0}));
}

TEST(Exponents, Validation) {
  EXPECT_THROW(validate({0, 2.0}), InvalidArgument);
  EXPECT_THROW(validate({3, 1.0}), InvalidArgument);
  EXPECT_THROW(validate({3, std::numeric_limits<double>::infinity()}), InvalidArgument);
  EXPECT_THROW(compute_exponents({3, std::nan("")}), InvalidArgument);
}

TEST(ExtendedRealTest, Infinity) {
  const auto inf = ExtendedReal::infinity();
  EXPECT_TRUE(inf.is_infinite());
  EXPECT_THROW(inf.value(), InvalidArgument);
  EXPECT_EQ(inf.to_string(), "inf");
  EXPECT_EQ(ExtendedReal::finite(2.5).value(), 2.5);
  EXPECT_EQ(inf, ExtendedReal::infinity());
  EXPECT_FALSE(inf == ExtendedReal::finite(1e308));
}
