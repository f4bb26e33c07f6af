#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "fujita/families.hpp"
#include "fujita/profile.hpp"

using namespace fujita;

TEST(Grid, UniformAndGeometric) {
  const auto u = RadialGrid::uniform(10.0, 101);
  EXPECT_EQ(u[0], 0.0);
  EXPECT_EQ(u.r_max(), 10.0);
  EXPECT_NEAR(u.min_spacing(), 0.1, 1e-12);

  const auto g = RadialGrid::geometric(200.0, 512, 0.01);
  EXPECT_EQ(g.r_max(), 200.0);
  EXPECT_GT(g.ratio(), 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  EXPECT_NEAR(g[1], 0.01, 1e-9);

  const auto d = RadialGrid::default_for(40.0, 1024);
  EXPECT_NEAR(d[1], 0.25 * 40.0 / 1023.0, 1e-12);
}

TEST(Grid, Errors) {
  EXPECT_THROW(RadialGrid::uniform(1.0, 8), InvalidArgument);
  EXPECT_THROW(RadialGrid::uniform(-1.0, 64), InvalidArgument);
  EXPECT_THROW(RadialGrid::geometric(1.0, 64, 1.0), InvalidArgument);
  EXPECT_THROW(RadialGrid::from_nodes({0.5, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}),
               InvalidArgument);
  std::vector<double> r(16);
  for (int i = 0; i < 16; ++i) r[i] = i;
  r[5] = r[4];
  EXPECT_THROW(RadialGrid::from_nodes(r), InvalidArgument);
}

TEST(Profile, RejectsNegativeAndNan) {
  auto g = make_grid(RadialGrid::uniform(1.0, 16));
  std::vector<double> v(16, 1.0);
  v[3] = -1e-3;
  EXPECT_THROW(RadialProfile(g, v), InvalidArgument);
  v[3] = std::nan("");
  EXPECT_THROW(RadialProfile(g, v), InvalidArgument);
  EXPECT_THROW(RadialProfile(g, std::vector<double>(15, 1.0)), InvalidArgument);
}

TEST(Profile, MonotoneFlagAndInterpolation) {
  auto g = make_grid(RadialGrid::uniform(1.0, 16));
  const auto f = RadialProfile::sample(g, [](double r) { return 1.0 - r; });
  EXPECT_TRUE(check_X1(f));
  EXPECT_NEAR(f.at(0.37), 0.63, 1e-14);
  EXPECT_EQ(f.at(5.0), 0.0);
  const auto h = RadialProfile::sample(g, [](double r) { return r; });
  EXPECT_FALSE(check_X1(h));
}

TEST(Profile, CsvRoundTripIsExact) {
  auto g = make_grid(RadialGrid::default_for(30.0, 300));
  const auto f = RadialProfile::sample(g, [](double r) { return std::exp(-r) / 3.0; });
  const auto path = (std::filesystem::temp_directory_path() / "fujita_roundtrip.csv").string();
  write_profile_csv(path, f);
  const auto s = read_profile_csv(path);
  ASSERT_EQ(s.r.size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(s.r[i], g->nodes()[i]);
    EXPECT_EQ(s.value[i], f[i]);
  }
  const auto back = profile_from_samples(s, g);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(back[i], f[i]);
  std::filesystem::remove(path);
}

TEST(Profile, CsvErrors) {
  const std::string missing = "/nonexistent/dir/profile.csv";
  try {
    read_profile_csv(missing);
    FAIL();
  } catch (const MissingArtifact& e) {
    EXPECT_EQ(e.path(), missing);
  }
  std::istringstream bad_header("x,y\n0,1\n1,2\n");
  EXPECT_THROW(read_profile_csv(bad_header), SchemaError);
  std::istringstream not_increasing("r,value\n0,1\n0,2\n");
  EXPECT_THROW(read_profile_csv(not_increasing), SchemaError);
  std::istringstream garbage("r,value\n0,1\n1,abc\n");
  EXPECT_THROW(read_profile_csv(garbage), SchemaError);
}

TEST(ZeroNumber, CountsStrictSignChanges) {
  auto g = make_grid(RadialGrid::uniform(10.0, 1001));
  const auto f = RadialProfile::sample(g, [](double r) { return 2.0 + std::sin(r); });
  const auto c = RadialProfile::sample(g, [](double) { return 2.0; });
  EXPECT_EQ(zero_number(f, c), 3);  // zeros of sin at π, 2π, 3π
  EXPECT_EQ(zero_number(f, c, Window{0.0, 5.0}), 1);
  EXPECT_EQ(zero_number(f, f), 0);
  EXPECT_THROW(zero_number(f, c, Window{3.0, 1.0}), InvalidArgument);
  auto other = make_grid(RadialGrid::uniform(10.0, 500));
  EXPECT_THROW(zero_number(f, RadialProfile::sample(other, [](double) { return 1.0; })),
               GridMismatch);
}

TEST(ZeroNumber, TouchingIsNotACrossing) {
  const std::vector<double> r{0, 1, 2, 3, 4};
  EXPECT_EQ(count_sign_changes(std::vector<double>{1, 0, 1, 0, 1}, r, 0.0), 0);
  EXPECT_EQ(count_sign_changes(std::vector<double>{1, 0, 0, -1, -2}, r, 0.0), 1);
  EXPECT_EQ(count_sign_changes(std::vector<double>{1, 1e-14, -1e-14, 1, 1}, r, 1e-12), 0);
}

TEST(Quadrature, BallVolume) {
  auto g = make_grid(RadialGrid::uniform(2.0, 4001));
  const auto ind = RadialProfile::sample(g, [](double r) { return r <= 1.0 ? 1.0 : 0.0; });
  EXPECT_NEAR(lebesgue_mass(ind, 3), 4.0 / 3.0 * std::numbers::pi, 2e-2);
  const auto gauss = RadialProfile::sample(g, [](double r) { return std::exp(-r * r); });
  auto wide = make_grid(RadialGrid::uniform(12.0, 6001));
  const auto gw = RadialProfile::sample(wide, [](double r) { return std::exp(-r * r); });
  EXPECT_NEAR(lebesgue_mass(gw, 3), std::pow(std::numbers::pi, 1.5), 1e-5);
  EXPECT_NEAR(sphere_area(2), 2.0 * std::numbers::pi, 1e-14);
  (void)gauss;
}

TEST(Resample, PreservesMonotonicityAndValues) {
  auto a = make_grid(RadialGrid::default_for(20.0, 200));
  auto b = make_grid(RadialGrid::uniform(20.0, 777));
  const auto f = RadialProfile::sample(a, [](double r) { return 1.0 / (1.0 + r * r); });
  const auto h = resample(f, b);
  EXPECT_TRUE(h.is_monotone());
  for (std::size_t i = 0; i < h.size(); i += 37) {
    const double r = b->nodes()[i];
    EXPECT_NEAR(h[i], 1.0 / (1.0 + r * r), 2e-4);
  }
  const auto m = merge_grids(*a, *b);
  EXPECT_GE(m->size(), b->size());
}

// ---------------------------------------------------------------------------
// Families

TEST(Families, IniDecayPlateauAndTail) {
  const Params P{3, 5.0};
  const double L = 0.82430479;
  auto g = make_grid(RadialGrid::default_for(100.0, 2048));
  const double r1 = L * L;  // W(r_1) = 1
  for (double alpha : {0.0, 0.3, 2.0}) {
    const auto f = make_ini_decay(P, alpha, L, g);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = g->nodes()[i];
      if (r <= r1 + alpha) EXPECT_EQ(f[i], 1.0);
      if (r >= r1) EXPECT_GE(f[i], L * std::pow(r, -0.5) * (1 - 1e-12));
    }
    EXPECT_TRUE(f.is_monotone());
    EXPECT_NEAR(f.values().back(), L * std::pow(100.0, -0.5), 1e-12);
  }
  // α = 0 is min(1, W).
  const auto f0 = make_ini_decay(P, 0.0, L, g);
  for (std::size_t i = 1; i < f0.size(); ++i)
    EXPECT_NEAR(f0[i], std::min(1.0, L * std::pow(g->nodes()[i], -0.5)), 1e-12);
}

TEST(Families, IniGuPlateauEqualsM) {
  const Params P{11, 8.0};
  auto g = make_grid(RadialGrid::default_for(50.0, 1024));
  const double R = singular_level_radius(P, 0.5);
  EXPECT_NEAR(singular_state(P, R), 0.5, 1e-12);
  const auto f = make_ini_gu(P, 0.7, 0.5, g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = g->nodes()[i];
    if (r <= R + 0.7) EXPECT_EQ(f[i], 0.5);
    else EXPECT_GE(f[i], singular_state(P, r) * (1 - 1e-12));
  }
  EXPECT_THROW(make_ini_gu({3, 2.0}, 0.1, 0.5, g), InvalidArgument);
}

TEST(Families, ConvexPairEndpoints) {
  const Params P{3, 5.0};
  auto g = make_grid(RadialGrid::default_for(30.0, 512));
  const auto u1 = steady_values(P, 1.0, g->nodes());
  const auto ub = steady_values(P, 0.5, g->nodes());
  const auto top = make_convex_pair(P, 1.0, 0.5, g);
  const auto bottom = make_convex_pair(P, 0.0, 0.5, g);
  EXPECT_EQ(top[0], u1[0]);
  EXPECT_EQ(bottom[0], ub[0]);
  EXPECT_NEAR(top.values().back(), 0.5 * (u1.back() + ub.back()), 1e-15);
  EXPECT_THROW(make_convex_pair({3, 5.5}, 0.5, 0.5, g), InvalidArgument);
  EXPECT_THROW(make_convex_pair(P, 1.5, 0.5, g), InvalidArgument);
}

TEST(Families, PlateauRampAndTent) {
  auto g = make_grid(RadialGrid::uniform(10.0, 1001));
  const auto f = make_plateau_ramp(0.4, 3.0, g);
  EXPECT_EQ(f.at(3.0), 0.4);
  EXPECT_NEAR(f.at(3.5), 0.2, 1e-12);
  EXPECT_EQ(f.at(4.0), 0.0);
  const auto t = make_tent(2.0, 1.0, 3.0, g);
  EXPECT_EQ(t.at(0.5), 2.0);
  EXPECT_NEAR(t.at(2.0), 1.0, 1e-12);
  EXPECT_THROW(make_tent(1.0, 2.0, 1.0, g), InvalidArgument);
  EXPECT_THROW(make_plateau_ramp(-1.0, 1.0, g), InvalidArgument);
}

TEST(Families, StringRoundTrip) {
  for (auto k : {FamilyKind::PhiEll, FamilyKind::IniDecay, FamilyKind::IniGU, FamilyKind::ConvexPair,
                 FamilyKind::PlateauRamp, FamilyKind::ScaleSteady, FamilyKind::Custom})
    EXPECT_EQ(family_kind_from_string(to_string(k)), k);
  EXPECT_THROW(family_kind_from_string("nope"), InvalidArgument);
}

// Every family is nondecreasing in its parameter; checked on random pairs.
TEST(Families, MonotoneInLambdaProperty) {
  auto g = make_grid(RadialGrid::default_for(60.0, 512));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<std::pair<FamilySpec, std::pair<double, double>>> cases;
  FamilySpec f;
  f.params = {3, 5.0};
  f.kind = FamilyKind::PhiEll;
  cases.push_back({f, {0.1, 3.0}});
  f.kind = FamilyKind::IniDecay;
  f.L_star = 0.8243;
  cases.push_back({f, {0.0, 5.0}});
  f.kind = FamilyKind::ConvexPair;
  cases.push_back({f, {0.0, 1.0}});
  f.kind = FamilyKind::PlateauRamp;
  f.eps = 0.7;
  cases.push_back({f, {0.1, 20.0}});
  f.kind = FamilyKind::ScaleSteady;
  cases.push_back({f, {0.0, 2.0}});
  FamilySpec gu;
  gu.params = {11, 8.0};
  gu.kind = FamilyKind::IniGU;
  gu.m = 0.5;
  cases.push_back({gu, {0.0, 5.0}});
  gu.floor = make_ini_gu(gu.params, 0.3, 0.5, g);
  gu.m = 0.2;
  cases.push_back({gu, {0.0, 5.0}});
  for (const auto& [fam, range] : cases) {
    for (int k = 0; k < 25; ++k) {
      double a = range.first + (range.second - range.first) * U(rng);
      double b = range.first + (range.second - range.first) * U(rng);
      if (a > b) std::swap(a, b);
      EXPECT_TRUE(family_ordered(fam, a, b, g)) << to_string(fam.kind) << " " << a << " " << b;
    }
  }
}

TEST(Families, FloorIsMaxMerged) {
  auto g = make_grid(RadialGrid::uniform(10.0, 256));
  FamilySpec f;
  f.kind = FamilyKind::PlateauRamp;
  f.eps = 0.3;
  f.floor = make_tent(1.0, 0.5, 1.5, g);
  const auto u = make_family(f, 4.0, g);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i], std::max((*f.floor)[i], make_plateau_ramp(0.3, 4.0, g)[i]));
}
