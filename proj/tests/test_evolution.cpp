#include <gtest/gtest.h>

#include "fujita/evolution.hpp"
#include "fujita/families.hpp"
#include "fujita/steady_states.hpp"

using namespace fujita;

namespace {

RadialProfile gaussian(GridPtr g, double a, double w) {
  return RadialProfile::sample(std::move(g), [=](double r) { return a * std::exp(-r * r / w); });
}

}  // namespace

TEST(Evolution, HeatKernelWithoutReaction) {
  auto cfg = default_config(20.0, 1.0, 2048);
  cfg.nonlinearity = false;
  cfg.rtol = 1e-7;
  cfg.early_stop = false;
  const auto run = evolve({3, 2.0}, gaussian(cfg.grid, 1.0, 1.0), cfg);
  ASSERT_EQ(run.snapshots.back().t, 1.0);
  // e^{-r²} evolves into (1+4t)^{-3/2} e^{-r²/(1+4t)} in three dimensions.
  double err = 0.0;
  const auto& u = run.snapshots.back().u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = (*cfg.grid)[i];
    err = std::max(err, std::fabs(u[i] - std::pow(5.0, -1.5) * std::exp(-r * r / 5.0)));
  }
  EXPECT_LT(err, 1e-4);
}

TEST(Evolution, ConstantDataBlowsUpAtOdeTime) {
  // u' = u², u(0) = 1 blows up at T = 1.
  auto cfg = default_config(10.0, 2.0, 512);
  const auto run = evolve({3, 2.0}, RadialProfile::sample(cfg.grid, [](double) { return 1.0; }), cfg);
  ASSERT_EQ(run.fate.tag, FateTag::BlowUp);
  ASSERT_TRUE(run.fate.T_est);
  EXPECT_NEAR(*run.fate.T_est, 1.0, 0.05);
  EXPECT_EQ(run.termination, Termination::BlowUp);
}

TEST(Evolution, SmallDataDecays) {
  auto cfg = default_config(100.0, 500.0, 1024);
  const auto run = evolve({3, 5.0}, gaussian(cfg.grid, 0.3, 1.0), cfg);
  EXPECT_EQ(run.fate.tag, FateTag::GlobalDecay);
  EXPECT_LT(run.supnorm_series.back(), run.supnorm_series.front());
}

TEST(Evolution, ComparisonPrinciple) {
  const Params P{3, 5.0};
  auto cfg = default_config(40.0, 20.0, 1024);
  for (int k = 1; k <= 8; ++k) cfg.snapshot_times.push_back(0.25 * k * k);
  const auto lo = gaussian(cfg.grid, 0.5, 1.0);
  const auto hi = gaussian(cfg.grid, 0.7, 2.0);
  for (std::size_t i = 0; i < lo.size(); ++i) ASSERT_LE(lo[i], hi[i]);
  const auto runs = evolve_batch(P, {lo, hi}, cfg);
  ASSERT_EQ(runs[0].snapshots.size(), runs[1].snapshots.size());
  for (std::size_t k = 0; k < runs[0].snapshots.size(); ++k) {
    const auto& a = runs[0].snapshots[k].u;
    const auto& b = runs[1].snapshots[k].u;
    const double tol = 1e-8 * detail::sup_abs(b);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_LE(a[i], b[i] + tol) << k << " " << i;
  }
}

TEST(Evolution, RadialMonotonicityIsPreserved) {
  const Params P{3, 5.0};
  auto cfg = default_config(40.0, 10.0, 1024);
  cfg.snapshot_times = {0.01, 0.1, 1.0, 5.0};
  const auto u0 = make_plateau_ramp(0.95, 2.0, cfg.grid);
  ASSERT_TRUE(u0.is_monotone());
  const auto run = evolve(P, u0, cfg);
  for (const auto& s : run.snapshots) {
    const double tol = 1e-8 * detail::sup_abs(s.u);
    for (std::size_t i = 1; i < s.u.size(); ++i) ASSERT_LE(s.u[i], s.u[i - 1] + tol) << s.t;
  }
}

TEST(Evolution, RescaledMatchesPhysical) {
  const Params P{3, 5.0};
  auto phys = default_config(30.0, 3.0, 2048);
  phys.snapshot_times = {0.5, 1.0, 2.0};
  auto resc = phys;
  resc.mode = Mode::Rescaled;
  resc.t_max = std::log(4.0);
  resc.snapshot_times = {std::log(1.5), std::log(2.0), std::log(3.0)};
  const auto u0 = gaussian(phys.grid, 0.6, 1.0);
  const auto a = evolve(P, u0, phys);
  const auto b = evolve(P, u0, resc);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const double t = a.snapshots[k].t;
    EXPECT_NEAR(std::exp(b.snapshots[k].t) - 1.0, t, 1e-12);
    const auto w = b.snapshot_profile(k);
    const double scale = std::pow(t + 1.0, -1.0 / (P.p - 1.0));
    const double sq = std::sqrt(t + 1.0);
    double err = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < a.snapshots[k].u.size(); ++i) {
      const double r = (*phys.grid)[i];
      if (r / sq > phys.grid->r_max()) break;
      err = std::max(err, std::fabs(a.snapshots[k].u[i] - scale * w.at(r / sq)));
      sup = std::max(sup, std::fabs(a.snapshots[k].u[i]));
    }
    EXPECT_LT(err / sup, 1e-2) << "t=" << t;
  }
}

TEST(Evolution, SturmSeriesNeverIncreases) {
  const Params P{3, 5.0};
  auto cfg = default_config(40.0, 10.0, 1024);
  cfg.snapshot_times = {0.01, 0.05, 0.2, 1.0, 3.0};
  const auto a = gaussian(cfg.grid, 1.0, 1.0);
  const auto b = gaussian(cfg.grid, 0.5, 4.0);
  const auto runs = evolve_batch(P, {a, b, a}, cfg);
  const auto s = sturm_monitor(runs[0], runs[1]);
  EXPECT_FALSE(s.increased);
  EXPECT_EQ(s.z.front(), 1);
  for (std::size_t k = 1; k < s.z.size(); ++k) EXPECT_LE(s.z[k], s.z[k - 1]);
  for (int z : sturm_monitor(runs[0], runs[2]).z) EXPECT_EQ(z, 0);
}

TEST(Evolution, BalanceKeepsSingularTailStationary) {
  const Params P{11, 8.0};
  auto drift = [&](bool balanced) {
    auto cfg = default_config(100.0, 1.0, 1024);
    cfg.far_field = FarField::SingularTail;
    if (balanced) cfg.balance_from = 1.0;
    const auto u0 = make_ini_gu(P, 0.0, 0.5, cfg.grid);
    const auto& u = evolve(P, u0, cfg).snapshots.back().u;
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if ((*cfg.grid)[i] >= 40.0) d = std::max(d, std::fabs(u[i] / u0[i] - 1.0));
    return d;
  };
  EXPECT_LT(drift(true), 1e-14);
  // The sampled u_* is not an exact discrete steady state.
  EXPECT_GT(drift(false), 1e-10);
}

TEST(Evolution, DiscreteMassOfConstants) {
  auto g = make_grid(RadialGrid::uniform(2.0, 401));
  const RadialOperator op({3, 5.0}, g, Mode::Physical);
  std::vector<double> one(g->size(), 1.0);
  // Control volumes tile the ball up to the last face.
  const double last_face = 0.5 * ((*g)[g->size() - 2] + (*g)[g->size() - 1]);
  EXPECT_NEAR(discrete_mass(op, one, 3), 4.0 * std::acos(-1.0) / 3.0 * std::pow(last_face, 3), 1e-9);
}

TEST(Evolution, StringRoundTrips) {
  for (auto f : {FarField::Frozen, FarField::SingularTail})
    EXPECT_EQ(far_field_from_string(to_string(f)), f);
  for (auto m : {Mode::Physical, Mode::Rescaled}) EXPECT_EQ(mode_from_string(to_string(m)), m);
  for (auto t : {FateTag::BlowUp, FateTag::GlobalDecay, FateTag::GrowUp,
                 FateTag::ConvergeToSteadyState, FateTag::Oscillatory, FateTag::Undetermined})
    EXPECT_EQ(fate_tag_from_string(to_string(t)), t);
  for (auto t : {Termination::Horizon, Termination::BlowUp, Termination::Decay, Termination::Settled,
                 Termination::StepCollapse, Termination::StepBudget})
    EXPECT_EQ(termination_from_string(to_string(t)), t);
  EXPECT_THROW(far_field_from_string("open"), InvalidArgument);
  EXPECT_THROW(fate_tag_from_string("blowup"), SchemaError);
}

TEST(Evolution, ConfigValidation) {
  auto cfg = default_config(10.0, 1.0, 128);
  const auto u0 = gaussian(cfg.grid, 1.0, 1.0);
  auto bad = cfg;
  bad.t_max = 0.0;
  EXPECT_THROW(evolve({3, 5.0}, u0, bad), InvalidArgument);
  bad = cfg;
  bad.dt_min = 1.0;
  EXPECT_THROW(evolve({3, 5.0}, u0, bad), InvalidArgument);
  bad = cfg;
  bad.M_blow = 1e-9;
  EXPECT_THROW(evolve({3, 5.0}, u0, bad), InvalidArgument);
  bad = cfg;
  bad.balance_from = -1.0;
  EXPECT_THROW(evolve({3, 5.0}, u0, bad), InvalidArgument);
  auto other = gaussian(make_grid(RadialGrid::uniform(10.0, 64)), 1.0, 1.0);
  EXPECT_THROW(evolve({3, 5.0}, other, cfg), GridMismatch);
}

TEST(Evolution, MassComparisonInequality) {
  const Params P{3, 5.0};
  auto cfg = default_config(40.0, 20.0, 1024);
  const auto lower = gaussian(cfg.grid, 0.3, 1.0);
  const auto wide = gaussian(cfg.grid, 0.05, 4.0);
  const auto heavy = gaussian(cfg.grid, 0.5, 1.0);
  const auto m = mass_comparison(P, lower, wide, heavy, cfg);
  EXPECT_TRUE(m.verdict.hypotheses_ok);
  EXPECT_TRUE(m.verdict.f_positive);
  EXPECT_TRUE(m.verdict.inequality_holds);
  EXPECT_GT(m.verdict.window_steps, 10u);
  // Grönwall with c_t >= 0: f never drops below f(0).
  for (double f : m.series.f) EXPECT_GE(f, m.series.f.front() * (1 - 1e-9));
  for (double c : m.series.c) EXPECT_GE(c, 0.0);
  EXPECT_THROW(mass_comparison(P, lower, heavy, heavy, cfg), InvalidArgument);
  EXPECT_THROW(mass_comparison(P, lower, heavy, wide, cfg), InvalidArgument);
}
