#include <gtest/gtest.h>

#include "fujita/threshold.hpp"

using namespace fujita;

namespace {

const Params kP{3, 5.0};

SolverConfig small_config() {
  auto cfg = default_config(20.0, 20.0, 256);
  return cfg;
}

FamilySpec plateau_family() {
  FamilySpec f;
  f.kind = FamilyKind::PlateauRamp;
  f.params = kP;
  f.eps = 0.95;
  return f;
}

RadialProfile gaussian(GridPtr g, double a) {
  return RadialProfile::sample(std::move(g), [=](double r) { return a * std::exp(-r * r); });
}

}  // namespace

TEST(Threshold, PlateauRampBracket) {
  const auto cfg = small_config();
  const auto b = bisect_threshold(kP, plateau_family(), {0.2, 4.0}, 0.05, 40, cfg);
  EXPECT_TRUE(b.converged);
  EXPECT_LE(b.width(), 0.05);
  EXPECT_TRUE(fates_monotone(b));
  EXPECT_GT(b.lambda_lo, 0.2);
  EXPECT_LT(b.lambda_hi, 4.0);
  // Endpoints re-evolved independently keep their fates.
  const auto fam = plateau_family();
  EXPECT_TRUE(evolve(kP, make_family(fam, b.lambda_hi, cfg.grid), cfg).fate.blow_up());
  EXPECT_FALSE(evolve(kP, make_family(fam, b.lambda_lo, cfg.grid), cfg).fate.blow_up());
  // Same inputs, same bracket.
  EXPECT_EQ(bisect_threshold(kP, plateau_family(), {0.2, 4.0}, 0.05, 40, cfg), b);
}

TEST(Threshold, BudgetExhaustion) {
  const auto b = bisect_threshold(kP, plateau_family(), {0.2, 4.0}, 1e-6, 4, small_config());
  EXPECT_FALSE(b.converged);
  EXPECT_FALSE(b.warnings.empty());
  EXPECT_LE(b.probes.size(), 4u);
}

TEST(Threshold, BracketErrors) {
  const auto cfg = small_config();
  const auto fam = plateau_family();
  EXPECT_THROW(bisect_threshold(kP, fam, {1.0, 1.0}, 0.1, 10, cfg), InvalidArgument);
  EXPECT_THROW(bisect_threshold(kP, fam, {0.2, 4.0}, 0.0, 10, cfg), InvalidArgument);
  EXPECT_THROW(bisect_threshold(kP, fam, {0.1, 0.2}, 0.01, 10, cfg), InvalidBracket);
  EXPECT_THROW(bisect_threshold(kP, fam, {3.0, 4.0}, 0.01, 10, cfg), InvalidBracket);
}

TEST(Threshold, FatesMonotoneDetectsContradiction) {
  ThresholdBracket b;
  Probe lo{1.0, {}, 1.0}, hi{2.0, {}, 1.0};
  lo.fate.tag = FateTag::BlowUp;
  hi.fate.tag = FateTag::GlobalDecay;
  b.probes = {lo, hi};
  EXPECT_FALSE(fates_monotone(b));
  std::swap(b.probes[0].fate, b.probes[1].fate);
  EXPECT_TRUE(fates_monotone(b));
}

TEST(Threshold, GlobalFates) {
  Fate f;
  for (auto t : {FateTag::GlobalDecay, FateTag::GrowUp, FateTag::ConvergeToSteadyState}) {
    f.tag = t;
    EXPECT_TRUE(global_fate(f));
  }
  for (auto t : {FateTag::BlowUp, FateTag::Oscillatory, FateTag::Undetermined}) {
    f.tag = t;
    EXPECT_FALSE(global_fate(f));
  }
}

TEST(Threshold, PerturbationAboveThresholdBlowsUp) {
  const auto cfg = small_config();
  const auto fam = plateau_family();
  const auto b = bisect_threshold(kP, fam, {0.2, 4.0}, 0.05, 40, cfg);
  const auto u0 = make_family(fam, b.lambda_hi, cfg.grid);
  const auto rep = perturbation_probe(kP, u0, gaussian(cfg.grid, 0.01), cfg, false);
  EXPECT_TRUE(rep.fate_up.blow_up());
  EXPECT_EQ(rep.verdict, PerturbationVerdict::StrongConsistent);
  EXPECT_GT(rep.bump_mass, 0.0);
  EXPECT_DOUBLE_EQ(rep.bump_height, 0.01);
}

TEST(Threshold, PerturbationErrors) {
  const auto cfg = small_config();
  const auto u0 = gaussian(cfg.grid, 0.5);
  EXPECT_THROW(perturbation_probe(kP, u0, gaussian(cfg.grid, 0.0), cfg), InvalidArgument);
  EXPECT_THROW(perturbation_probe(kP, u0, gaussian(cfg.grid, 0.6), cfg), InvalidArgument);
  const auto other = gaussian(make_grid(RadialGrid::uniform(20.0, 64)), 0.1);
  EXPECT_THROW(perturbation_probe(kP, u0, other, cfg), GridMismatch);
}
