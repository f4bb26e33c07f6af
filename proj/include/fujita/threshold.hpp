#pragma once

// Threshold search over monotone initial-data families, the PDE estimate of
// L*, and one-sided perturbation probes.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fujita/error.hpp"
#include "fujita/evolution.hpp"
#include "fujita/exponents.hpp"
#include "fujita/families.hpp"
#include "fujita/profile.hpp"
#include "fujita/self_similar.hpp"

namespace fujita {

struct Probe {
  double lambda = 0.0;
  Fate fate;
  double horizon = 0.0;  // t_max of the deciding run
  bool operator==(const Probe&) const = default;
};

struct ThresholdBracket {
  double lambda_lo = 0.0;  // non-blow-up
  double lambda_hi = 0.0;  // BlowUp
  std::vector<Probe> probes;
  bool converged = false;
  std::vector<std::string> warnings;

  double width() const { return lambda_hi - lambda_lo; }
  double midpoint() const { return 0.5 * (lambda_lo + lambda_hi); }
  bool operator==(const ThresholdBracket&) const = default;
};

struct BisectOptions {
  int max_horizon_doublings = 2;  // for Undetermined probes
};

namespace detail {

// Evolves one family member; Undetermined fates get horizon doubling.
inline Probe run_probe(const Params& params, const FamilySpec& family, double lambda,
                       SolverConfig cfg, int& budget, const BisectOptions& opt,
                       std::vector<std::string>& warnings) {
  const auto u0 = make_family(family, lambda, cfg.grid);
  Probe pr{lambda, {}, cfg.t_max};
  for (int d = 0;; ++d) {
    --budget;
    pr.fate = evolve(params, u0, cfg).fate;
    pr.horizon = cfg.t_max;
    if (pr.fate.tag != FateTag::Undetermined || d >= opt.max_horizon_doublings || budget <= 0)
      break;
    cfg.t_max *= 2.0;
  }
  if (pr.fate.tag == FateTag::Undetermined) {
    std::ostringstream w;
    w << "lambda = " << lambda << " undetermined after horizon " << pr.horizon
      << "; counted as non-blow-up";
    warnings.push_back(w.str());
  }
  return pr;
}

}  // namespace detail

/// Bisection on the blow-up predicate along `family` over [range.first, range.second].
/// `tol` bounds the final width; `budget` caps the number of evolutions.
inline ThresholdBracket bisect_threshold(const Params& params, const FamilySpec& family,
                                         std::pair<double, double> range, double tol, int budget,
                                         const SolverConfig& config,
                                         const BisectOptions& opt = {}) {
  validate(params);
  auto [lo, hi] = range;
  if (!(lo < hi)) throw InvalidArgument("bisect_threshold: need lambda_lo < lambda_hi");
  if (!(tol > 0.0)) throw InvalidArgument("bisect_threshold: tol must be > 0");
  if (!family_ordered(family, lo, hi, config.grid))
    throw InvalidArgument("bisect_threshold: family is not nondecreasing on the range");
  ThresholdBracket b;
  const auto p_lo = detail::run_probe(params, family, lo, config, budget, opt, b.warnings);
  b.probes.push_back(p_lo);
  if (p_lo.fate.blow_up())
    throw InvalidBracket("bisect_threshold: lower endpoint blows up (" + p_lo.fate.evidence + ")");
  const auto p_hi = detail::run_probe(params, family, hi, config, budget, opt, b.warnings);
  b.probes.push_back(p_hi);
  if (!p_hi.fate.blow_up())
    throw InvalidBracket("bisect_threshold: upper endpoint does not blow up (" +
                         to_string(p_hi.fate.tag) + ")");
  b.lambda_lo = lo;
  b.lambda_hi = hi;
  while (b.width() > tol && budget > 0) {
    const double mid = b.midpoint();
    const auto pr = detail::run_probe(params, family, mid, config, budget, opt, b.warnings);
    b.probes.push_back(pr);
    (pr.fate.blow_up() ? b.lambda_hi : b.lambda_lo) = mid;
  }
  b.converged = b.width() <= tol;
  if (!b.converged) b.warnings.push_back("budget exhausted before reaching tol");
  return b;
}

/// True when no probe contradicts monotone fate along the family.
inline bool fates_monotone(const ThresholdBracket& b) {
  for (const auto& a : b.probes)
    for (const auto& c : b.probes)
      if (a.lambda < c.lambda && a.fate.blow_up() && !c.fate.blow_up()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// L* from the PDE

struct PdeLStarOptions {
  double r_max = 60.0;
  std::size_t nodes = 1024;
  double s_max = 40.0;     // rescaled horizon
  double ell_lo = 0.25;    // starting bracket, expanded as needed
  double ell_hi = 1.5;
  int budget = 80;
};

/// Solver set-up for Φ_ℓ probes in rescaled variables, where the tail
/// ℓ r^{-2/(p-1)} is stationary and global solutions settle.
inline SolverConfig pde_lstar_config(const PdeLStarOptions& o = {}) {
  SolverConfig c = default_config(o.r_max, o.s_max, o.nodes);
  c.mode = Mode::Rescaled;
  c.settle_tol = 1e-6;
  return c;
}

struct PdeLStar {
  LStarResult at_m;
  LStarResult at_2m;
  ThresholdBracket bracket_m;
  ThresholdBracket bracket_2m;
  double relative_gap = 0.0;
  bool scaling_consistent = false;  // gap within the requested tolerance
};

namespace detail {

inline std::pair<ThresholdBracket, LStarResult> lstar_at(const Params& params, double m,
                                                         double tol, const SolverConfig& cfg,
                                                         const PdeLStarOptions& o) {
  FamilySpec fam;
  fam.kind = FamilyKind::PhiEll;
  fam.params = params;
  fam.m = m;
  int budget = o.budget;
  std::vector<std::string> warnings;
  double lo = o.ell_lo, hi = o.ell_hi;
  // Expand until the endpoints straddle the threshold.
  for (int k = 0; k < 8; ++k) {
    const auto pr = run_probe(params, fam, lo, cfg, budget, {}, warnings);
    if (!pr.fate.blow_up()) break;
    hi = lo;
    lo *= 0.5;
  }
  for (int k = 0; k < 8; ++k) {
    const auto pr = run_probe(params, fam, hi, cfg, budget, {}, warnings);
    if (pr.fate.blow_up()) break;
    lo = hi;
    hi *= 2.0;
  }
  auto b = bisect_threshold(params, fam, {lo, hi}, tol * hi, budget, cfg);
  b.warnings.insert(b.warnings.begin(), warnings.begin(), warnings.end());
  LStarResult r;
  r.L_star = b.midpoint();
  r.a_star = ExtendedReal::infinity();
  r.bracket_width = b.width();
  r.method = LStarMethod::PdeThreshold;
  r.kind = LStarKind::Bisection;
  return {std::move(b), r};
}

}  // namespace detail

/// ℓ* = sup{ℓ : u from min(m, ℓ r^{-2/(p-1)}) is global}, at plateaus m and 2m.
/// `tol` is relative, both on each bracket and on the m/2m agreement.
inline PdeLStar estimate_L_star_pde(const Params& params, double m, double tol,
                                    const PdeLStarOptions& o = {}) {
  validate(params);
  if (!(params.p > compute_exponents(params).p_F))
    throw InvalidArgument("estimate_L_star_pde: requires p > p_F");
  if (!(m > 0.0)) throw InvalidArgument("estimate_L_star_pde: m must be > 0");
  const SolverConfig cfg = pde_lstar_config(o);
  auto f1 = std::async(std::launch::async, [&] { return detail::lstar_at(params, m, tol, cfg, o); });
  auto f2 =
      std::async(std::launch::async, [&] { return detail::lstar_at(params, 2.0 * m, tol, cfg, o); });
  auto [b1, r1] = f1.get();
  auto [b2, r2] = f2.get();
  PdeLStar out{r1, r2, std::move(b1), std::move(b2)};
  out.relative_gap = std::fabs(r1.L_star - r2.L_star) / r1.L_star;
  out.scaling_consistent = out.relative_gap <= std::max(tol, 2.0 * std::max(r1.bracket_width, r2.bracket_width) / r1.L_star);
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation probes

enum class PerturbationVerdict { StrongConsistent, WeakConsistent, Inconclusive };

inline std::string to_string(PerturbationVerdict v) {
  switch (v) {
    case PerturbationVerdict::StrongConsistent: return "StrongConsistent";
    case PerturbationVerdict::WeakConsistent: return "WeakConsistent";
    case PerturbationVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct PerturbationReport {
  std::optional<FamilySpec> base;
  double bump_mass = 0.0;    // L¹(ℝⁿ)
  double bump_height = 0.0;  // L^∞
  Fate fate_up;
  std::optional<Fate> fate_down;
  PerturbationVerdict verdict = PerturbationVerdict::Inconclusive;
};

inline bool global_fate(const Fate& f) {
  return f.tag == FateTag::GlobalDecay || f.tag == FateTag::GrowUp ||
         f.tag == FateTag::ConvergeToSteadyState;
}

/// Evolves u0 + bump (and u0 - bump when `with_down`) and labels the outcome.
inline PerturbationReport perturbation_probe(const Params& params, const RadialProfile& u0,
                                             const RadialProfile& bump, const SolverConfig& config,
                                             bool with_down = true,
                                             std::optional<FamilySpec> base = std::nullopt) {
  if (!same_grid(u0, bump)) throw GridMismatch("perturbation_probe: profiles differ in grid");
  if (!(bump.sup_norm() > 0.0)) throw InvalidArgument("perturbation_probe: bump must be nontrivial");
  PerturbationReport rep;
  rep.base = std::move(base);
  rep.bump_mass = lebesgue_mass(bump, params.n);
  rep.bump_height = bump.sup_norm();
  const std::size_t M = u0.size();
  std::vector<double> up(M), down(M);
  for (std::size_t i = 0; i < M; ++i) {
    up[i] = u0[i] + bump[i];
    down[i] = u0[i] - bump[i];
    if (with_down && down[i] < 0.0)
      throw InvalidArgument("perturbation_probe: u0 - bump < 0 at r = " +
                            std::to_string(u0.grid()[i]));
  }
  std::vector<RadialProfile> data{RadialProfile(u0.grid_ptr(), std::move(up))};
  if (with_down) data.emplace_back(u0.grid_ptr(), std::move(down));
  std::vector<EvolutionRun> runs;
  if (with_down) {
    auto fu = std::async(std::launch::async, [&] { return evolve(params, data[0], config); });
    auto fd = std::async(std::launch::async, [&] { return evolve(params, data[1], config); });
    runs.push_back(fu.get());
    runs.push_back(fd.get());
  } else {
    runs.push_back(evolve(params, data[0], config));
  }
  rep.fate_up = runs[0].fate;
  if (with_down) rep.fate_down = runs[1].fate;
  const bool down_ok = !with_down || global_fate(*rep.fate_down);
  if (rep.fate_up.blow_up() && down_ok)
    rep.verdict = PerturbationVerdict::StrongConsistent;
  else if (global_fate(rep.fate_up))
    rep.verdict = PerturbationVerdict::WeakConsistent;
  return rep;
}

}  // namespace fujita
