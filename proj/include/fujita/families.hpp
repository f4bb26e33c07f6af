#pragma once

// Initial-data families used by the threshold searches. Every family is
// nondecreasing in its parameter λ at every node.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fujita/error.hpp"
#include "fujita/exponents.hpp"
#include "fujita/profile.hpp"
#include "fujita/steady_states.hpp"

namespace fujita {

/// min(m, ℓ r^{-2/(p-1)}).
inline RadialProfile make_phi_ell(const Params& params, double ell, double m, GridPtr grid) {
  validate(params);
  if (!(ell > 0.0) || !(m > 0.0)) throw InvalidArgument("make_phi_ell: ell and m must be > 0");
  const double k = params.tail_exponent();
  return RadialProfile::sample(std::move(grid), [&](double r) {
    return r == 0.0 ? m : std::min(m, ell * std::pow(r, -k));
  });
}

namespace detail {

// Plateau `height` on [0, r_k + shift], then the larger of the tangent line
// to W at r_k and W itself.
inline RadialProfile tangent_plateau(double height, double r_k, double slope, double shift,
                                     const std::function<double(double)>& W, GridPtr grid) {
  return RadialProfile::sample(std::move(grid), [&](double r) {
    if (r <= r_k + shift) return height;
    return std::max(height + (r - r_k - shift) * slope, W(r));
  });
}

}  // namespace detail

/// Plateau 1 up to r_1 + α, where W(r_1) = 1 for W = L* r^{-2/(p-1)}.
inline RadialProfile make_ini_decay(const Params& params, double alpha, double L_star,
                                    GridPtr grid) {
  validate(params);
  if (!(alpha >= 0.0)) throw InvalidArgument("make_ini_decay: alpha must be >= 0");
  if (!(L_star > 0.0)) throw InvalidArgument("make_ini_decay: L_star must be > 0");
  const double k = params.tail_exponent();
  const double r1 = std::pow(L_star, 1.0 / k);
  auto W = [&](double r) { return L_star * std::pow(r, -k); };
  const double slope = -k * L_star * std::pow(r1, -k - 1.0);
  return detail::tangent_plateau(1.0, r1, slope, alpha, W, std::move(grid));
}

/// Radius R with u_*(R) = m.
inline double singular_level_radius(const Params& params, double m) {
  const double L = compute_exponents(params).L;
  return std::pow(L / m, 1.0 / params.tail_exponent());
}

/// Plateau m up to R + α with u_*(R) = m, then max(tangent, u_*).
inline RadialProfile make_ini_gu(const Params& params, double alpha, double m, GridPtr grid) {
  validate(params);
  if (!has_singular_state(params)) throw InvalidArgument("make_ini_gu: requires p > p_sg");
  if (!(alpha >= 0.0) || !(m > 0.0))
    throw InvalidArgument("make_ini_gu: alpha >= 0 and m > 0 required");
  const double R = singular_level_radius(params, m);
  const double slope = singular_state_derivative(params, R);
  auto U = [&](double r) { return singular_state(params, r); };
  return detail::tangent_plateau(m, R, slope, alpha, U, std::move(grid));
}

/// Values of u_amplitude at the given radii.
using SteadyLookup = std::function<std::vector<double>(double, std::span<const double>)>;

inline SteadyLookup shooting_lookup(const Params& params) {
  return [params](double amplitude, std::span<const double> radii) {
    return steady_values(params, amplitude, radii);
  };
}

/// The unique zero of U_1 - U_β.
inline double convex_pair_crossing(double beta, const SteadyLookup& lookup,
                                   std::span<const double> radii) {
  const auto u1 = lookup(1.0, radii);
  const auto ub = lookup(beta, radii);
  std::size_t i = 1;
  while (i < radii.size() && u1[i] - ub[i] > 0.0) ++i;
  if (i == radii.size()) throw InvalidArgument("convex pair: U_1 and U_beta do not cross");
  double lo = radii[i - 1], hi = radii[i];
  for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r[1] = {mid};
    (lookup(1.0, r)[0] - lookup(beta, r)[0] > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// αU_1 + (1-α)U_β on [0, r_0), ½(U_1 + U_β) on [r_0, ∞).
inline RadialProfile make_convex_pair(const Params& params, double alpha, double beta,
                                      const SteadyLookup& lookup, GridPtr grid) {
  validate(params);
  if (!is_sobolev_critical(params)) throw InvalidArgument("make_convex_pair: requires p = p_S");
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("make_convex_pair: beta must be in (0,1)");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument("make_convex_pair: alpha must be in [0,1]");
  const auto r = grid->nodes();
  const auto u1 = lookup(1.0, r);
  const auto ub = lookup(beta, r);
  const double r0 = convex_pair_crossing(beta, lookup, r);
  std::vector<double> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    v[i] = std::max(0.0, r[i] < r0 ? alpha * u1[i] + (1.0 - alpha) * ub[i] : 0.5 * (u1[i] + ub[i]));
  return RadialProfile(std::move(grid), std::move(v));
}

inline RadialProfile make_convex_pair(const Params& params, double alpha, double beta,
                                      GridPtr grid) {
  return make_convex_pair(params, alpha, beta, shooting_lookup(params), std::move(grid));
}

/// ε on [0, R], ε(R + 1 - r) on (R, R + 1), 0 beyond.
inline RadialProfile make_plateau_ramp(double eps, double R, GridPtr grid) {
  if (!(eps > 0.0) || !(R > 0.0)) throw InvalidArgument("make_plateau_ramp: eps and R must be > 0");
  return RadialProfile::sample(std::move(grid), [&](double r) {
    if (r <= R) return eps;
    if (r < R + 1.0) return eps * (R + 1.0 - r);
    return 0.0;
  });
}

/// Compactly supported tent: height h on [0, r_a], linear to 0 at r_b.
inline RadialProfile make_tent(double height, double r_a, double r_b, GridPtr grid) {
  if (!(height >= 0.0) || !(r_b > r_a) || r_a < 0.0)
    throw InvalidArgument("make_tent: need height >= 0 and 0 <= r_a < r_b");
  return RadialProfile::sample(std::move(grid), [&](double r) {
    if (r <= r_a) return height;
    if (r < r_b) return height * (r_b - r) / (r_b - r_a);
    return 0.0;
  });
}

// ---------------------------------------------------------------------------
// Family descriptors

enum class FamilyKind { PhiEll, IniDecay, IniGU, ConvexPair, PlateauRamp, ScaleSteady, Custom };

inline std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::PhiEll: return "phi-ell";
    case FamilyKind::IniDecay: return "ini-decay";
    case FamilyKind::IniGU: return "ini-gu";
    case FamilyKind::ConvexPair: return "convex-pair";
    case FamilyKind::PlateauRamp: return "plateau-ramp";
    case FamilyKind::ScaleSteady: return "scale-steady";
    case FamilyKind::Custom: return "custom";
  }
  return "?";
}

inline FamilyKind family_kind_from_string(const std::string& s) {
  for (auto k : {FamilyKind::PhiEll, FamilyKind::IniDecay, FamilyKind::IniGU,
                 FamilyKind::ConvexPair, FamilyKind::PlateauRamp, FamilyKind::ScaleSteady,
                 FamilyKind::Custom})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown family kind '" + s + "'");
}

/// A one-parameter family. λ plays the role of
///   PhiEll: ℓ;  IniDecay, IniGU: the shift α;  ConvexPair: the mix α;
///   PlateauRamp: the radius R;  ScaleSteady, Custom: a multiplier.
struct FamilySpec {
  FamilyKind kind = FamilyKind::PhiEll;
  Params params;
  double m = 1.0;          // plateau (PhiEll, IniGU)
  double L_star = 1.0;     // IniDecay
  double beta = 0.5;       // ConvexPair
  double eps = 0.1;        // PlateauRamp height
  double amplitude = 1.0;  // ScaleSteady: u_amplitude
  std::optional<RadialProfile> base;   // Custom
  std::optional<RadialProfile> floor;  // max-merged underneath, if present
  double lambda = 0.0;
};

/// The member of `family` at parameter λ, sampled on `grid`.
inline RadialProfile make_family(const FamilySpec& f, double lambda, GridPtr grid) {
  auto build = [&]() -> RadialProfile {
    switch (f.kind) {
      case FamilyKind::PhiEll: return make_phi_ell(f.params, lambda, f.m, grid);
      case FamilyKind::IniDecay: return make_ini_decay(f.params, lambda, f.L_star, grid);
      case FamilyKind::IniGU: return make_ini_gu(f.params, lambda, f.m, grid);
      case FamilyKind::ConvexPair: return make_convex_pair(f.params, lambda, f.beta, grid);
      case FamilyKind::PlateauRamp: return make_plateau_ramp(f.eps, lambda, grid);
      case FamilyKind::ScaleSteady: {
        if (!(lambda >= 0.0)) throw InvalidArgument("scale-steady: multiplier must be >= 0");
        const auto u = steady_values(f.params, f.amplitude, grid->nodes());
        std::vector<double> v(u.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = lambda * std::max(0.0, u[i]);
        return RadialProfile(grid, std::move(v));
      }
      case FamilyKind::Custom: {
        if (!f.base) throw InvalidArgument("custom family: base profile missing");
        if (!(lambda >= 0.0)) throw InvalidArgument("custom family: multiplier must be >= 0");
        const auto b = f.base->grid() == *grid ? *f.base : resample(*f.base, grid);
        std::vector<double> v(b.values().begin(), b.values().end());
        for (auto& x : v) x *= lambda;
        return RadialProfile(grid, std::move(v));
      }
    }
    throw InvalidArgument("unknown family kind");
  };
  RadialProfile u = build();
  if (f.floor) {
    const auto fl = same_grid(*f.floor, u) ? *f.floor : resample(*f.floor, u.grid_ptr());
    u = pointwise_max(u, fl);
  }
  return u;
}

/// True when family(λ_lo) <= family(λ_hi) at every node.
inline bool family_ordered(const FamilySpec& f, double lambda_lo, double lambda_hi, GridPtr grid) {
  const auto a = make_family(f, lambda_lo, grid);
  const auto b = make_family(f, lambda_hi, grid);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

}  // namespace fujita
