#pragma once

// Forward self-similar profiles w'' + ((n-1)/r + r/2) w' + w/(p-1) + w^p = 0,
// w(0) = a, w'(0) = 0, their tail constants ℓ(w) = lim r^{2/(p-1)} w(r), the
// maximal profile w* with ℓ(w*) = L*, and the linearization at w*.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fujita/error.hpp"
#include "fujita/exponents.hpp"
#include "fujita/ode.hpp"
#include "fujita/profile.hpp"
#include "fujita/steady_states.hpp"

namespace fujita {

inline constexpr double kSelfSimilarRmax = 40.0;
inline constexpr double kTailAcceptance = 1e-4;
inline constexpr int kTailDoublings = 4;

struct SelfSimilarProfile {
  double a = 0.0;
  RadialProfile profile;
  std::vector<double> slope;  // w'
  std::vector<double> phi;    // ∂w/∂a, solves the linearized equation
  std::optional<double> ell;
  std::optional<double> dell_da;
  std::optional<double> zero_radius;
  bool positive = true;
  bool tail_converged = false;
};

struct TailEstimate {
  double value = 0.0;
  double previous = 0.0;  // extrapolant from the next coarser pair
  bool converged = false;
};

/// Richardson extrapolation of g with an r^{-2} correction, from samples at
/// R/4, R/2, R.
inline TailEstimate richardson_tail(double g_quarter, double g_half, double g_full,
                                    double tol = kTailAcceptance) {
  TailEstimate t;
  t.previous = (4.0 * g_half - g_quarter) / 3.0;
  t.value = (4.0 * g_full - g_half) / 3.0;
  t.converged = std::fabs(t.value - t.previous) <= tol * std::fabs(t.value);
  return t;
}

namespace detail {

inline GridPtr self_similar_grid(double r_max, std::size_t nodes) {
  return make_grid(RadialGrid::default_for(r_max, nodes));
}

}  // namespace detail

/// Shoots the profile with w(0) = a on `grid` together with φ = ∂w/∂a.
inline SelfSimilarProfile shoot_profile(const Params& params, double a, GridPtr grid,
                                        OdeOptions ode = {1e-11, 1e-14}) {
  validate(params);
  if (!(a > 0.0)) throw InvalidArgument("shoot_profile: a must be > 0");
  const int n = params.n;
  const double p = params.p;
  const double k = 1.0 / (p - 1.0);
  const double m = params.tail_exponent();
  const double R = grid->r_max();

  // w'' (0) and φ''(0) from the equation at r = 0.
  const double w2 = -(a * k + std::pow(a, p)) / n;
  const double f2 = -(k + p * std::pow(a, p - 1.0)) / n;
  const double r0 = 1e-6 * std::min(1.0, std::pow(a, -0.5 * (p - 1.0)));

  auto rhs = [&](double r, const OdeState<4>& y) {
    const double drift = (n - 1.0) / r + 0.5 * r;
    const double wp1 = y[0] > 0.0 ? std::pow(y[0], p - 1.0) : 0.0;
    return OdeState<4>{y[1], -drift * y[1] - k * y[0] - spow(y[0], p), y[3],
                       -drift * y[3] - k * y[2] - p * wp1 * y[2]};
  };

  // Output radii: grid nodes plus R/4, R/2 for the tail.
  std::vector<double> targets(grid->nodes().begin(), grid->nodes().end());
  targets.push_back(0.25 * R);
  targets.push_back(0.5 * R);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  SelfSimilarProfile out{a, RadialProfile(grid, std::vector<double>(grid->size(), 0.0)),
                         std::vector<double>(grid->size(), 0.0),
                         std::vector<double>(grid->size(), 0.0)};
  std::vector<double> w(grid->size(), 0.0);
  double g_quarter = 0.0, g_half = 0.0, gp_quarter = 0.0, gp_half = 0.0;

  DormandPrince<4> dp(ode);
  double r = r0;
  OdeState<4> y{a + 0.5 * w2 * r0 * r0, w2 * r0, 1.0 + 0.5 * f2 * r0 * r0, f2 * r0};
  std::size_t gi = 0;
  for (double rt : targets) {
    OdeState<4> yt;
    if (rt <= r0) {
      yt = {a + 0.5 * w2 * rt * rt, w2 * rt, 1.0 + 0.5 * f2 * rt * rt, f2 * rt};
    } else {
      const double r_prev = r;
      const OdeState<4> y_prev = y;
      dp.integrate_to(rhs, r, y, rt);
      if (y[0] <= 0.0) {
        double lo = r_prev, hi = rt;
        for (int it = 0; it < 80 && hi - lo > 1e-14 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          double rr = r_prev;
          OdeState<4> yy = y_prev;
          DormandPrince<4> sub(ode);
          sub.integrate_to(rhs, rr, yy, mid);
          (yy[0] > 0.0 ? lo : hi) = mid;
        }
        out.zero_radius = 0.5 * (lo + hi);
        out.positive = false;
        break;
      }
      yt = y;
    }
    if (rt == 0.25 * R) {
      g_quarter = std::pow(rt, m) * yt[0];
      gp_quarter = std::pow(rt, m) * yt[2];
    }
    if (rt == 0.5 * R) {
      g_half = std::pow(rt, m) * yt[0];
      gp_half = std::pow(rt, m) * yt[2];
    }
    if (gi < grid->size() && (*grid)[gi] == rt) {
      w[gi] = yt[0];
      out.slope[gi] = yt[1];
      out.phi[gi] = yt[2];
      ++gi;
    }
  }
  out.profile = RadialProfile(grid, std::move(w));
  if (!out.positive) return out;
  double g_full = std::pow(R, m) * out.profile.values().back();
  double gp_full = std::pow(R, m) * out.phi.back();
  auto t = richardson_tail(g_quarter, g_half, g_full);
  // Extend the tail range past the grid until the extrapolants settle.
  double Rt = R;
  for (int extra = 0; extra < kTailDoublings && !t.converged; ++extra) {
    Rt *= 2.0;
    dp.integrate_to(rhs, r, y, Rt);
    if (y[0] <= 0.0) {
      out.positive = false;
      return out;
    }
    g_quarter = g_half;
    gp_quarter = gp_half;
    g_half = g_full;
    gp_half = gp_full;
    g_full = std::pow(Rt, m) * y[0];
    gp_full = std::pow(Rt, m) * y[2];
    t = richardson_tail(g_quarter, g_half, g_full);
  }
  out.tail_converged = t.converged;
  if (t.converged) out.ell = t.value;
  out.dell_da = richardson_tail(gp_quarter, gp_half, gp_full).value;
  return out;
}

inline SelfSimilarProfile shoot_profile(const Params& params, double a,
                                        double r_max = kSelfSimilarRmax,
                                        std::size_t nodes = kDefaultGridNodes) {
  return shoot_profile(params, a, detail::self_similar_grid(r_max, nodes));
}

/// ℓ(w) and its a-derivative without sampling onto a grid.
struct TailSample {
  double a = 0.0;
  bool positive = false;
  std::optional<double> ell;
  double dell_da = 0.0;
};

inline TailSample tail_sample(const Params& params, double a, double r_max = kSelfSimilarRmax) {
  const auto s = shoot_profile(params, a, make_grid(RadialGrid::uniform(r_max, kMinGridNodes)));
  return {a, s.positive, s.ell, s.dell_da.value_or(0.0)};
}

enum class LStarMethod { ProfileShooting, PdeThreshold };

inline std::string to_string(LStarMethod m) {
  return m == LStarMethod::ProfileShooting ? "ProfileShooting" : "PdeThreshold";
}

/// How the maximiser of ℓ was located.
enum class LStarKind { InteriorMaximum, PositivityEdge, LargeAmplitudeLimit, Bisection };

inline std::string to_string(LStarKind k) {
  switch (k) {
    case LStarKind::InteriorMaximum: return "InteriorMaximum";
    case LStarKind::PositivityEdge: return "PositivityEdge";
    case LStarKind::LargeAmplitudeLimit: return "LargeAmplitudeLimit";
    case LStarKind::Bisection: return "Bisection";
  }
  return "?";
}

struct LStarResult {
  double L_star = 0.0;
  ExtendedReal a_star = ExtendedReal::infinity();
  double bracket_width = 0.0;
  LStarMethod method = LStarMethod::ProfileShooting;
  LStarKind kind = LStarKind::InteriorMaximum;
  std::vector<TailSample> curve;  // the observed ℓ(a)
  bool multiple_transitions = false;
  bool ell_monotone_below = true;  // ℓ nondecreasing along the scan below a*
};

struct LStarOptions {
  double a_lo = 0.05;
  double a_hi = 50.0;
  double tol = 1e-8;       // relative width of the final a-bracket
  int scan_points = 32;
  double r_max = kSelfSimilarRmax;
  double a_cap = 1e4;      // largest a tried when ℓ keeps increasing
};

/// Locates w*, the bounded positive profile whose tail constant is maximal.
inline LStarResult find_L_star_profile(const Params& params, const LStarOptions& opt = {}) {
  validate(params);
  if (!(params.p > compute_exponents(params).p_F))
    throw InvalidArgument("find_L_star_profile: requires p > p_F");
  if (!(opt.a_lo > 0.0) || !(opt.a_hi > opt.a_lo) || opt.scan_points < 3)
    throw InvalidBracket("find_L_star_profile: invalid a-bracket");

  LStarResult res;
  auto sample = [&](double a) { return tail_sample(params, a, opt.r_max); };
  const int K = opt.scan_points;
  for (int i = 0; i < K; ++i) {
    const double a = opt.a_lo * std::pow(opt.a_hi / opt.a_lo, double(i) / (K - 1));
    res.curve.push_back(sample(a));
  }
  if (!res.curve.front().positive || !res.curve.front().ell)
    throw InvalidBracket("find_L_star_profile: profile at a_lo is not positive with a tail");

  int transitions = 0;
  for (int i = 1; i < K; ++i)
    if (res.curve[i].positive != res.curve[i - 1].positive) ++transitions;
  res.multiple_transitions = transitions > 1;

  // Interior maximum: dℓ/da changes sign from + to - between positive samples.
  int first_neg = -1;
  for (int i = 0; i + 1 < K; ++i) {
    const auto& s0 = res.curve[i];
    const auto& s1 = res.curve[i + 1];
    if (!s1.positive) break;
    if (s0.dell_da > 0.0 && s1.dell_da <= 0.0) {
      first_neg = i;
      break;
    }
  }
  auto monotone_below = [&](double a_star) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& s : res.curve) {
      if (s.a >= a_star || !s.ell) break;
      if (*s.ell < prev) return false;
      prev = *s.ell;
    }
    return true;
  };

  if (first_neg >= 0) {
    double lo = res.curve[first_neg].a, hi = res.curve[first_neg + 1].a;
    while (hi - lo > opt.tol * hi) {
      const double mid = 0.5 * (lo + hi);
      const auto s = sample(mid);
      if (s.positive && s.dell_da > 0.0) lo = mid;
      else hi = mid;
      if (hi - lo <= 1e-15 * hi) break;
    }
    const double a_star = 0.5 * (lo + hi);
    const auto s = sample(a_star);
    if (!s.ell) throw IntegratorFailure("find_L_star_profile: tail did not converge at a*");
    res.L_star = *s.ell;
    res.a_star = ExtendedReal::finite(a_star);
    res.bracket_width = hi - lo;
    res.kind = LStarKind::InteriorMaximum;
    res.ell_monotone_below = monotone_below(a_star);
    return res;
  }

  int edge = -1;
  for (int i = 1; i < K; ++i)
    if (res.curve[i - 1].positive && !res.curve[i].positive) {
      edge = i;
      break;
    }
  if (edge >= 0) {
    // ℓ increases up to the loss of positivity: one-sided limit at the edge.
    double lo = res.curve[edge - 1].a, hi = res.curve[edge].a;
    while (hi - lo > opt.tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (sample(mid).positive ? lo : hi) = mid;
      if (hi - lo <= 1e-15 * hi) break;
    }
    const double a_star = lo;
    std::vector<double> ells;
    for (int k = 4; k <= 10; ++k) {
      const auto s = sample(a_star * (1.0 - std::ldexp(1.0, -k)));
      if (s.ell) ells.push_back(*s.ell);
    }
    if (ells.empty()) throw IntegratorFailure("find_L_star_profile: no tail below the edge");
    // ℓ(a* (1-h)) is linear in h to first order; h halves per step.
    res.L_star = ells.size() >= 2 ? 2.0 * ells.back() - ells[ells.size() - 2] : ells.back();
    res.a_star = ExtendedReal::finite(a_star);
    res.bracket_width = hi - lo;
    res.kind = LStarKind::PositivityEdge;
    res.ell_monotone_below = monotone_below(a_star);
    return res;
  }

  // ℓ still increasing at a_hi with all profiles positive: follow a → ∞.
  double a = opt.a_hi;
  double prev = *res.curve.back().ell;
  double change = std::numeric_limits<double>::infinity();
  while (a < opt.a_cap) {
    a *= 4.0;
    const auto s = sample(a);
    res.curve.push_back(s);
    if (!s.positive || !s.ell) break;
    change = std::fabs(*s.ell - prev) / std::fabs(*s.ell);
    prev = *s.ell;
    if (change < 1e-6) break;
  }
  res.L_star = prev;
  res.a_star = ExtendedReal::infinity();
  res.bracket_width = change;
  res.kind = LStarKind::LargeAmplitudeLimit;
  res.ell_monotone_below = monotone_below(std::numeric_limits<double>::infinity());
  return res;
}

struct LinearizedProfile {
  GridPtr grid;
  std::vector<double> phi;
  double mass_quarter = 0.0;  // ∫_0^{R/4} r^{n-1} φ
  double mass_half = 0.0;
  double mass_full = 0.0;
  bool integrable = false;
  bool monotone = false;
};

/// Tolerance (relative to φ(0) = 1) for monotonicity of φ.
inline constexpr double kLinearizedMonotoneTol = 1e-9;
/// Mass increments below this fraction of the total count as converged; a* is
/// only known to a finite bracket, which leaves a small r^{-m} residue in φ.
inline constexpr double kLinearizedMassTol = 1e-5;

/// φ with φ(0) = 1, φ'(0) = 0 solving the equation linearized at w_star.
inline LinearizedProfile linearized_profile(const Params& params,
                                            const SelfSimilarProfile& w_star, GridPtr grid) {
  if (!w_star.positive || !w_star.ell)
    throw InvalidArgument("linearized_profile: w_star must be positive with a tail");
  const auto s = shoot_profile(params, w_star.a, grid);
  LinearizedProfile lp{grid, s.phi};
  const auto r = grid->nodes();
  const double R = grid->r_max();
  auto mass_to = [&](double rr) {
    const std::size_t k = std::upper_bound(r.begin(), r.end(), rr) - r.begin();
    return radial_moment(std::span(lp.phi).first(k), r.first(k), params.n);
  };
  lp.mass_quarter = mass_to(0.25 * R);
  lp.mass_half = mass_to(0.5 * R);
  lp.mass_full = mass_to(R);
  const double d1 = std::fabs(lp.mass_half - lp.mass_quarter);
  const double d2 = std::fabs(lp.mass_full - lp.mass_half);
  lp.integrable = d2 <= 0.5 * d1 || d2 <= kLinearizedMassTol * std::fabs(lp.mass_full);
  lp.monotone = true;
  for (std::size_t i = 1; i < lp.phi.size(); ++i)
    if (lp.phi[i] > lp.phi[i - 1] + kLinearizedMonotoneTol) lp.monotone = false;
  return lp;
}

inline LinearizedProfile linearized_profile(const Params& params,
                                            const SelfSimilarProfile& w_star, double r_max) {
  return linearized_profile(params, w_star, w_star.profile.grid_ptr()->r_max() == r_max
                                                ? w_star.profile.grid_ptr()
                                                : detail::self_similar_grid(r_max, kDefaultGridNodes));
}

/// (1+x)^p - 1 - p x without cancellation.
inline double convexity_remainder(double x, double p) {
  if (std::fabs(x) < 1e-3) {
    double term = 0.5 * p * (p - 1.0) * x * x;
    double sum = term;
    for (int k = 3; k < 12; ++k) {
      term *= (p - k + 1.0) / k * x;
      sum += term;
    }
    return sum;
  }
  return std::expm1(p * std::log1p(x)) - p * x;
}

struct PerturbationSign {
  bool positive = true;
  double min_ratio = std::numeric_limits<double>::infinity();  // min expr / ε²
};

/// (w+εφ)^p - w^p - p w^{p-1} εφ at the nodes where w > 0 and εφ ≠ 0.
inline PerturbationSign perturbation_sign_check(const Params& params,
                                                std::span<const double> w,
                                                std::span<const double> phi, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("perturbation_sign_check: eps must be > 0");
  if (w.size() != phi.size()) throw GridMismatch("perturbation_sign_check: size mismatch");
  const double p = params.p;
  PerturbationSign out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const double d = eps * phi[i];
    if (d == 0.0) continue;
    const double expr = std::pow(w[i], p) * convexity_remainder(d / w[i], p);
    if (!(expr > 0.0)) out.positive = false;
    out.min_ratio = std::min(out.min_ratio, expr / (eps * eps));
  }
  return out;
}

}  // namespace fujita
