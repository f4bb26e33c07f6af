#pragma once

// Regular radial steady states u_α (U'' + (n-1)/r U' + U^p = 0, U(0) = α)
// by shooting, and intersection counts against u_* or another u_β.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "fujita/error.hpp"
#include "fujita/exponents.hpp"
#include "fujita/ode.hpp"
#include "fujita/profile.hpp"

namespace fujita {

/// Sign-preserving power |x|^p sign(x).
inline double spow(double x, double p) {
  return x >= 0.0 ? std::pow(x, p) : -std::pow(-x, p);
}

struct SteadyStateProfile {
  double alpha = 0.0;
  RadialProfile profile;
  std::vector<double> slope;  // U' at the nodes (0 past the positivity radius)
  ExtendedReal positivity_radius = ExtendedReal::infinity();
};

struct ShootingOptions {
  double r_start = 1e-6;  // in units of the natural length α^{-(p-1)/2}
  OdeOptions ode{1e-10, 1e-12};
};

namespace detail {

// Length scale of u_α: the scaling U_α(r) = α U_1(α^{(p-1)/2} r).
inline double steady_length(const Params& params, double alpha) {
  return std::pow(alpha, -0.5 * (params.p - 1.0));
}

struct SteadyTrace {
  std::vector<double> value, slope;
  std::optional<double> zero;  // first sign change
};

// U and U' at increasing radii `radii`. Past the first zero both are 0.
inline SteadyTrace trace_steady(const Params& params, double alpha,
                                std::span<const double> radii,
                                const ShootingOptions& opt = {}) {
  const int n = params.n;
  const double p = params.p;
  const double ap = std::pow(alpha, p);
  const double r0 = opt.r_start * steady_length(params, alpha);
  // Taylor series at the origin through r^4.
  auto series = [&](double r) {
    const double c2 = -ap / (2.0 * n);
    const double c4 = p * std::pow(alpha, 2.0 * p - 1.0) / (8.0 * n * (n + 2.0));
    return std::pair{alpha + c2 * r * r + c4 * r * r * r * r,
                     2.0 * c2 * r + 4.0 * c4 * r * r * r};
  };
  auto rhs = [&](double r, const OdeState<2>& y) {
    return OdeState<2>{y[1], -(n - 1.0) / r * y[1] - spow(y[0], p)};
  };
  SteadyTrace out;
  out.value.assign(radii.size(), 0.0);
  out.slope.assign(radii.size(), 0.0);
  DormandPrince<2> dp(opt.ode);
  double r = r0;
  auto [u0, du0] = series(r0);
  OdeState<2> y{u0, du0};
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double ri = radii[i];
    if (ri <= r0) {
      auto [u, du] = series(ri);
      out.value[i] = u;
      out.slope[i] = du;
      continue;
    }
    const double r_prev = r;
    const OdeState<2> y_prev = y;
    dp.integrate_to(rhs, r, y, ri);
    if (y[0] <= 0.0) {
      // Bisect the zero inside (r_prev, ri] from the stored state.
      double lo = r_prev, hi = ri;
      for (int it = 0; it < 80 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        double rr = r_prev;
        OdeState<2> yy = y_prev;
        DormandPrince<2> sub(opt.ode);
        sub.integrate_to(rhs, rr, yy, mid);
        (yy[0] > 0.0 ? lo : hi) = mid;
      }
      out.zero = 0.5 * (lo + hi);
      break;
    }
    out.value[i] = y[0];
    out.slope[i] = y[1];
  }
  return out;
}

}  // namespace detail

/// Shoots u_α on `grid`. r_max is the grid's last node.
inline SteadyStateProfile shoot_steady(const Params& params, double alpha, GridPtr grid,
                                       const ShootingOptions& opt = {}) {
  validate(params);
  if (!(alpha > 0.0)) throw InvalidArgument("shoot_steady: alpha must be > 0");
  auto tr = detail::trace_steady(params, alpha, grid->nodes(), opt);
  SteadyStateProfile s{alpha, RadialProfile(grid, std::move(tr.value)), std::move(tr.slope),
                       tr.zero ? ExtendedReal::finite(*tr.zero) : ExtendedReal::infinity()};
  return s;
}

inline SteadyStateProfile shoot_steady(const Params& params, double alpha, double r_max,
                                       std::size_t nodes = kDefaultGridNodes) {
  return shoot_steady(params, alpha, make_grid(RadialGrid::default_for(r_max, nodes)));
}

/// u_α at arbitrary increasing radii.
inline std::vector<double> steady_values(const Params& params, double alpha,
                                         std::span<const double> radii) {
  return detail::trace_steady(params, alpha, radii).value;
}

/// Closed-form steady state at p = p_S:
/// α (1 + α^{4/(n-2)} r² / (n(n-2)))^{-(n-2)/2}.
inline double instanton(int n, double alpha, double r) {
  if (n < 3) throw InvalidArgument("instanton: n must be >= 3");
  const double k = std::pow(alpha, 4.0 / (n - 2)) / (n * (n - 2.0));
  return alpha * std::pow(1.0 + k * r * r, -0.5 * (n - 2));
}

struct AgainstSingular {};
struct AgainstSteady {
  double beta;
};
using IntersectionTarget = std::variant<AgainstSingular, AgainstSteady>;

namespace detail {

// Crossings of u_α with u_* on (0, R]. Below the natural length the
// difference is taken directly; beyond it the deviation y = r^m U - L is
// integrated in t = ln r so that its sign is resolved to relative accuracy.
inline int singular_crossings(const Params& params, double alpha, double R) {
  const int n = params.n;
  const double p = params.p;
  const double m = params.tail_exponent();
  const double L = compute_exponents(params).L;
  const double rs = std::min(R, steady_length(params, alpha));
  const double r_first = 1e-3 * rs;

  int count = 0;
  int last = 0;
  auto note = [&](double d) {
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) return;
    if (last != 0 && s != last) ++count;
    last = s;
  };

  std::vector<double> inner(257);
  for (std::size_t i = 0; i < inner.size(); ++i)
    inner[i] = r_first * std::pow(rs / r_first, static_cast<double>(i) / (inner.size() - 1));
  const auto tr = trace_steady(params, alpha, inner);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (tr.zero && inner[i] >= *tr.zero) return count + (last > 0 ? 1 : 0);
    note(tr.value[i] - L * std::pow(inner[i], -m));
  }
  if (rs >= R) return count;

  // Emden–Fowler form: y'' + (n-2-2m) y' + m(m-n+2) y + (L+y)^p - L^p = 0.
  const double b = n - 2.0 - 2.0 * m;
  const double c = m * (m - n + 2.0);
  const double Lp = std::pow(L, p);
  auto rhs = [&](double, const OdeState<2>& z) {
    const double y = z[0];
    const double x = y / L;
    const double diff = x > -0.5 ? Lp * std::expm1(p * std::log1p(x)) : spow(L + y, p) - Lp;
    return OdeState<2>{z[1], -b * z[1] - c * y - diff};
  };
  const double U = tr.value.back(), dU = tr.slope.back();
  OdeState<2> z{std::pow(rs, m) * U - L, m * std::pow(rs, m) * U + std::pow(rs, m + 1.0) * dU};
  DormandPrince<2> dp(OdeOptions{1e-12, 1e-300});
  double t = std::log(rs);
  const double t_end = std::log(R);
  const double dt = 0.01;
  while (t < t_end) {
    dp.integrate_to(rhs, t, z, std::min(t_end, t + dt));
    if (z[0] <= -L) return count + (last > 0 ? 1 : 0);  // U reached zero
    note(z[0]);
  }
  return count;
}

}  // namespace detail

/// z(u_α - target) on [δ, R].
inline int intersection_profile(const Params& params, double alpha,
                                const IntersectionTarget& target, double R,
                                std::size_t nodes = kDefaultGridNodes) {
  validate(params);
  if (!(alpha > 0.0) || !(R > 0.0))
    throw InvalidArgument("intersection_profile: alpha and R must be > 0");
  if (std::holds_alternative<AgainstSingular>(target)) {
    if (!has_singular_state(params))
      throw InvalidArgument("intersection_profile: u_* requires p > p_sg");
    return detail::singular_crossings(params, alpha, R);
  }
  const double beta = std::get<AgainstSteady>(target).beta;
  if (!(beta > 0.0)) throw InvalidArgument("intersection_profile: beta must be > 0");
  const auto a = shoot_steady(params, alpha, R, nodes);
  const auto b = shoot_steady(params, beta, R, nodes);
  const GridPtr merged = merge_grids(a.profile.grid(), b.profile.grid());
  const auto fa = resample(a.profile, merged);
  const auto fb = resample(b.profile, merged);
  return zero_number(fa, fb, Window{(*merged)[1], R});
}

}  // namespace fujita
