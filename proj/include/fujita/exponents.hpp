#pragma once

// Critical exponents of u_t = Δu + u^p on R^n, the singular steady state
// L|x|^{-2/(p-1)} and the regime classification built on them.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "fujita/error.hpp"

namespace fujita {

/// Absolute tolerance used when comparing p against a critical exponent.
inline constexpr double kExponentTolerance = 1e-12;

/// A real number or +∞. Infinity is an explicit state, never a sentinel float.
class ExtendedReal {
 public:
  static constexpr ExtendedReal infinity() { return ExtendedReal(); }
  static constexpr ExtendedReal finite(double v) { return ExtendedReal(v); }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  double value() const {
    if (infinite_) throw InvalidArgument("ExtendedReal: value() of +inf");
    return value_;
  }

  // Finite value, or +HUGE_VAL for use in arithmetic that tolerates it.
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  std::string to_string() const;

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

 private:
  constexpr ExtendedReal() : infinite_(true), value_(0.0) {}
  constexpr explicit ExtendedReal(double v) : infinite_(false), value_(v) {}

  bool infinite_;
  double value_;
};

inline std::string ExtendedReal::to_string() const {
  if (infinite_) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

inline std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
  return os << x.to_string();
}

/// Spatial dimension and nonlinearity exponent.
struct Params {
  int n = 3;
  double p = 5.0;

  double tail_exponent() const { return 2.0 / (p - 1.0); }
  bool operator==(const Params&) const = default;
};

inline void validate(const Params& params) {
  if (params.n < 1) throw InvalidArgument("dimension n must be >= 1");
  if (!(params.p > 1.0) || !std::isfinite(params.p))
    throw InvalidArgument("exponent p must be a finite real > 1");
}

struct ExponentSet {
  double p_F = 0.0;
  ExtendedReal p_sg = ExtendedReal::infinity();
  ExtendedReal p_S = ExtendedReal::infinity();
  ExtendedReal p_JL = ExtendedReal::infinity();
  double L = 0.0;  // singular steady state constant; 0 when p <= p_sg
};

namespace detail {

inline long double fujita_exponent(int n) { return 1.0L + 2.0L / n; }

inline std::optional<long double> sg_exponent(int n) {
  if (n <= 2) return std::nullopt;
  return 1.0L + 2.0L / (n - 2);
}

inline std::optional<long double> sobolev_exponent(int n) {
  if (n <= 2) return std::nullopt;
  return 1.0L + 4.0L / (n - 2);
}

inline std::optional<long double> jl_exponent(int n) {
  if (n <= 10) return std::nullopt;
  const long double nn = n;
  return 1.0L + 4.0L * (nn - 4.0L + 2.0L * std::sqrt(nn - 1.0L)) /
                    ((nn - 2.0L) * (nn - 10.0L));
}

inline ExtendedReal to_extended(const std::optional<long double>& x) {
  return x ? ExtendedReal::finite(static_cast<double>(*x))
           : ExtendedReal::infinity();
}

// L^{p-1} = 2((n-2)p - n)/(p-1)^2, evaluated in long double.
inline long double singular_constant(int n, long double p) {
  const long double num = 2.0L * ((n - 2) * p - n);
  if (num <= 0.0L) return 0.0L;
  const long double pm1 = p - 1.0L;
  return std::pow(num / (pm1 * pm1), 1.0L / pm1);
}

}  // namespace detail

inline ExponentSet compute_exponents(const Params& params) {
  validate(params);
  const int n = params.n;
  ExponentSet e;
  e.p_F = static_cast<double>(detail::fujita_exponent(n));
  const auto sg = detail::sg_exponent(n);
  e.p_sg = detail::to_extended(sg);
  e.p_S = detail::to_extended(detail::sobolev_exponent(n));
  e.p_JL = detail::to_extended(detail::jl_exponent(n));
  const long double p = params.p;
  e.L = (sg && p > *sg) ? static_cast<double>(detail::singular_constant(n, p))
                        : 0.0;
  return e;
}

/// True when p exceeds p_sg so that the singular steady state exists.
inline bool has_singular_state(const Params& params) {
  const auto sg = detail::sg_exponent(params.n);
  return sg && static_cast<long double>(params.p) > *sg;
}

/// L·r^{-2/(p-1)}.
inline double singular_state(const Params& params, double r) {
  validate(params);
  if (!has_singular_state(params))
    throw InvalidArgument("singular steady state requires p > p_sg");
  if (!(r > 0.0)) throw InvalidArgument("singular_state: radius must be > 0");
  const double L = compute_exponents(params).L;
  return L * std::pow(r, -params.tail_exponent());
}

/// d/dr of the singular steady state.
inline double singular_state_derivative(const Params& params, double r) {
  return -params.tail_exponent() * singular_state(params, r) / r;
}

enum class RegimeTag { Subcritical, Critical, Intermediate, Supercritical };

inline std::string to_string(RegimeTag t) {
  switch (t) {
    case RegimeTag::Subcritical: return "Subcritical";
    case RegimeTag::Critical: return "Critical";
    case RegimeTag::Intermediate: return "Intermediate";
    case RegimeTag::Supercritical: return "Supercritical";
  }
  return "?";
}

struct Regime {
  RegimeTag tag = RegimeTag::Subcritical;
  bool admissible = false;  // p > p_F
};

/// Behaviour-table column for (n, p). Equalities with p_S and p_JL are resolved with
/// kExponentTolerance; `override_tag` lets a caller force the column.
inline Regime classify_regime(const Params& params,
                              std::optional<RegimeTag> override_tag = {}) {
  validate(params);
  const long double p = params.p;
  Regime r;
  r.admissible = p > detail::fujita_exponent(params.n) + kExponentTolerance;
  if (override_tag) {
    r.tag = *override_tag;
    return r;
  }
  const auto pS = detail::sobolev_exponent(params.n);
  const auto pJL = detail::jl_exponent(params.n);
  if (!pS || p < *pS - kExponentTolerance) {
    r.tag = RegimeTag::Subcritical;
  } else if (std::fabs(p - *pS) <= kExponentTolerance) {
    r.tag = RegimeTag::Critical;
  } else if (!pJL || p < *pJL - kExponentTolerance) {
    r.tag = RegimeTag::Intermediate;
  } else {
    r.tag = RegimeTag::Supercritical;
  }
  return r;
}

/// p equals p_S up to kExponentTolerance.
inline bool is_sobolev_critical(const Params& params) {
  const auto pS = detail::sobolev_exponent(params.n);
  return pS && std::fabs(params.p - *pS) <= kExponentTolerance;
}

/// p >= p_JL (with tolerance); false when p_JL = ∞.
inline bool at_or_above_jl(const Params& params) {
  const auto pJL = detail::jl_exponent(params.n);
  return pJL && params.p >= *pJL - kExponentTolerance;
}

/// p >= p_S (with tolerance); false when p_S = ∞.
inline bool at_or_above_sobolev(const Params& params) {
  const auto pS = detail::sobolev_exponent(params.n);
  return pS && params.p >= *pS - kExponentTolerance;
}

}  // namespace fujita
