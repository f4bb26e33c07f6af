#pragma once

// Dormand–Prince 5(4) with PI step control for small autonomous-in-form
// systems y' = f(t, y). The integrator is restartable: it keeps its last
// accepted step size so consecutive integrate_to calls stay cheap.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>

#include "fujita/error.hpp"

namespace fujita {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;      // 0 picks a step from the first derivative
  double h_min_rel = 1e-14; // relative to |t|; below this the step collapsed
  long max_steps = 20'000'000;
};

template <std::size_t N>
using OdeState = std::array<double, N>;

template <std::size_t N>
class DormandPrince {
 public:
  using State = OdeState<N>;

  explicit DormandPrince(OdeOptions opts = {}) : opts_(opts) {}

  long steps() const { return steps_; }

  /// Advances (t, y) to t_end exactly. Throws IntegratorFailure on step
  /// collapse or non-finite state.
  template <class F>
  void integrate_to(F&& f, double& t, State& y, double t_end) {
    if (t_end == t) return;
    const double dir = t_end > t ? 1.0 : -1.0;
    State k1 = f(t, y);
    if (h_ == 0.0) h_ = initial_step(t, y, k1, t_end);
    while (dir * (t_end - t) > 0.0) {
      double h = std::min(std::fabs(h_), std::fabs(t_end - t));
      const double h_floor = std::max(opts_.h_min_rel * std::fabs(t), 1e-300);
      bool last = h == std::fabs(t_end - t);
      for (;;) {
        if (h < h_floor && !last)
          throw IntegratorFailure("ODE step size collapsed at t = " + std::to_string(t));
        if (++steps_ > opts_.max_steps) throw IntegratorFailure("ODE step budget exhausted");
        State y_new, err;
        State k7 = stage(f, t, y, dir * h, k1, y_new, err);
        const double e = error_norm(y, y_new, err);
        if (e <= 1.0 && finite(y_new)) {
          t = last ? t_end : t + dir * h;
          y = y_new;
          k1 = k7;
          // PI controller (Gustafsson), exponents 0.7/5 and 0.4/5.
          double fac = e == 0.0 ? 5.0
                                : 0.9 * std::pow(e, -0.14) * std::pow(e_prev_, 0.08);
          fac = std::clamp(fac, 0.2, 5.0);
          e_prev_ = std::max(e, 1e-4);
          // Do not let a clipped final step shrink the carried step size.
          if (!last) h_ = dir * h * fac;
          else h_ = dir * std::max(std::fabs(h_), h * fac);
          break;
        }
        const double fac = finite(y_new) ? std::max(0.2, 0.9 * std::pow(e, -0.2)) : 0.25;
        h *= fac;
        last = false;
      }
    }
  }

 private:
  static bool finite(const State& y) {
    for (double v : y)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double error_norm(const State& y, const State& y_new, const State& err) const {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
      const double q = err[i] / sc;
      s += q * q;
    }
    const double e = std::sqrt(s / N);
    return std::isfinite(e) ? e : 1e10;
  }

  double initial_step(double t, const State& y, const State& k1, double t_end) const {
    if (opts_.h_init > 0.0) return opts_.h_init;
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::fabs(y[i]);
      d0 = std::max(d0, std::fabs(y[i]) / sc);
      d1 = std::max(d1, std::fabs(k1[i]) / sc);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, std::fabs(t_end - t));
    return h * (t_end > t ? 1.0 : -1.0);
  }

  template <class F>
  State stage(F& f, double t, const State& y, double h, const State& k1,
              State& y_new, State& err) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    State tmp;
    auto combine = [&](std::initializer_list<std::pair<double, const State*>> terms) {
      for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (const auto& [c, k] : terms) s += c * (*k)[i];
        tmp[i] = y[i] + h * s;
      }
      return tmp;
    };
    const State k2 = f(t + c2 * h, combine({{a21, &k1}}));
    const State k3 = f(t + c3 * h, combine({{a31, &k1}, {a32, &k2}}));
    const State k4 = f(t + c4 * h, combine({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(t + c5 * h, combine({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 =
        f(t + h, combine({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    y_new = combine({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = f(t + h, y_new);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                    e7 * k7[i]);
    return k7;
  }

  OdeOptions opts_;
  double h_ = 0.0;
  double e_prev_ = 1e-4;
  long steps_ = 0;
};

}  // namespace fujita
