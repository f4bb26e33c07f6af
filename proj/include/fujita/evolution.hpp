#pragma once

// Radial solver for u_t = u_rr + (n-1)/r u_r + u^p (physical variables) and
// for w_s = w_rr + ((n-1)/r + r/2) w_r + w/(p-1) + w^p (rescaled variables),
// with fate classification, the two-solution mass functional and zero-number
// monitoring.
//
// Space: finite volumes on the radial grid (cell faces at midpoints, cell 0
// is the ball of radius r_{1/2}), so the origin needs no special case and
// Σ V_i u_i is the exact discrete mass. The last node is Dirichlet.
// Time: backward Euler with Newton on the tridiagonal Jacobian. The system
// matrix is an M-matrix under the step restrictions below, which keeps the
// discrete comparison principle and the zero-number property.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fujita/error.hpp"
#include "fujita/exponents.hpp"
#include "fujita/profile.hpp"
#include "fujita/steady_states.hpp"
#include "fujita/tridiagonal.hpp"

namespace fujita {

enum class FarField { Frozen, SingularTail };
enum class Mode { Physical, Rescaled };

inline std::string to_string(FarField f) { return f == FarField::Frozen ? "frozen" : "singular"; }
inline std::string to_string(Mode m) { return m == Mode::Physical ? "physical" : "rescaled"; }

inline FarField far_field_from_string(const std::string& s) {
  if (s == "frozen") return FarField::Frozen;
  if (s == "singular") return FarField::SingularTail;
  throw InvalidArgument("unknown far field '" + s + "'");
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "physical") return Mode::Physical;
  if (s == "rescaled") return Mode::Rescaled;
  throw InvalidArgument("unknown mode '" + s + "'");
}

/// Absolute sup-norm rails for oscillation detection.
struct Rails {
  double low = 0.0;
  double high = 0.0;
};

struct SolverConfig {
  GridPtr grid;
  double t_max = 1.0;
  double dt_init = 1e-4;
  double dt_min = 1e-12;  // relative to the reaction time min(1, ‖u‖^{1-p})
  double dt_max = std::numeric_limits<double>::infinity();
  double M_blow = 1e6;
  double eps_decay = 1e-8;
  FarField far_field = FarField::Frozen;
  Mode mode = Mode::Physical;

  double rtol = 1e-4;  // local error control of the time step
  double atol = 1e-9;
  double reaction_limit = 0.1;  // dt <= reaction_limit · ‖u‖^{1-p}
  bool nonlinearity = true;     // false solves the heat equation (tests)
  long max_steps = 20'000'000;

  std::vector<double> snapshot_times;  // within (0, t_max]; t = 0 and the end are always kept
  double grow_factor = 10.0;
  std::optional<Rails> rails;  // default: 0.5‖u0‖ and 2‖u0‖
  double settle_tol = 1e-4;    // relative drift of the center over the last quarter
  double settle_min_time = 10.0;  // rescaled mode: earliest s for a settle stop
  bool early_stop = true;
  // Subtracts the residual of sampled u_* at nodes with r >= balance_from,
  // making u_* an exact discrete steady state there.
  std::optional<double> balance_from;

  void validate() const {
    if (!grid) throw InvalidArgument("SolverConfig: grid missing");
    if (!(t_max > 0.0)) throw InvalidArgument("SolverConfig: t_max must be > 0");
    if (!(dt_min > 0.0 && dt_min < dt_init))
      throw InvalidArgument("SolverConfig: need 0 < dt_min < dt_init");
    if (!(M_blow > eps_decay && eps_decay > 0.0))
      throw InvalidArgument("SolverConfig: need M_blow > eps_decay > 0");
    if (!(rtol > 0.0) || !(atol > 0.0)) throw InvalidArgument("SolverConfig: tolerances must be > 0");
    if (balance_from && !(*balance_from > 0.0))
      throw InvalidArgument("SolverConfig: balance_from must be > 0");
  }
};

/// Grid spanning [0, r_max] with near-origin spacing fine enough for blow-up.
inline SolverConfig default_config(double r_max, double t_max,
                                   std::size_t nodes = kDefaultGridNodes) {
  SolverConfig c;
  c.grid = make_grid(RadialGrid::default_for(r_max, nodes));
  c.t_max = t_max;
  return c;
}

enum class FateTag { BlowUp, GlobalDecay, GrowUp, ConvergeToSteadyState, Oscillatory, Undetermined };

inline std::string to_string(FateTag t) {
  switch (t) {
    case FateTag::BlowUp: return "BlowUp";
    case FateTag::GlobalDecay: return "GlobalDecay";
    case FateTag::GrowUp: return "GrowUp";
    case FateTag::ConvergeToSteadyState: return "ConvergeToSteadyState";
    case FateTag::Oscillatory: return "Oscillatory";
    case FateTag::Undetermined: return "Undetermined";
  }
  return "?";
}

inline FateTag fate_tag_from_string(const std::string& s) {
  for (auto t : {FateTag::BlowUp, FateTag::GlobalDecay, FateTag::GrowUp,
                 FateTag::ConvergeToSteadyState, FateTag::Oscillatory, FateTag::Undetermined})
    if (to_string(t) == s) return t;
  throw SchemaError("unknown fate '" + s + "'");
}

struct Fate {
  FateTag tag = FateTag::Undetermined;
  std::optional<double> T_est;  // BlowUp
  std::optional<double> beta;   // ConvergeToSteadyState
  std::string evidence;

  bool blow_up() const { return tag == FateTag::BlowUp; }
  bool operator==(const Fate&) const = default;
};

/// Why the time loop stopped.
enum class Termination { Horizon, BlowUp, Decay, Settled, StepCollapse, StepBudget };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::Horizon: return "Horizon";
    case Termination::BlowUp: return "BlowUp";
    case Termination::Decay: return "Decay";
    case Termination::Settled: return "Settled";
    case Termination::StepCollapse: return "StepCollapse";
    case Termination::StepBudget: return "StepBudget";
  }
  return "?";
}

inline Termination termination_from_string(const std::string& s) {
  for (auto t : {Termination::Horizon, Termination::BlowUp, Termination::Decay,
                 Termination::Settled, Termination::StepCollapse, Termination::StepBudget})
    if (to_string(t) == s) return t;
  throw SchemaError("unknown termination '" + s + "'");
}

struct Snapshot {
  double t = 0.0;
  std::vector<double> u;
};

/// A named profile against which z(u(·,t) - g) is recorded at every snapshot.
struct ComparisonProfile {
  std::string name;
  std::vector<double> values;
};

struct EvolutionRun {
  Params params;
  GridPtr grid;
  Mode mode = Mode::Physical;
  std::vector<Snapshot> snapshots;
  std::vector<double> times;
  std::vector<double> center_series;
  std::vector<double> supnorm_series;
  Termination termination = Termination::Horizon;
  std::optional<double> blowup_time;  // physical time, set when certified
  std::string stop_evidence;
  Fate fate;
  long steps = 0;
  long rejected = 0;
  std::vector<std::pair<std::string, std::vector<int>>> diagnostics;

  double t_end() const { return times.empty() ? 0.0 : times.back(); }

  RadialProfile snapshot_profile(std::size_t k) const {
    std::vector<double> v = snapshots.at(k).u;
    for (auto& x : v) x = std::max(0.0, x);
    return RadialProfile(grid, std::move(v));
  }
};

// ---------------------------------------------------------------------------
// Spatial operator

/// F(u) = diffusion (+ drift) + reaction at every node except the last.
class RadialOperator {
 public:
  RadialOperator(const Params& params, GridPtr grid, Mode mode, bool nonlinearity = true)
      : params_(params), grid_(std::move(grid)), mode_(mode), nonlinear_(nonlinearity) {
    const auto& r = *grid_;
    const std::size_t M = r.size();
    const int n = params.n;
    lo_.assign(M, 0.0);
    up_.assign(M, 0.0);
    volume_.assign(M, 0.0);
    for (std::size_t i = 0; i + 1 < M; ++i) {
      const double face_hi = 0.5 * (r[i] + r[i + 1]);
      const double face_lo = i == 0 ? 0.0 : 0.5 * (r[i - 1] + r[i]);
      const double V = (std::pow(face_hi, n) - std::pow(face_lo, n)) / n;
      volume_[i] = V;
      up_[i] = std::pow(face_hi, n - 1) / (r[i + 1] - r[i]) / V;
      if (i > 0) lo_[i] = std::pow(face_lo, n - 1) / (r[i] - r[i - 1]) / V;
    }
    {
      const double face_lo = 0.5 * (r[M - 2] + r[M - 1]);
      volume_[M - 1] = (std::pow(r[M - 1], n) - std::pow(face_lo, n)) / n;
    }
    if (mode_ == Mode::Rescaled) {
      // (r/2) u_r: central where the lower coefficient stays >= 0, else forward.
      for (std::size_t i = 1; i + 1 < M; ++i) {
        const double v = 0.5 * r[i];
        const double c = v / (r[i + 1] - r[i - 1]);
        if (lo_[i] - c >= 0.0) {
          lo_[i] -= c;
          up_[i] += c;
        } else {
          up_[i] += v / (r[i + 1] - r[i]);
          forward_.push_back(i);
        }
      }
      linear_ = 1.0 / (params.p - 1.0);
    }
  }

  std::size_t size() const { return lo_.size(); }
  const std::vector<double>& volumes() const { return volume_; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return up_; }
  double linear_coefficient() const { return linear_; }
  bool nonlinear() const { return nonlinear_; }

  /// Constant source added to F; empty means none.
  void set_source(std::vector<double> s) { source_ = std::move(s); }
  double source(std::size_t i) const { return source_.empty() ? 0.0 : source_[i]; }

  double reaction(double u) const {
    return linear_ * u + (nonlinear_ ? spow(u, params_.p) : 0.0);
  }
  double reaction_derivative(double u) const {
    return linear_ + (nonlinear_ ? params_.p * std::pow(std::fabs(u), params_.p - 1.0) : 0.0);
  }

  /// Transport part (no reaction) at node i.
  double transport(const std::vector<double>& u, std::size_t i) const {
    double s = up_[i] * (u[i + 1] - u[i]);
    if (i > 0) s += lo_[i] * (u[i - 1] - u[i]);
    return s;
  }

  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const std::size_t M = size();
    out.resize(M);
    for (std::size_t i = 0; i + 1 < M; ++i) out[i] = transport(u, i) + reaction(u[i]) + source(i);
    out[M - 1] = 0.0;
  }

 private:
  Params params_;
  GridPtr grid_;
  Mode mode_;
  bool nonlinear_;
  double linear_ = 0.0;
  std::vector<double> lo_, up_, volume_;
  std::vector<std::size_t> forward_;
  std::vector<double> source_;
};

/// Discrete mass Σ V_i u_i · ω_{n-1} over the nodes before the boundary.
inline double discrete_mass(const RadialOperator& op, std::span<const double> u, int n) {
  double s = 0.0;
  const auto& V = op.volumes();
  for (std::size_t i = 0; i + 1 < u.size(); ++i) s += V[i] * u[i];
  return sphere_area(n) * s;
}

/// -F(u_*) at nodes with r >= r_from, zero elsewhere.
inline std::vector<double> singular_balance(const Params& params, const RadialOperator& op,
                                            const RadialGrid& grid, double r_from) {
  if (!has_singular_state(params)) throw InvalidArgument("balance: requires p > p_sg");
  const std::size_t M = grid.size();
  std::vector<double> us(M, 0.0), src(M, 0.0);
  for (std::size_t i = 1; i < M; ++i) us[i] = singular_state(params, grid[i]);
  for (std::size_t i = 1; i + 1 < M; ++i)
    if (grid[i - 1] >= r_from) src[i] = -(op.transport(us, i) + op.reaction(us[i]));
  return src;
}

// ---------------------------------------------------------------------------
// Time stepping

/// State passed to step observers after every accepted step.
struct StepInfo {
  double t_old = 0.0;
  double t_new = 0.0;
  double dt = 0.0;
  const std::vector<std::vector<double>>* old_states = nullptr;
  const std::vector<std::vector<double>>* new_states = nullptr;
  const std::vector<bool>* active = nullptr;
};

using StepObserver = std::function<bool(const StepInfo&)>;

namespace detail {

inline double sup_abs(const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s = std::max(s, std::fabs(x));
  return s;
}

// One backward Euler step v - dt F(v) = u by Newton. Returns false when
// Newton fails to converge.
inline bool backward_euler(const RadialOperator& op, const std::vector<double>& u, double dt,
                           const std::vector<double>& Fu, std::vector<double>& v,
                           std::vector<double>& scratch_lo, std::vector<double>& scratch_d,
                           std::vector<double>& scratch_up, std::vector<double>& res,
                           std::vector<double>& work) {
  const std::size_t M = u.size();
  v.resize(M);
  for (std::size_t i = 0; i < M; ++i) v[i] = u[i] + dt * Fu[i];
  v[M - 1] = u[M - 1];
  scratch_lo.resize(M);
  scratch_d.resize(M);
  scratch_up.resize(M);
  res.resize(M);
  const auto& lo = op.lower();
  const auto& up = op.upper();
  for (int it = 0; it < 25; ++it) {
    double vmax = 0.0;
    for (std::size_t i = 0; i + 1 < M; ++i) {
      res[i] = -(v[i] - u[i] - dt * (op.transport(v, i) + op.reaction(v[i]) + op.source(i)));
      scratch_d[i] = 1.0 + dt * (lo[i] + up[i] - op.reaction_derivative(v[i]));
      scratch_lo[i] = -dt * lo[i];
      scratch_up[i] = -dt * up[i];
      vmax = std::max(vmax, std::fabs(v[i]));
    }
    res[M - 1] = 0.0;
    scratch_d[M - 1] = 1.0;
    scratch_lo[M - 1] = 0.0;
    scratch_up[M - 1] = 0.0;
    solve_tridiagonal(scratch_lo, scratch_d, scratch_up, res, work);
    double dmax = 0.0;
    for (std::size_t i = 0; i + 1 < M; ++i) {
      v[i] += res[i];
      dmax = std::max(dmax, std::fabs(res[i]));
    }
    if (!std::isfinite(dmax)) return false;
    if (dmax <= 1e-13 * std::max(vmax, 1e-300) || dmax == 0.0) return true;
  }
  return false;
}

// Exact reaction u' = u^p (then the linear part) followed by backward Euler
// transport.
inline void split_step(const RadialOperator& op, double p, const std::vector<double>& u, double h,
                       std::vector<double>& v, std::vector<double>& lo_m, std::vector<double>& d,
                       std::vector<double>& up_m, std::vector<double>& work) {
  const std::size_t M = u.size();
  v.resize(M);
  lo_m.resize(M);
  d.resize(M);
  up_m.resize(M);
  const auto& lo = op.lower();
  const auto& up = op.upper();
  const double growth = std::exp(h * op.linear_coefficient());
  for (std::size_t i = 0; i + 1 < M; ++i) {
    const double x = u[i];
    v[i] = x > 0.0 ? growth * x * std::pow(1.0 - (p - 1.0) * h * std::pow(x, p - 1.0), -1.0 / (p - 1.0))
                   : growth * x;
    v[i] += h * op.source(i);
    d[i] = 1.0 + h * (lo[i] + up[i]);
    lo_m[i] = -h * lo[i];
    up_m[i] = -h * up[i];
  }
  v[M - 1] = u[M - 1];
  d[M - 1] = 1.0;
  lo_m[M - 1] = up_m[M - 1] = 0.0;
  solve_tridiagonal(lo_m, d, up_m, v, work);
}

inline double boundary_value(const Params& params, const SolverConfig& cfg,
                             const std::vector<double>& u0) {
  if (cfg.far_field == FarField::SingularTail)
    return singular_state(params, cfg.grid->r_max());
  return u0.back();
}

}  // namespace detail

/// Result of a batch evolution: one run per initial profile, shared time steps.
struct BatchOptions {
  StepObserver observer;
  std::vector<ComparisonProfile> comparisons;
};

inline Fate classify_fate(const EvolutionRun& run, const SolverConfig& config);

/// Co-evolves several initial profiles with a shared step sequence.
inline std::vector<EvolutionRun> evolve_batch(const Params& params,
                                              const std::vector<RadialProfile>& u0s,
                                              const SolverConfig& cfg,
                                              const BatchOptions& opts = {}) {
  validate(params);
  cfg.validate();
  if (u0s.empty()) throw InvalidArgument("evolve: no initial data");
  for (const auto& u0 : u0s)
    if (!(u0.grid() == *cfg.grid)) throw GridMismatch("evolve: initial data not on config grid");
  const std::size_t K = u0s.size();
  const std::size_t M = cfg.grid->size();
  const double p = params.p;
  RadialOperator op(params, cfg.grid, cfg.mode, cfg.nonlinearity);
  if (cfg.balance_from) op.set_source(singular_balance(params, op, *cfg.grid, *cfg.balance_from));

  std::vector<std::vector<double>> u(K), v(K), Fu(K);
  std::vector<EvolutionRun> runs(K);
  std::vector<bool> active(K, true);
  for (std::size_t k = 0; k < K; ++k) {
    u[k].assign(u0s[k].values().begin(), u0s[k].values().end());
    u[k][M - 1] = detail::boundary_value(params, cfg, u[k]);
    runs[k].params = params;
    runs[k].grid = cfg.grid;
    runs[k].mode = cfg.mode;
    runs[k].snapshots.push_back({0.0, u[k]});
    runs[k].times.push_back(0.0);
    runs[k].center_series.push_back(u[k][0]);
    runs[k].supnorm_series.push_back(detail::sup_abs(u[k]));
    for (const auto& c : opts.comparisons) runs[k].diagnostics.push_back({c.name, {}});
  }
  auto record_diagnostics = [&](std::size_t k) {
    for (std::size_t j = 0; j < opts.comparisons.size(); ++j) {
      const auto& g = opts.comparisons[j].values;
      std::vector<double> d(M);
      double s = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        d[i] = u[k][i] - g[i];
        s = std::max({s, std::fabs(u[k][i]), std::fabs(g[i])});
      }
      runs[k].diagnostics[j].second.push_back(
          count_sign_changes(d, cfg.grid->nodes(), kZeroNumberDeadBand * s));
    }
  };
  for (std::size_t k = 0; k < K; ++k) record_diagnostics(k);

  std::vector<double> snaps = cfg.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::remove_if(snaps.begin(), snaps.end(),
                             [&](double s) { return !(s > 0.0 && s < cfg.t_max); }),
              snaps.end());
  snaps.push_back(cfg.t_max);
  std::size_t next_snap = 0;

  std::vector<double> lo, d, up, res, work;
  double t = 0.0, t_lo = 0.0;  // compensated: steps fall far below ulp(t) near blow-up
  double dt = cfg.dt_init;
  long steps = 0, rejected = 0;
  double err_prev = 1.0;

  auto finish = [&](std::size_t k, Termination why, std::string evidence) {
    active[k] = false;
    runs[k].termination = why;
    runs[k].stop_evidence = std::move(evidence);
    if (runs[k].snapshots.back().t != t) runs[k].snapshots.push_back({t, u[k]});
  };

  while (std::any_of(active.begin(), active.end(), [](bool a) { return a; })) {
    if (steps >= cfg.max_steps) {
      for (std::size_t k = 0; k < K; ++k)
        if (active[k]) finish(k, Termination::StepBudget, "step budget exhausted");
      break;
    }
    // Step limits from the reaction.
    double sup = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      if (active[k]) sup = std::max(sup, detail::sup_abs(u[k]));
    double limit = cfg.dt_max;
    if (cfg.nonlinearity && sup > 0.0) {
      limit = std::min(limit, cfg.reaction_limit * std::pow(sup, 1.0 - p));
      // v - h v^p = u must stay solvable (with margin) at the largest value.
      const double solvable = std::pow(1.0 - 1.0 / p, p - 1.0) / p * std::pow(0.95, p);
      limit = std::min(limit, 0.5 * solvable * std::pow(sup, 1.0 - p));
    }
    if (op.linear_coefficient() > 0.0) limit = std::min(limit, 0.05 / op.linear_coefficient());
    bool reaction_limited = false;
    double h = dt;
    // Past M_blow: exact reaction + implicit transport, steps tied to the
    // reaction time. Only the blow-up certificate is taken from this phase.
    const bool terminal = cfg.nonlinearity && sup > cfg.M_blow;
    if (terminal) {
      h = std::min(cfg.reaction_limit, 0.5 / (p - 1.0)) * std::pow(sup, 1.0 - p);
      reaction_limited = true;
    } else if (h >= limit) {
      h = limit;
      reaction_limited = true;
    }
    bool snap_hit = false;
    const double to_snap = (snaps[next_snap] - t) - t_lo;
    if (h >= to_snap) {
      h = to_snap;
      snap_hit = true;
    }
    // dt_min is measured in units of the reaction time min(1, ‖u‖^{1-p}).
    const double tau = cfg.nonlinearity && sup > 1.0 ? std::pow(sup, 1.0 - p) : 1.0;
    if (!reaction_limited && h < cfg.dt_min * tau && !snap_hit) {
      for (std::size_t k = 0; k < K; ++k)
        if (active[k])
          finish(k, Termination::StepCollapse,
                 "time step fell below dt_min without reaction-limited growth");
      break;
    }
    ++steps;
    double err = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < K && ok; ++k) {
      if (!active[k]) continue;
      if (terminal) {
        detail::split_step(op, p, u[k], h, v[k], lo, d, up, work);
        continue;
      }
      op.apply(u[k], Fu[k]);
      if (!detail::backward_euler(op, u[k], h, Fu[k], v[k], lo, d, up, res, work)) {
        ok = false;
        break;
      }
      for (std::size_t i = 0; i + 1 < M; ++i) {
        const double e = 0.5 * std::fabs((v[k][i] - u[k][i]) - h * Fu[k][i]);
        const double sc = cfg.atol + cfg.rtol * std::max(std::fabs(u[k][i]), std::fabs(v[k][i]));
        err = std::max(err, e / sc);
      }
    }
    if (!ok || !(err <= 1.0)) {
      ++rejected;
      const double fac = ok && std::isfinite(err) ? std::max(0.2, 0.9 / std::sqrt(err)) : 0.25;
      dt = h * fac;
      continue;
    }
    for (std::size_t k = 0; k < K; ++k)
      for (double x : v[k])
        if (!std::isfinite(x)) throw IntegratorFailure("evolve: non-finite value");
    // Accept.
    const double t_old = t;
    if (snap_hit) {
      t = snaps[next_snap];
      t_lo = 0.0;
    } else {
      const double y = h + t_lo;
      const double sum = t + y;
      t_lo = y - (sum - t);
      t = sum;
    }
    if (opts.observer) {
      StepInfo info{t_old, t, h, &u, &v, &active};
      if (!opts.observer(info)) {
        std::swap(u, v);
        for (std::size_t k = 0; k < K; ++k)
          if (active[k]) {
            runs[k].times.push_back(t);
            runs[k].center_series.push_back(u[k][0]);
            runs[k].supnorm_series.push_back(detail::sup_abs(u[k]));
            finish(k, Termination::Horizon, "stopped by observer");
          }
        break;
      }
    }
    std::swap(u, v);
    {
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.35) * std::pow(err_prev, 0.2);
      fac = std::clamp(fac, 0.2, 2.0);
      err_prev = e;
      if (!(snap_hit && h < dt)) dt = h * fac;
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (!active[k]) continue;
      auto& run = runs[k];
      const double s = detail::sup_abs(u[k]);
      run.times.push_back(t);
      run.center_series.push_back(u[k][0]);
      run.supnorm_series.push_back(s);
      if (snap_hit) {
        run.snapshots.push_back({t, u[k]});
        record_diagnostics(k);
      }
      const std::size_t N = run.supnorm_series.size();
      if (cfg.nonlinearity && s > cfg.M_blow) {
        const bool collapsed = reaction_limited || h <= cfg.dt_min * tau;
        const bool doubling = N > 10 && s >= 2.0 * run.supnorm_series[N - 11];
        if ((collapsed && doubling) || s > 1e3 * cfg.M_blow) {
          double T = t + std::pow(s, 1.0 - p) / (p - 1.0);
          if (cfg.mode == Mode::Rescaled) T = std::expm1(T);
          run.blowup_time = T;
          std::ostringstream ev;
          ev << "sup " << s << " > M_blow with " << (collapsed ? "reaction-limited" : "large")
             << " steps and doubling over 10 steps";
          finish(k, Termination::BlowUp, ev.str());
          continue;
        }
      }
      if (s < cfg.eps_decay) {
        finish(k, Termination::Decay, "sup below eps_decay");
        continue;
      }
      if (cfg.early_stop && cfg.mode == Mode::Rescaled && t >= cfg.settle_min_time &&
          steps % 16 == 0) {
        const auto it = std::lower_bound(run.times.begin(), run.times.end(), 0.75 * t);
        const std::size_t j = static_cast<std::size_t>(it - run.times.begin());
        double lo_c = std::numeric_limits<double>::infinity(), hi_c = 0.0;
        for (std::size_t q = j; q < N; ++q) {
          lo_c = std::min(lo_c, run.center_series[q]);
          hi_c = std::max(hi_c, run.center_series[q]);
        }
        if (hi_c - lo_c < cfg.settle_tol * std::max(hi_c, 1e-300)) {
          finish(k, Termination::Settled, "rescaled center settled");
          continue;
        }
      }
    }
    if (snap_hit) {
      ++next_snap;
      if (next_snap == snaps.size()) {
        for (std::size_t k = 0; k < K; ++k)
          if (active[k]) finish(k, Termination::Horizon, "horizon reached");
        break;
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    runs[k].steps = steps;
    runs[k].rejected = rejected;
    runs[k].fate = classify_fate(runs[k], cfg);
  }
  return runs;
}

inline EvolutionRun evolve(const Params& params, const RadialProfile& u0, const SolverConfig& cfg,
                           const BatchOptions& opts = {}) {
  return evolve_batch(params, {u0}, cfg, opts).front();
}

// ---------------------------------------------------------------------------
// Fate classification

namespace detail {

inline std::size_t index_at_or_after(const std::vector<double>& times, double t) {
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

// Alternations between the rails: the number of switches in the sequence of
// rail hits (a high hit followed by a low hit counts once).
inline int rail_alternations(const std::vector<double>& sup, const Rails& rails) {
  int last = 0, count = 0;
  for (double s : sup) {
    const int side = s > rails.high ? 1 : (s < rails.low ? -1 : 0);
    if (side == 0) continue;
    if (last != 0 && side != last) ++count;
    last = side;
  }
  return count;
}

}  // namespace detail

inline Rails default_rails(const EvolutionRun& run) {
  const double s0 = run.supnorm_series.empty() ? 0.0 : run.supnorm_series.front();
  return {0.5 * s0, 2.0 * s0};
}

/// Applies the fate rules to a finished run.
inline Fate classify_fate(const EvolutionRun& run, const SolverConfig& config) {
  Fate f;
  const double p = run.params.p;
  const auto& ts = run.times;
  const auto& cs = run.center_series;
  const auto& ss = run.supnorm_series;
  if (ts.empty()) {
    f.evidence = "empty run";
    return f;
  }
  if (run.termination == Termination::BlowUp) {
    f.tag = FateTag::BlowUp;
    f.T_est = run.blowup_time;
    f.evidence = run.stop_evidence;
    return f;
  }
  const Rails rails = config.rails.value_or(default_rails(run));
  const int alternations = detail::rail_alternations(ss, rails);
  if (alternations >= 2) {
    f.tag = FateTag::Oscillatory;
    f.evidence = "sup-norm alternated between rails " + std::to_string(alternations) + " times";
    return f;
  }
  if (run.termination == Termination::Decay) {
    f.tag = FateTag::GlobalDecay;
    f.evidence = run.stop_evidence;
    return f;
  }
  if (run.termination == Termination::Settled) {
    f.tag = FateTag::GlobalDecay;
    std::ostringstream ev;
    ev << "rescaled profile settled at w(0) = " << cs.back()
       << ", i.e. decay at the rate t^{-1/(p-1)}";
    f.evidence = ev.str();
    return f;
  }
  if (run.termination == Termination::StepCollapse || run.termination == Termination::StepBudget) {
    f.evidence = run.stop_evidence;
    return f;
  }

  const double t_end = ts.back();
  const std::size_t N = ts.size();
  const std::size_t q = detail::index_at_or_after(ts, 0.75 * t_end);
  double c_lo = std::numeric_limits<double>::infinity(), c_hi = 0.0;
  for (std::size_t i = q; i < N; ++i) {
    c_lo = std::min(c_lo, cs[i]);
    c_hi = std::max(c_hi, cs[i]);
  }
  const bool settled = c_hi - c_lo < config.settle_tol * std::max(c_hi, 1e-300);

  if (run.mode == Mode::Rescaled) {
    if (settled) {
      f.tag = FateTag::GlobalDecay;
      f.evidence = "rescaled center settled over the last quarter";
      return f;
    }
    // The physical decade rule in s = log(t+1): decay exponent
    // 1/(p-1) - d log ŵ/ds over the last ln 10, with decelerating growth.
    const double decade = std::log(10.0);
    if (t_end >= 2.0 * decade && cs.back() > 0.0) {
      const std::size_t a = detail::index_at_or_after(ts, t_end - decade);
      const std::size_t h = detail::index_at_or_after(ts, t_end - 0.5 * decade);
      if (a < h && h < N - 1 && cs[a] > 0.0 && ss[a] > 0.0) {
        const double gamma = 1.0 / (p - 1.0) - std::log(ss.back() / ss[a]) / (t_end - ts[a]);
        const double g_early = std::log(cs[h] / cs[a]);
        const double g_late = std::log(cs.back() / cs[h]);
        if (gamma >= 0.5 / (p - 1.0) && (g_late <= 0.5 * g_early || g_late < 1e-4)) {
          f.tag = FateTag::GlobalDecay;
          std::ostringstream ev;
          ev << "rescaled profile bounded with decelerating drift; physical decay like t^-" << gamma;
          f.evidence = ev.str();
          return f;
        }
      }
    }
  } else {
    if (settled && cs.back() > 0.0 && !run.snapshots.empty()) {
      const double beta = cs.back();
      const auto ref = shoot_steady(run.params, beta, run.grid);
      const double r_cmp =
          std::min(0.25 * run.grid->r_max(), 5.0 * std::pow(beta, -0.5 * (p - 1.0)));
      const auto& u = run.snapshots.back().u;
      double worst = 0.0;
      for (std::size_t i = 0; i < u.size() && (*run.grid)[i] <= r_cmp; ++i)
        worst = std::max(worst, std::fabs(u[i] - ref.profile[i]) / ref.profile[i]);
      if (worst < 0.01) {
        f.tag = FateTag::ConvergeToSteadyState;
        f.beta = beta;
        std::ostringstream ev;
        ev << "center settled at " << beta << "; matches u_beta within " << worst
           << " on [0, " << r_cmp << "]";
        f.evidence = ev.str();
        return f;
      }
    }
    // Decay: sup-norm falls at least at half the self-similar rate over the
    // last decade.
    if (t_end > 0.0) {
      const std::size_t a = detail::index_at_or_after(ts, 0.1 * t_end);
      if (a < N - 1 && ts[a] > 0.0 && ss[a] > 0.0 && ss.back() > 0.0) {
        const double gamma = std::log(ss[a] / ss.back()) / std::log(t_end / ts[a]);
        if (ts[a] <= 0.2 * t_end && gamma >= 0.5 / (p - 1.0)) {
          f.tag = FateTag::GlobalDecay;
          std::ostringstream ev;
          ev << "sup-norm decays like t^-" << gamma << " over the last decade";
          f.evidence = ev.str();
          return f;
        }
      }
    }
  }
  // Grow-up: large center growth, bounded, still increasing.
  if (cs.front() > 0.0 && cs.back() >= config.grow_factor * cs.front() && ss.back() < config.M_blow) {
    const std::size_t h = detail::index_at_or_after(ts, 0.5 * t_end);
    bool increasing = true;
    for (std::size_t i = h + 1; i < N; ++i)
      if (cs[i] < cs[i - 1] * (1.0 - 1e-9)) increasing = false;
    if (increasing) {
      f.tag = FateTag::GrowUp;
      std::ostringstream ev;
      ev << "center grew by " << cs.back() / cs.front() << "x without reaching M_blow";
      f.evidence = ev.str();
      return f;
    }
  }
  f.evidence = "no criterion fired before the horizon";
  return f;
}

// ---------------------------------------------------------------------------
// Zero-number monitoring

struct SturmSeries {
  std::vector<double> times;
  std::vector<int> z;
  bool increased = false;  // a strict increase: solver-accuracy violation
};

inline SturmSeries sturm_monitor(const EvolutionRun& a, const EvolutionRun& b) {
  if (!(*a.grid == *b.grid)) throw GridMismatch("sturm_monitor: runs differ in grid");
  SturmSeries s;
  const std::size_t K = std::min(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < K; ++k) {
    if (a.snapshots[k].t != b.snapshots[k].t)
      throw InvalidArgument("sturm_monitor: snapshot times differ");
    const auto& ua = a.snapshots[k].u;
    const auto& ub = b.snapshots[k].u;
    std::vector<double> d(ua.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = ua[i] - ub[i];
      sup = std::max({sup, std::fabs(ua[i]), std::fabs(ub[i])});
    }
    const int z = count_sign_changes(d, a.grid->nodes(), kZeroNumberDeadBand * sup);
    if (!s.z.empty() && z > s.z.back()) s.increased = true;
    s.times.push_back(a.snapshots[k].t);
    s.z.push_back(z);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Mass comparison of two solutions that intersect once

struct MassSeries {
  std::vector<double> times;
  std::vector<double> f;        // ω ∫ (u_φ - u_ψ) r^{n-1} dr
  std::vector<double> fprime;   // (f_{k+1} - f_k)/dt, aligned with times[1..]
  std::vector<double> c;        // p U_φ(r_t)^{p-1}
  std::vector<double> r_t;
};

struct MassVerdict {
  bool hypotheses_ok = false;
  bool f_positive = false;
  bool inequality_holds = false;
  bool window_ended_by_jump = false;  // z left 1 before the horizon
  double worst_slack = 0.0;           // min of (f' - c f)/(|f'| + |c f|)
  std::size_t window_steps = 0;
  std::string evidence;
};

struct MassComparison {
  MassSeries series;
  MassVerdict verdict;
};

inline constexpr double kMassSlack = 1e-3;

/// Co-evolves u0 + φ and u0 + ψ (φ = bump_heavy, ψ = bump_wide) and checks
/// f'(t) >= c_t f(t) while the two solutions intersect exactly once.
inline MassComparison mass_comparison(const Params& params, const RadialProfile& u0_lower,
                                      const RadialProfile& bump_wide,
                                      const RadialProfile& bump_heavy, const SolverConfig& cfg) {
  const int n = params.n;
  const double p = params.p;
  if (!same_grid(u0_lower, bump_wide) || !same_grid(u0_lower, bump_heavy))
    throw GridMismatch("mass_comparison: profiles differ in grid");
  MassComparison out;
  auto& V = out.verdict;
  const auto& phi = bump_heavy;
  const auto& psi = bump_wide;
  const int z0 = zero_number(phi, psi);
  const double m_phi = radial_moment(phi, n), m_psi = radial_moment(psi, n);
  if (z0 != 1 || !(phi[0] > psi[0]) || !(m_psi < m_phi)) {
    std::ostringstream ev;
    ev << "hypotheses violated: z(phi-psi) = " << z0 << ", phi(0) = " << phi[0]
       << ", psi(0) = " << psi[0] << ", masses " << m_phi << " vs " << m_psi;
    throw InvalidArgument(ev.str());
  }
  V.hypotheses_ok = true;

  std::vector<double> a(u0_lower.size()), b(u0_lower.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = u0_lower[i] + phi[i];
    b[i] = u0_lower[i] + psi[i];
  }
  const RadialOperator op(params, cfg.grid, Mode::Physical);
  const auto radii = cfg.grid->nodes();
  auto f_of = [&](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - y[i];
    return discrete_mass(op, d, n);
  };
  auto& S = out.series;
  S.times.push_back(0.0);
  S.f.push_back(f_of(a, b));
  V.f_positive = S.f.back() > 0.0;
  V.inequality_holds = true;
  V.worst_slack = std::numeric_limits<double>::infinity();

  BatchOptions opts;
  opts.observer = [&](const StepInfo& info) {
    const auto& ua = (*info.new_states)[0];
    const auto& ub = (*info.new_states)[1];
    std::vector<double> d(ua.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = ua[i] - ub[i];
      sup = std::max({sup, ua[i], ub[i]});
    }
    const double eta = kZeroNumberDeadBand * sup;
    if (count_sign_changes(d, radii, eta) != 1) {
      V.window_ended_by_jump = true;
      return false;
    }
    std::size_t j = 0;
    while (j + 1 < d.size() && !(d[j] > eta && d[j + 1] <= eta)) ++j;
    std::size_t k = j + 1;
    while (k < d.size() && std::fabs(d[k]) <= eta) ++k;
    if (k >= d.size()) k = d.size() - 1;
    const double theta = d[j] / (d[j] - d[k]);
    const double rt = radii[j] + theta * (radii[k] - radii[j]);
    const double u_rt = ua[j] + theta * (ua[k] - ua[j]);
    const double c = p * std::pow(std::max(u_rt, 0.0), p - 1.0);
    const double f_new = f_of(ua, ub);
    const double fp = (f_new - S.f.back()) / info.dt;
    const double scale = std::fabs(fp) + std::fabs(c * f_new);
    const double slack = scale > 0.0 ? (fp - c * f_new) / scale : 0.0;
    V.worst_slack = std::min(V.worst_slack, slack);
    if (slack < -kMassSlack) V.inequality_holds = false;
    if (!(f_new > 0.0)) V.f_positive = false;
    S.times.push_back(info.t_new);
    S.f.push_back(f_new);
    S.fprime.push_back(fp);
    S.c.push_back(c);
    S.r_t.push_back(rt);
    ++V.window_steps;
    return true;
  };
  const RadialProfile pa(cfg.grid, std::move(a)), pb(cfg.grid, std::move(b));
  evolve_batch(params, {pa, pb}, cfg, opts);
  std::ostringstream ev;
  ev << V.window_steps << " steps in the z = 1 window, worst relative slack " << V.worst_slack;
  V.evidence = ev.str();
  return out;
}

// ---------------------------------------------------------------------------
// Discrete self-similar profiles

/// Stationary state of the rescaled scheme obtained by marching the discrete
/// equations outward from w_0 = a, with its a-derivative φ. The last node is
/// the value the Dirichlet boundary would have to carry.
struct DiscreteProfile {
  double a = 0.0;
  std::vector<double> w;
  std::vector<double> phi;
  bool positive = true;
};

inline DiscreteProfile discrete_self_similar(const Params& params, GridPtr grid, double a) {
  const RadialOperator op(params, grid, Mode::Rescaled);
  const std::size_t M = grid->size();
  const auto& lo = op.lower();
  const auto& up = op.upper();
  DiscreteProfile d{a, std::vector<double>(M, 0.0), std::vector<double>(M, 0.0)};
  d.w[0] = a;
  d.phi[0] = 1.0;
  for (std::size_t i = 0; i + 1 < M; ++i) {
    // up_i (w_{i+1} - w_i) + lo_i (w_{i-1} - w_i) + g(w_i) = 0
    const double wl = i > 0 ? d.w[i - 1] : 0.0;
    const double pl = i > 0 ? d.phi[i - 1] : 0.0;
    d.w[i + 1] = d.w[i] - (lo[i] * (wl - d.w[i]) + op.reaction(d.w[i])) / up[i];
    d.phi[i + 1] =
        d.phi[i] - (lo[i] * (pl - d.phi[i]) + op.reaction_derivative(d.w[i]) * d.phi[i]) / up[i];
    if (!(d.w[i + 1] > 0.0)) {
      d.positive = false;
      for (std::size_t j = i + 1; j < M; ++j) d.w[j] = d.phi[j] = 0.0;
      break;
    }
  }
  return d;
}

/// The discrete maximal profile: the a maximizing the boundary value of
/// discrete_self_similar, located by bisection on the sign of φ at the
/// boundary inside [a_lo, a_hi].
inline DiscreteProfile discrete_fold(const Params& params, GridPtr grid, double a_lo, double a_hi) {
  auto sign_at = [&](double a) {
    const auto d = discrete_self_similar(params, grid, a);
    return d.positive ? d.phi.back() : -1.0;
  };
  if (!(sign_at(a_lo) > 0.0) || !(sign_at(a_hi) < 0.0))
    throw InvalidBracket("discrete_fold: bracket does not contain the maximum");
  for (int it = 0; it < 200 && a_hi - a_lo > 1e-15 * a_hi; ++it) {
    const double mid = 0.5 * (a_lo + a_hi);
    (sign_at(mid) > 0.0 ? a_lo : a_hi) = mid;
  }
  return discrete_self_similar(params, grid, 0.5 * (a_lo + a_hi));
}

}  // namespace fujita
