#pragma once

// Radial grids, sampled radial profiles and the functionals defined on them:
// the zero number of a difference, membership in the monotone class X1,
// radial quadrature and CSV exchange.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fujita/error.hpp"

namespace fujita {

inline constexpr std::size_t kMinGridNodes = 16;
inline constexpr std::size_t kDefaultGridNodes = 2048;

enum class Stretching { Uniform, Geometric, Custom };

/// Strictly increasing radii with r_0 = 0.
class RadialGrid {
 public:
  static RadialGrid uniform(double r_max, std::size_t nodes) {
    check_size(nodes);
    if (!(r_max > 0.0)) throw InvalidArgument("grid: r_max must be > 0");
    std::vector<double> r(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      r[i] = r_max * static_cast<double>(i) / static_cast<double>(nodes - 1);
    r.back() = r_max;
    return RadialGrid(std::move(r), Stretching::Uniform, 1.0);
  }

  /// Spacing h0·q^i; q is solved so that the last node lands on r_max.
  static RadialGrid geometric(double r_max, std::size_t nodes, double h0) {
    check_size(nodes);
    if (!(r_max > 0.0) || !(h0 > 0.0))
      throw InvalidArgument("grid: r_max and h0 must be > 0");
    const double cells = static_cast<double>(nodes - 1);
    if (h0 * cells >= r_max) throw InvalidArgument("grid: h0 too large");
    // sum_{i<cells} q^i = r_max/h0, solved for q > 1 by bisection in log q.
    const double target = r_max / h0;
    auto total = [&](double lq) {
      return std::expm1(cells * lq) / std::expm1(lq);
    };
    double lo = 1e-15, hi = 1.0;
    while (total(hi) < target) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) < target ? lo : hi) = mid;
    }
    const double q = std::exp(0.5 * (lo + hi));
    std::vector<double> r(nodes);
    r[0] = 0.0;
    double h = h0;
    for (std::size_t i = 1; i < nodes; ++i) {
      r[i] = r[i - 1] + h;
      h *= q;
    }
    const double scale = r_max / r.back();
    for (auto& x : r) x *= scale;
    r.back() = r_max;
    return RadialGrid(std::move(r), Stretching::Geometric, q);
  }

  /// Geometric grid whose first spacing is a quarter of the uniform spacing.
  static RadialGrid default_for(double r_max,
                                std::size_t nodes = kDefaultGridNodes) {
    return geometric(r_max, nodes,
                     0.25 * r_max / static_cast<double>(nodes - 1));
  }

  static RadialGrid from_nodes(std::vector<double> nodes) {
    check_size(nodes.size());
    if (nodes.front() != 0.0)
      throw InvalidArgument("grid: first node must be r = 0");
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i] > nodes[i - 1]))
        throw InvalidArgument("grid: nodes must be strictly increasing");
    return RadialGrid(std::move(nodes), Stretching::Custom, 0.0);
  }

  std::size_t size() const { return r_.size(); }
  double operator[](std::size_t i) const { return r_[i]; }
  double r_max() const { return r_.back(); }
  std::span<const double> nodes() const { return r_; }
  Stretching stretching() const { return stretching_; }
  double ratio() const { return ratio_; }
  double min_spacing() const {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < r_.size(); ++i) h = std::min(h, r_[i] - r_[i - 1]);
    return h;
  }

  /// Index of the last node with r_i <= r (clamped to [0, size-2]).
  std::size_t locate(double r) const {
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = it == r_.begin() ? 0 : static_cast<std::size_t>(it - r_.begin()) - 1;
    return std::min(i, r_.size() - 2);
  }

  friend bool operator==(const RadialGrid& a, const RadialGrid& b) {
    return a.r_ == b.r_;
  }

 private:
  RadialGrid(std::vector<double> r, Stretching s, double q)
      : r_(std::move(r)), stretching_(s), ratio_(q) {}

  static void check_size(std::size_t nodes) {
    if (nodes < kMinGridNodes)
      throw InvalidArgument("grid: at least 16 nodes required");
  }

  std::vector<double> r_;
  Stretching stretching_;
  double ratio_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(RadialGrid g) {
  return std::make_shared<const RadialGrid>(std::move(g));
}

/// Nonnegative samples of a radial function on a grid.
class RadialProfile {
 public:
  RadialProfile(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("profile: null grid");
    if (values_.size() != grid_->size())
      throw InvalidArgument("profile: value count does not match grid");
    for (double v : values_) {
      if (!(v >= 0.0))
        throw InvalidArgument("profile: values must be finite and >= 0");
    }
    monotone_ = std::is_sorted(values_.rbegin(), values_.rend());
  }

  /// Samples f at every node.
  static RadialProfile sample(GridPtr grid,
                              const std::function<double(double)>& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid)[i]);
    return RadialProfile(std::move(grid), std::move(v));
  }

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  bool is_monotone() const { return monotone_; }

  double sup_norm() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
  }

  /// Piecewise-linear value at r; constant beyond the last node.
  double at(double r) const {
    const auto& g = *grid_;
    if (r <= 0.0) return values_.front();
    if (r >= g.r_max()) return values_.back();
    const std::size_t i = g.locate(r);
    const double t = (r - g[i]) / (g[i + 1] - g[i]);
    return (1.0 - t) * values_[i] + t * values_[i + 1];
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
  bool monotone_ = false;
};

inline bool same_grid(const RadialProfile& a, const RadialProfile& b) {
  return a.grid_ptr() == b.grid_ptr() || a.grid() == b.grid();
}

/// Nonnegative and nonincreasing on the samples.
inline bool check_X1(const RadialProfile& f) {
  return f.is_monotone();  // nonnegativity is a class invariant
}

inline bool check_X1(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) return false;
    if (i > 0 && values[i] > values[i - 1]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Zero number

/// Radial window [r_lo, r_hi] for restricted zero numbers.
struct Window {
  double r_lo = 0.0;
  double r_hi = std::numeric_limits<double>::infinity();
};

/// Strict sign alternations of `diff` on the nodes of `grid` inside `window`.
/// Entries with |diff| <= dead_band carry no sign; a run of them between two
/// equal signs is a touching, between opposite signs a single crossing.
inline int count_sign_changes(std::span<const double> diff,
                              std::span<const double> radii, double dead_band,
                              Window window = {}) {
  int count = 0;
  int last = 0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (radii[i] < window.r_lo || radii[i] > window.r_hi) continue;
    const double d = diff[i];
    const int s = d > dead_band ? 1 : (d < -dead_band ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

/// Relative dead band used for sampled sign detection.
inline constexpr double kZeroNumberDeadBand = 1e-12;

/// z(f - g), optionally restricted to a window.
inline int zero_number(const RadialProfile& f, const RadialProfile& g,
                       std::optional<Window> window = {}) {
  if (!same_grid(f, g)) throw GridMismatch("zero_number: profiles differ in grid");
  Window w = window.value_or(Window{});
  if (w.r_lo < 0.0 || w.r_hi < w.r_lo)
    throw InvalidArgument("zero_number: invalid window");
  std::vector<double> d(f.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = f[i] - g[i];
  const double eta = kZeroNumberDeadBand * std::max(f.sup_norm(), g.sup_norm());
  return count_sign_changes(d, f.grid().nodes(), eta, w);
}

// ---------------------------------------------------------------------------
// Quadrature

/// Surface area of the unit sphere in R^n, 2π^{n/2}/Γ(n/2).
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// ∫_0^{R} f(r) r^{n-1} dr by the trapezoidal rule on the grid nodes.
inline double radial_moment(std::span<const double> values,
                            std::span<const double> radii, int n) {
  double s = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double a = values[i - 1] * std::pow(radii[i - 1], n - 1);
    const double b = values[i] * std::pow(radii[i], n - 1);
    s += 0.5 * (a + b) * (radii[i] - radii[i - 1]);
  }
  return s;
}

inline double radial_moment(const RadialProfile& f, int n) {
  return radial_moment(f.values(), f.grid().nodes(), n);
}

/// ∫_{R^n} f(|x|) dx.
inline double lebesgue_mass(const RadialProfile& f, int n) {
  return sphere_area(n) * radial_moment(f, n);
}

// ---------------------------------------------------------------------------
// Interpolation

/// Piecewise-linear interpolation of (xs, ys) at x; constant extrapolation.
inline double interp_linear(std::span<const double> xs,
                            std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return (1.0 - t) * ys[i] + t * ys[i + 1];
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
      : x_(std::move(xs)), y_(std::move(ys)), m_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw InvalidArgument("MonotoneCubic: need >= 2 matching samples");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_[0] = delta[0];
    m_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
      m_[i] = delta[i - 1] * delta[i] <= 0.0 ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / delta[i];
      const double b = m_[i + 1] / delta[i];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m_[i] = tau * a * delta[i];
        m_[i + 1] = tau * b * delta[i];
      }
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
  }

 private:
  std::vector<double> x_, y_, m_;
};

/// Resamples f onto another grid by monotone cubic interpolation.
inline RadialProfile resample(const RadialProfile& f, GridPtr target) {
  MonotoneCubic spline(std::vector<double>(f.grid().nodes().begin(), f.grid().nodes().end()),
                       std::vector<double>(f.values().begin(), f.values().end()));
  return RadialProfile::sample(std::move(target), [&](double r) {
    return std::max(0.0, spline(r));
  });
}

/// Sorted union of the nodes of two grids.
inline GridPtr merge_grids(const RadialGrid& a, const RadialGrid& b) {
  std::vector<double> r;
  r.reserve(a.size() + b.size());
  std::merge(a.nodes().begin(), a.nodes().end(), b.nodes().begin(), b.nodes().end(),
             std::back_inserter(r));
  r.erase(std::unique(r.begin(), r.end(), [](double x, double y) {
            return std::fabs(x - y) <= 1e-14 * std::max(1.0, std::fabs(y));
          }),
          r.end());
  return make_grid(RadialGrid::from_nodes(std::move(r)));
}

/// Nodewise max of two profiles on a shared grid.
inline RadialProfile pointwise_max(const RadialProfile& a, const RadialProfile& b) {
  if (!same_grid(a, b)) throw GridMismatch("pointwise_max: profiles differ in grid");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(a[i], b[i]);
  return RadialProfile(a.grid_ptr(), std::move(v));
}

/// Smallest nonincreasing majorant: v_i = max_{j >= i} f_j.
inline std::vector<double> nonincreasing_majorant(std::span<const double> f) {
  std::vector<double> v(f.begin(), f.end());
  for (std::size_t i = v.size(); i-- > 1;) v[i - 1] = std::max(v[i - 1], v[i]);
  return v;
}

/// Largest nonincreasing minorant: v_i = min_{j <= i} f_j.
inline std::vector<double> nonincreasing_minorant(std::span<const double> f) {
  std::vector<double> v(f.begin(), f.end());
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::min(v[i], v[i - 1]);
  return v;
}

// ---------------------------------------------------------------------------
// CSV exchange: header `r,value`, one node per line.

struct ProfileSamples {
  std::vector<double> r;
  std::vector<double> value;
};

inline void write_profile_csv(std::ostream& os, std::span<const double> radii,
                              std::span<const double> values) {
  os << "r,value\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < radii.size(); ++i)
    os << radii[i] << ',' << values[i] << '\n';
}

inline void write_profile_csv(const std::string& path, const RadialProfile& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_profile_csv(os, f.grid().nodes(), f.values());
}

inline ProfileSamples read_profile_csv(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError(name + ": empty profile CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "r,value") throw SchemaError(name + ": expected header 'r,value'");
  ProfileSamples s;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw SchemaError(name + ":" + std::to_string(lineno) + ": missing comma");
    try {
      std::size_t used = 0;
      const double r = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      if (!s.r.empty() && !(r > s.r.back()))
        throw SchemaError(name + ":" + std::to_string(lineno) +
                          ": radii must be strictly increasing");
      s.r.push_back(r);
      s.value.push_back(v);
    } catch (const std::invalid_argument&) {
      throw SchemaError(name + ":" + std::to_string(lineno) + ": not a number");
    } catch (const std::out_of_range&) {
      throw SchemaError(name + ":" + std::to_string(lineno) + ": number out of range");
    }
  }
  if (s.r.size() < 2) throw SchemaError(name + ": need at least two samples");
  return s;
}

inline ProfileSamples read_profile_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact(path);
  return read_profile_csv(is, path);
}

/// Linear interpolation of CSV samples onto a working grid.
inline RadialProfile profile_from_samples(const ProfileSamples& s, GridPtr grid) {
  return RadialProfile::sample(std::move(grid), [&](double r) {
    return std::max(0.0, interp_linear(s.r, s.value, r));
  });
}

}  // namespace fujita
