#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fujita/error.hpp"

namespace fujita {

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored; `rhs` is overwritten by the solution.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<double> rhs,
                              std::vector<double>& work) {
  const std::size_t n = diag.size();
  work.resize(n);
  double b = diag[0];
  if (b == 0.0) throw IntegratorFailure("tridiagonal: zero pivot");
  rhs[0] /= b;
  for (std::size_t i = 1; i < n; ++i) {
    work[i] = upper[i - 1] / b;
    b = diag[i] - lower[i] * work[i];
    if (b == 0.0) throw IntegratorFailure("tridiagonal: zero pivot");
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / b;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= work[i + 1] * rhs[i + 1];
}

}  // namespace fujita
