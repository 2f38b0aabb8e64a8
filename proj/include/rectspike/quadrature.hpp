#pragma once

#include <cstddef>
#include <functional>

namespace rectspike::quadrature {

struct Options {
  double abs_tol = 1e-10;
  int max_depth = 60;
  std::size_t max_panels = 400000;
};

/// Integral of `f` over [lo, hi] by recursively bisected 16-point
/// Gauss-Legendre panels. A panel is accepted when it agrees with the sum of
/// its two halves to within its share of `abs_tol` (floored at a few ulps of
/// the panel value). Throws NonConvergence when the depth or panel budget is
/// exhausted.
double adaptive_gauss_legendre(const std::function<double(double)>& f,
                               double lo, double hi, const Options& opts = {});

}  // namespace rectspike::quadrature
