#include "rectspike/quadrature.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rectspike/error.hpp"

namespace rectspike::quadrature {
namespace {

constexpr int kOrder = 16;

struct Rule {
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};
};

// Newton iteration on P_n from the Chebyshev initial guesses.
Rule make_rule() {
  Rule rule;
  for (int i = 0; i < kOrder; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= kOrder; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const Rule& rule() {
  static const Rule r = make_rule();
  return r;
}

double panel(const std::function<double(double)>& f, double lo, double hi) {
  const Rule& r = rule();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (int i = 0; i < kOrder; ++i) sum += r.weights[i] * f(mid + half * r.nodes[i]);
  return sum * half;
}

struct State {
  const std::function<double(double)>& f;
  const Options& opts;
  double tol_density;  // tolerance per unit length
  std::size_t panels = 0;
};

double refine(State& st, double lo, double hi, double whole, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = panel(st.f, lo, mid);
  const double right = panel(st.f, mid, hi);
  st.panels += 2;
  const double both = left + right;
  const double err = std::abs(both - whole);
  const double local_tol = std::max(st.tol_density * (hi - lo),
                                    64.0 * std::numeric_limits<double>::epsilon() * std::abs(both));
  if (err <= local_tol || !(mid > lo && mid < hi)) return both;
  if (depth >= st.opts.max_depth || st.panels >= st.opts.max_panels) {
    throw NonConvergence("adaptive quadrature exhausted its budget on [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  }
  return refine(st, lo, mid, left, depth + 1) + refine(st, mid, hi, right, depth + 1);
}

}  // namespace

double adaptive_gauss_legendre(const std::function<double(double)>& f, double lo, double hi,
                               const Options& opts) {
  if (hi == lo) return 0.0;
  if (hi < lo) return -adaptive_gauss_legendre(f, hi, lo, opts);
  State st{f, opts, opts.abs_tol / (hi - lo)};
  const double whole = panel(f, lo, hi);
  st.panels = 1;
  const double value = refine(st, lo, hi, whole, 0);
  if (!std::isfinite(value)) throw NonConvergence("quadrature produced a non-finite value");
  return value;
}

}  // namespace rectspike::quadrature
