#include "rectspike/transforms.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "rectspike/error.hpp"

namespace rectspike {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kFirstStep = 10;
constexpr int kLastStep = 40;
constexpr double kDivergenceCutoff = 1e12;
constexpr double kCauchyRel = 1e-6;
// Aitken extrapolation is trusted only when consecutive differences shrink;
// on a diverging geometric sequence it would return a spurious anti-limit.
constexpr double kMaxContraction = 0.95;

double edge_scale(const SupportBounds& sb) { return sb.b - sb.a + 1.0; }

}  // namespace

bool EdgeLimit::divergent() const { return std::isinf(value); }

EdgeLimit one_sided_limit(const std::function<double(double)>& f, double edge, double scale,
                          bool from_above) {
  std::vector<double> v;
  for (int k = kFirstStep; k <= kLastStep; ++k) {
    const double eps = std::ldexp(scale, -k);
    const double z = from_above ? edge + eps : edge - eps;
    if (!(z > 0.0) || z == edge) continue;
    const double fz = f(z);
    if (!std::isfinite(fz) || std::abs(fz) > kDivergenceCutoff) return {kInf};
    v.push_back(fz);
  }
  if (v.size() < 4) throw NonConvergence("edge limit: approach sequence too short");

  const std::size_t n = v.size();
  const double d_last = v[n - 1] - v[n - 2];
  const double d_prev = v[n - 2] - v[n - 3];
  const auto aitken = [&](std::size_t i) {
    const double d1 = v[i] - v[i - 1];
    const double d0 = v[i - 1] - v[i - 2];
    const double denom = d1 - d0;
    return denom == 0.0 ? v[i] : v[i] - d1 * d1 / denom;
  };
  const bool contracting = std::abs(d_last) <= kMaxContraction * std::abs(d_prev);
  const double a_last = aitken(n - 1);
  const double a_prev = aitken(n - 2);

  if (std::abs(d_last) <= kCauchyRel * std::abs(v[n - 1]) || d_last == 0.0) {
    return {contracting ? a_last : v[n - 1]};
  }
  if (contracting && std::abs(a_last - a_prev) <= kCauchyRel * std::abs(a_last)) {
    return {a_last};
  }
  return {kInf};
}

TransformContext::TransformContext(SpectralMeasure mu, double c, double quad_tol)
    : mu_(std::move(mu)),
      mu_tilde_(tilde(mu_, c)),
      c_(c),
      bounds_(mu_.bounds()),
      quad_tol_(quad_tol) {
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("aspect ratio c must lie in [0, 1]");
  if (!(quad_tol > 0.0)) throw DomainError("quadrature tolerance must be positive");
  d_b_plus_ = one_sided_limit([this](double z) { return d_transform(*this, z); }, bounds_.b,
                              edge_scale(bounds_), true)
                  .value;
  if (square_regime()) {
    phi_a_minus_abs_ = one_sided_limit([this](double z) { return std::abs(phi(mu_, z, quad_tol_)); },
                                       bounds_.a, edge_scale(bounds_), false)
                           .value;
  }
}

double d_transform(const TransformContext& ctx, double z) {
  if (!(z > ctx.bounds().b)) {
    std::ostringstream os;
    os << "d_transform: z = " << z << " must exceed b = " << ctx.bounds().b;
    throw DomainError(os.str());
  }
  const double c = ctx.c();
  const double p = phi(ctx.mu(), z, ctx.quad_tol());
  return p * (c * p + (1.0 - c) / z);
}

double d_prime(const TransformContext& ctx, double z) {
  if (!(z > ctx.bounds().b)) {
    std::ostringstream os;
    os << "d_prime: z = " << z << " must exceed b = " << ctx.bounds().b;
    throw DomainError(os.str());
  }
  const double c = ctx.c();
  const double p = phi(ctx.mu(), z, ctx.quad_tol());
  const double dp = phi_prime(ctx.mu(), z, ctx.quad_tol());
  const double pt = c * p + (1.0 - c) / z;
  const double dpt = c * dp - (1.0 - c) / (z * z);
  return dp * pt + p * dpt;
}

double d_at_b_plus(const TransformContext& ctx) { return ctx.d_b_plus(); }

double threshold_large(const TransformContext& ctx) {
  const double d = ctx.d_b_plus();
  return std::isinf(d) ? 0.0 : 1.0 / std::sqrt(d);
}

double d_inverse(const TransformContext& ctx, double w) {
  if (!(w > 0.0) || !std::isfinite(w)) {
    std::ostringstream os;
    os << "d_inverse: w = " << w << " must be a positive real";
    throw DomainError(os.str());
  }
  // D(b+) carries an approach error of order 1e-11; arguments within this
  // relative margin of it are treated as lying on the edge.
  if (w >= ctx.d_b_plus() * (1.0 - 2e-9)) {
    std::ostringstream os;
    os << "d_inverse: w = " << w << " is not below D(b+) = " << ctx.d_b_plus();
    throw OutOfRange(os.str());
  }
  const double b = ctx.bounds().b;
  double lo = b;
  double hi = b + 1.0;
  for (int i = 0; d_transform(ctx, hi) >= w; ++i) {
    if (i > 2000) throw NonConvergence("d_inverse: bracket expansion failed");
    lo = hi;
    hi = b + 2.0 * (hi - b);
  }
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (d_transform(ctx, mid) >= w) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double phi_at_a_minus_abs(const TransformContext& ctx) {
  if (!ctx.square_regime()) {
    std::ostringstream os;
    os << "phi(a-) needs c = 1 and a > 0 (got c = " << ctx.c() << ", a = " << ctx.bounds().a << ")";
    throw DomainError(os.str());
  }
  return *ctx.phi_a_minus_abs();
}

double threshold_small(const TransformContext& ctx) {
  const double p = phi_at_a_minus_abs(ctx);
  return std::isinf(p) ? 0.0 : 1.0 / p;
}

double phi_inverse_small(const TransformContext& ctx, double theta) {
  const double threshold = threshold_small(ctx);
  if (!(theta > threshold)) {
    std::ostringstream os;
    os << "phi_inverse_small: theta = " << theta << " is not above the threshold " << threshold;
    throw OutOfRange(os.str());
  }
  const double a = ctx.bounds().a;
  const double target = 1.0 / theta;
  double lo = 0.0;
  double hi = a;
  while (hi - lo > 1e-12 * a) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (-phi(ctx.mu(), mid, ctx.quad_tol()) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double u_function(double c, double z) {
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("u_function: c must lie in [0, 1]");
  if (c == 0.0) return z;
  const double radicand = (c + 1.0) * (c + 1.0) + 4.0 * c * z;
  if (radicand < 0.0) {
    std::ostringstream os;
    os << "u_function: (c+1)^2 + 4cz < 0 at c = " << c << ", z = " << z;
    throw DomainError(os.str());
  }
  // Rationalized form of (-c - 1 + sqrt(radicand)) / (2c); no cancellation
  // near z = 0.
  return 2.0 * z / ((c + 1.0) + std::sqrt(radicand));
}

double c_transform(const TransformContext& ctx, double z) {
  const double x = d_inverse(ctx, z);
  return u_function(ctx.c(), z * x * x - 1.0);
}

bool phi_prime_diverges_at_b(const TransformContext& ctx) {
  const SpectralMeasure& mu = ctx.mu();
  const double tol = ctx.quad_tol();
  return one_sided_limit([&](double z) { return phi_prime(mu, z, tol); }, ctx.bounds().b,
                         edge_scale(ctx.bounds()), true)
      .divergent();
}

}  // namespace rectspike
