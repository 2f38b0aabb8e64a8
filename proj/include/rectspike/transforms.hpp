#pragma once

#include <functional>
#include <optional>

#include "rectspike/measures.hpp"

namespace rectspike {

/// Limit of a function at a support edge. `value` is +inf when the approach
/// sequence diverges.
struct EdgeLimit {
  double value = 0.0;
  bool divergent() const;
};

/// Singular-value law of the noise together with the aspect ratio c = lim n/m.
/// The one-sided edge limits are computed once at construction.
class TransformContext {
 public:
  TransformContext(SpectralMeasure mu, double c, double quad_tol = 1e-12);

  const SpectralMeasure& mu() const { return mu_; }
  const SpectralMeasure& mu_tilde() const { return mu_tilde_; }
  double c() const { return c_; }
  SupportBounds bounds() const { return bounds_; }
  double quad_tol() const { return quad_tol_; }

  /// D(b+), possibly +inf.
  double d_b_plus() const { return d_b_plus_; }
  /// |phi(a-)| in the square regime (c = 1, a > 0); empty otherwise.
  std::optional<double> phi_a_minus_abs() const { return phi_a_minus_abs_; }
  bool square_regime() const { return c_ == 1.0 && bounds_.a > 0.0; }

 private:
  SpectralMeasure mu_;
  SpectralMeasure mu_tilde_;
  double c_;
  SupportBounds bounds_;
  double quad_tol_;
  double d_b_plus_ = 0.0;
  std::optional<double> phi_a_minus_abs_;
};

/// D(z) = phi_mu(z) * (c phi_mu(z) + (1 - c)/z) for z > b.
double d_transform(const TransformContext& ctx, double z);
double d_prime(const TransformContext& ctx, double z);

/// D(b+) from the approach sequence z_k = b + (b - a + 1) 2^-k, k = 10..40:
/// +inf when values exceed 1e12 or the (Aitken-accelerated) sequence fails a
/// relative Cauchy test at 1e-6.
double d_at_b_plus(const TransformContext& ctx);

/// Largest-edge threshold (D(b+))^(-1/2), with +inf mapped to 0.
double threshold_large(const TransformContext& ctx);

/// Unique z in (b, inf) with D(z) = w. Throws OutOfRange if w >= D(b+).
double d_inverse(const TransformContext& ctx, double w);

/// lim_{z -> a-} |phi_mu(z)|; requires c = 1 and a > 0.
double phi_at_a_minus_abs(const TransformContext& ctx);

/// Smallest-edge threshold 1 / |phi(a-)|, with +inf mapped to 0.
double threshold_small(const TransformContext& ctx);

/// Unique z in (0, a) with |phi_mu(z)| = 1/theta.
double phi_inverse_small(const TransformContext& ctx, double theta);

/// Inverse of u -> c u^2 + (c + 1) u on the branch through 0.
double u_function(double c, double z);

/// Rectangular C-transform U(z (D^-1(z))^2 - 1).
double c_transform(const TransformContext& ctx, double z);

/// Generic one-sided limit of `f` at `edge` approached from above
/// (`from_above`) or below, along edge +/- scale 2^-k for k = 10..40. Used for
/// D(b+), |phi(a-)| and divergence checks of phi'.
EdgeLimit one_sided_limit(const std::function<double(double)>& f, double edge, double scale,
                          bool from_above);

/// True when phi'(b+) = -inf numerically (divergence along the b+ sequence).
bool phi_prime_diverges_at_b(const TransformContext& ctx);

}  // namespace rectspike
