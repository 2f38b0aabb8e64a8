#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rectspike {

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

struct SupportBounds {
  double a = 0.0;  // infimum of the support
  double b = 0.0;  // supremum of the support
};

/// Power-law exponents of a density at its support endpoints,
/// f(t) ~ M (t - a)^alpha_a near a and f(t) ~ M (b - t)^alpha_b near b.
struct EdgeExponents {
  std::optional<double> at_a;
  std::optional<double> at_b;
};

/// A point t of the support together with its offsets from the ends of the
/// piece it belongs to. The offsets are carried separately because t itself
/// cannot resolve distances far below ulp(b) near an edge.
struct SupportPoint {
  double t = 0.0;
  double a = 0.0;
  double b = 0.0;
  double from_a = 0.0;  // t - a
  double to_b = 0.0;    // b - t

  /// z - t, accurate to relative rounding for z outside (a, b).
  double offset(double z) const {
    if (z >= b) return (z - b) + to_b;
    if (z <= a) return (z - a) - from_a;
    return z - t;
  }
};

/// Absolutely continuous part of a measure: `mass` times a probability
/// density `f` on [a, b].
struct DensityPart {
  double a = 0.0;
  double b = 0.0;
  std::function<double(double)> f;
  /// Optional evaluator using the edge offsets; preferred by integration.
  std::function<double(const SupportPoint&)> f_point;
  double mass = 1.0;
  EdgeExponents edges;
};

enum class MeasureKind { atomic, density, empirical, mixture };

/// Compactly supported probability measure on [0, inf): a finite list of atoms
/// plus an optional density part. Immutable after construction.
class SpectralMeasure {
 public:
  /// Atoms with positive weights summing to one (within 1e-12).
  static SpectralMeasure atomic(std::vector<Atom> atoms);

  /// Probability density on [a, b]; normalization is checked once here
  /// (tolerance 1e-8).
  static SpectralMeasure density(double a, double b, std::function<double(double)> f,
                                 EdgeExponents edges = {});
  /// Same, with a density evaluated from the edge offsets of the point.
  static SpectralMeasure density(double a, double b, std::function<double(const SupportPoint&)> f,
                                 EdgeExponents edges = {});

  /// Equal-weight atoms at the given values (e.g. the singular values of a
  /// concrete matrix).
  static SpectralMeasure empirical(std::vector<double> values);

  /// Convex combination `weight * lhs + (1 - weight) * rhs`; at most one of the
  /// two may carry a density part.
  static SpectralMeasure mix(const SpectralMeasure& lhs, const SpectralMeasure& rhs,
                             double weight);

  MeasureKind kind() const { return kind_; }
  std::span<const Atom> atoms() const { return atoms_; }
  const std::optional<DensityPart>& density_part() const { return density_; }
  SupportBounds bounds() const { return bounds_; }

  /// Edge exponents when known (density measures from the catalog carry them).
  EdgeExponents edge_exponents() const;

 private:
  SpectralMeasure() = default;
  void finalize();
  void check_normalization();

  MeasureKind kind_ = MeasureKind::atomic;
  std::vector<Atom> atoms_;
  std::optional<DensityPart> density_;
  SupportBounds bounds_;
};

SupportBounds support_bounds(const SpectralMeasure& mu);

/// Integral of g against mu. Atoms are summed exactly; the density part is
/// integrated with adaptive Gauss-Legendre panels after the substitutions
/// t = a + s^2 (lower half) and t = b - s^2 (upper half), which smooth the
/// power-law behaviour at both edges.
double integrate(const SpectralMeasure& mu, const std::function<double(double)>& g,
                 double tol = 1e-10);
/// Same, for integrands that need accurate distances to the support edges
/// (kernels in 1/(z - t) with z close to an edge).
double integrate_points(const SpectralMeasure& mu, const std::function<double(const SupportPoint&)>& g,
                        double tol = 1e-10);

/// phi_mu(z) = int z / (z^2 - t^2) dmu(t), for z > 0 outside [a, b].
double phi(const SpectralMeasure& mu, double z, double tol = 1e-10);

/// d/dz phi_mu(z) = -int (z^2 + t^2) / (z^2 - t^2)^2 dmu(t).
double phi_prime(const SpectralMeasure& mu, double z, double tol = 1e-10);

/// c * mu + (1 - c) * delta_0.
SpectralMeasure tilde(const SpectralMeasure& mu, double c);

namespace catalog {

SpectralMeasure point_mass(double sigma);

/// Limit singular-value law of an n x m matrix with i.i.d. N(0, 1/m) entries,
/// n/m -> c in (0, 1]. Supported on [1 - sqrt(c), 1 + sqrt(c)].
SpectralMeasure marchenko_pastur(double c);

SpectralMeasure uniform(double a, double b);

/// Semicircle-shaped density on [a, b] (square-root decay at both edges).
SpectralMeasure semicircle(double a, double b);

}  // namespace catalog

}  // namespace rectspike
