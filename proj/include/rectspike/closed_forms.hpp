#pragma once

#include <cmath>

// Closed-form spike predictions for the two solvable noise families. They are
// independent of the quadrature/root-finding route and serve as reference
// columns in the example tables.
namespace rectspike::closed_form {

/// Gaussian n x m noise, entries N(0, 1/m), n/m -> c.
namespace gaussian {

inline double d_inverse(double c, double w) { return std::sqrt((w + 1.0) * (c * w + 1.0) / w); }

inline double d_transform(double c, double z) {
  const double s = z * z - (c + 1.0);
  return (s - std::sqrt(s * s - 4.0 * c)) / (2.0 * c);
}

inline double threshold(double c) { return std::pow(c, 0.25); }

inline double spike_limit(double c, double theta) {
  if (!(theta > threshold(c))) return 1.0 + std::sqrt(c);
  const double t2 = theta * theta;
  return std::sqrt((1.0 + t2) * (c + t2) / t2);
}

inline double left_proj_sq(double c, double theta) {
  if (!(theta > threshold(c))) return 0.0;
  const double t2 = theta * theta;
  return 1.0 - c * (1.0 + t2) / (t2 * (t2 + c));
}

inline double right_proj_sq(double c, double theta) {
  if (!(theta > threshold(c))) return 0.0;
  const double t2 = theta * theta;
  return 1.0 - (c + t2) / (t2 * (t2 + 1.0));
}

}  // namespace gaussian

/// Square Haar orthogonal/unitary noise (all singular values equal to one).
namespace haar {

inline double d_transform(double z) {
  const double d = z * z - 1.0;
  return z * z / (d * d);
}

inline double largest_limit(double theta) { return (theta + std::sqrt(theta * theta + 4.0)) / 2.0; }

inline double smallest_limit(double theta) {
  return (-theta + std::sqrt(theta * theta + 4.0)) / 2.0;
}

}  // namespace haar

}  // namespace rectspike::closed_form
