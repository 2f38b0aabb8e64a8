#pragma once

// Independent reference implementations used only by the tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, descending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

/// Singular values of A (n <= m) from the Jacobi eigenvalues of A A^T.
inline std::vector<double> singular_values_by_jacobi(const Eigen::MatrixXd& a) {
  std::vector<double> ev = jacobi_eigenvalues(a * a.transpose());
  for (double& x : ev) x = std::sqrt(std::max(0.0, x));
  return ev;
}

/// phi of the uniform density on [1, 2], z outside [1, 2].
inline double phi_uniform_1_2(double z) {
  return 0.5 * (std::log((z + 2.0) / std::abs(z - 2.0)) - std::log((z + 1.0) / std::abs(z - 1.0)));
}

/// Stieltjes transform int f(t) / (zeta - t) dt of the semicircle density on
/// [a, b], real zeta outside [a, b].
inline double semicircle_stieltjes(double a, double b, double zeta) {
  const double m = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const double w = zeta - m;
  const double root = std::sqrt(w * w - r * r);
  return 2.0 / (r * r) * (w - (w > 0 ? root : -root));
}

inline double phi_semicircle(double a, double b, double z) {
  return 0.5 * (semicircle_stieltjes(a, b, z) - semicircle_stieltjes(a, b, -z));
}

/// phi of the c = 1 Marchenko-Pastur (quarter-circle) law: D = phi^2 and the
/// closed-form D gives phi(z) = sqrt(D(z)).
inline double phi_mp1(double z) {
  const double s = z * z - 2.0;
  return std::sqrt((s - std::sqrt(s * s - 4.0)) / 2.0);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
