#include "rectspike/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "rectspike/error.hpp"
#include "rectspike/quadrature.hpp"

namespace rectspike {
namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kNormalizationTol = 1e-8;

void check_location(double x) {
  if (!std::isfinite(x) || x < 0.0) {
    std::ostringstream os;
    os << "measure location " << x << " is not a finite nonnegative real";
    throw DomainError(os.str());
  }
}

double density_at(const DensityPart& d, const SupportPoint& p) {
  return d.f_point ? d.f_point(p) : d.f(p.t);
}

// Integral of `mass * f * g` over [a, b] using square-root substitutions at
// both ends.
double integrate_density(const DensityPart& d, const std::function<double(const SupportPoint&)>& g,
                         double tol) {
  const double width = d.b - d.a;
  const double mid = 0.5 * (d.a + d.b);
  quadrature::Options opts;
  opts.abs_tol = 0.5 * tol / std::max(d.mass, 1e-300);
  const auto lower = [&](double s) {
    const double u = s * s;
    const SupportPoint p{d.a + u, d.a, d.b, u, width - u};
    return 2.0 * s * density_at(d, p) * g(p);
  };
  const auto upper = [&](double s) {
    const double u = s * s;
    const SupportPoint p{d.b - u, d.a, d.b, width - u, u};
    return 2.0 * s * density_at(d, p) * g(p);
  };
  const double lo = quadrature::adaptive_gauss_legendre(lower, 0.0, std::sqrt(mid - d.a), opts);
  const double hi = quadrature::adaptive_gauss_legendre(upper, 0.0, std::sqrt(d.b - mid), opts);
  return d.mass * (lo + hi);
}

SupportPoint atom_point(double x) { return {x, x, x, 0.0, 0.0}; }

void check_outside_support(const SpectralMeasure& mu, double z, const char* what) {
  const SupportBounds sb = mu.bounds();
  if (!(z > 0.0) || !std::isfinite(z) || (z >= sb.a && z <= sb.b)) {
    std::ostringstream os;
    os << what << ": z = " << z << " is not in (0, " << sb.a << ") or (" << sb.b << ", inf)";
    throw DomainError(os.str());
  }
}

}  // namespace

SpectralMeasure SpectralMeasure::atomic(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DomainError("atomic measure needs at least one atom");
  double total = 0.0;
  for (const Atom& at : atoms) {
    check_location(at.location);
    if (!(at.weight > 0.0) || !std::isfinite(at.weight)) {
      throw DomainError("atomic measure weights must be positive");
    }
    total += at.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    std::ostringstream os;
    os << "atomic measure weights sum to " << total << ", expected 1";
    throw DomainError(os.str());
  }
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::atomic;
  mu.atoms_ = std::move(atoms);
  mu.finalize();
  return mu;
}

SpectralMeasure SpectralMeasure::density(double a, double b, std::function<double(double)> f,
                                         EdgeExponents edges) {
  check_location(a);
  check_location(b);
  if (!(a < b)) throw DomainError("density support needs a < b");
  if (!f) throw DomainError("density evaluator is empty");
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::density;
  mu.density_ = DensityPart{a, b, std::move(f), {}, 1.0, edges};
  mu.check_normalization();
  return mu;
}

SpectralMeasure SpectralMeasure::density(double a, double b,
                                         std::function<double(const SupportPoint&)> f,
                                         EdgeExponents edges) {
  check_location(a);
  check_location(b);
  if (!(a < b)) throw DomainError("density support needs a < b");
  if (!f) throw DomainError("density evaluator is empty");
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::density;
  auto plain = [f, a, b](double t) { return f(SupportPoint{t, a, b, t - a, b - t}); };
  mu.density_ = DensityPart{a, b, plain, std::move(f), 1.0, edges};
  mu.check_normalization();
  return mu;
}

void SpectralMeasure::check_normalization() {
  const double total = integrate_density(*density_, [](const SupportPoint&) { return 1.0; }, 1e-11);
  if (std::abs(total - 1.0) > kNormalizationTol) {
    std::ostringstream os;
    os << "density integrates to " << total << ", expected 1";
    throw DomainError(os.str());
  }
  finalize();
}

SpectralMeasure SpectralMeasure::empirical(std::vector<double> values) {
  if (values.empty()) throw DomainError("empirical measure needs at least one value");
  const double w = 1.0 / static_cast<double>(values.size());
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::empirical;
  mu.atoms_.reserve(values.size());
  for (double v : values) {
    check_location(v);
    mu.atoms_.push_back({v, w});
  }
  mu.finalize();
  return mu;
}

SpectralMeasure SpectralMeasure::mix(const SpectralMeasure& lhs, const SpectralMeasure& rhs,
                                     double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw DomainError("mixture weight must be in [0, 1]");
  if (weight == 1.0) return lhs;
  if (weight == 0.0) return rhs;
  if (lhs.density_ && rhs.density_) {
    throw DomainError("mixture of two density parts is not representable");
  }
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::mixture;
  for (const Atom& at : lhs.atoms_) mu.atoms_.push_back({at.location, weight * at.weight});
  for (const Atom& at : rhs.atoms_) mu.atoms_.push_back({at.location, (1.0 - weight) * at.weight});
  if (lhs.density_) {
    mu.density_ = *lhs.density_;
    mu.density_->mass *= weight;
  } else if (rhs.density_) {
    mu.density_ = *rhs.density_;
    mu.density_->mass *= 1.0 - weight;
  }
  if (!mu.density_) mu.kind_ = MeasureKind::atomic;
  mu.finalize();
  return mu;
}

void SpectralMeasure::finalize() {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Atom& at : atoms_) {
    lo = std::min(lo, at.location);
    hi = std::max(hi, at.location);
  }
  if (density_) {
    lo = std::min(lo, density_->a);
    hi = std::max(hi, density_->b);
  }
  bounds_ = {lo, hi};
}

EdgeExponents SpectralMeasure::edge_exponents() const {
  if (!density_) return {};
  EdgeExponents out;
  const bool atom_at_a =
      std::any_of(atoms_.begin(), atoms_.end(), [&](const Atom& at) { return at.location <= density_->a; });
  const bool atom_at_b =
      std::any_of(atoms_.begin(), atoms_.end(), [&](const Atom& at) { return at.location >= density_->b; });
  if (!atom_at_a) out.at_a = density_->edges.at_a;
  if (!atom_at_b) out.at_b = density_->edges.at_b;
  return out;
}

SupportBounds support_bounds(const SpectralMeasure& mu) { return mu.bounds(); }

double integrate(const SpectralMeasure& mu, const std::function<double(double)>& g, double tol) {
  return integrate_points(mu, [&g](const SupportPoint& p) { return g(p.t); }, tol);
}

double integrate_points(const SpectralMeasure& mu, const std::function<double(const SupportPoint&)>& g,
                        double tol) {
  if (!(tol > 0.0)) throw DomainError("integration tolerance must be positive");
  double sum = 0.0;
  for (const Atom& at : mu.atoms()) sum += at.weight * g(atom_point(at.location));
  if (mu.density_part()) sum += integrate_density(*mu.density_part(), g, tol);
  return sum;
}

double phi(const SpectralMeasure& mu, double z, double tol) {
  check_outside_support(mu, z, "phi");
  return integrate_points(mu, [z](const SupportPoint& p) { return z / (p.offset(z) * (z + p.t)); }, tol);
}

double phi_prime(const SpectralMeasure& mu, double z, double tol) {
  check_outside_support(mu, z, "phi_prime");
  return integrate_points(
      mu,
      [z](const SupportPoint& p) {
        const double d = p.offset(z) * (z + p.t);
        return -(z * z + p.t * p.t) / (d * d);
      },
      tol);
}

SpectralMeasure tilde(const SpectralMeasure& mu, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("tilde: c must lie in [0, 1]");
  if (c == 1.0) return mu;
  return SpectralMeasure::mix(mu, catalog::point_mass(0.0), c);
}

namespace catalog {

SpectralMeasure point_mass(double sigma) { return SpectralMeasure::atomic({{sigma, 1.0}}); }

SpectralMeasure marchenko_pastur(double c) {
  if (!(c > 0.0 && c <= 1.0)) throw DomainError("marchenko_pastur: c must lie in (0, 1]");
  const double a = 1.0 - std::sqrt(c);
  const double b = 1.0 + std::sqrt(c);
  // 4c - (x^2 - 1 - c)^2 = (b - x)(b + x)(x - a)(x + a), evaluated in factored
  // form so both edges keep full relative accuracy.
  auto f = [a, b, c](const SupportPoint& p) {
    const double x = p.t;
    const double q = p.to_b * (b + x) * p.from_a * (x + a);
    if (q <= 0.0 || x <= 0.0) return 0.0;
    return std::sqrt(q) / (std::numbers::pi * c * x);
  };
  // At c = 1 the lower edge sits at 0 where the density is 2/pi.
  EdgeExponents edges{c == 1.0 ? 0.0 : 0.5, 0.5};
  return SpectralMeasure::density(a, b, std::function<double(const SupportPoint&)>(f), edges);
}

SpectralMeasure uniform(double a, double b) {
  const double h = 1.0 / (b - a);
  return SpectralMeasure::density(a, b, std::function<double(double)>([h](double) { return h; }), {0.0, 0.0});
}

SpectralMeasure semicircle(double a, double b) {
  const double r = 0.5 * (b - a);
  const double scale = 2.0 / (std::numbers::pi * r * r);
  auto f = [scale](const SupportPoint& p) {
    const double q = p.from_a * p.to_b;
    return q > 0.0 ? scale * std::sqrt(q) : 0.0;
  };
  return SpectralMeasure::density(a, b, std::function<double(const SupportPoint&)>(f), {0.5, 0.5});
}

}  // namespace catalog
}  // namespace rectspike
