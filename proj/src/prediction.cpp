#include "rectspike/prediction.hpp"

#include <cmath>
#include <sstream>

#include "rectspike/error.hpp"

namespace rectspike {
namespace {

Tristate hypothesis_from_exponent(const std::optional<double>& alpha) {
  if (!alpha) return Tristate::unknown;
  return classify_edge(*alpha).phi_prime_diverges ? Tristate::yes : Tristate::no;
}

double variance_from_f2(double f2, const SpikeSpec& spec) {
  const double two_beta = 2.0 * beta_of(spec.field);
  if (spec.model == PerturbationModel::iid) return f2 / two_beta;
  if (f2 - 2.0 < 0.0) {
    std::ostringstream os;
    os << "orthonormalized model: f^2 - 2 = " << f2 - 2.0 << " < 0";
    throw NegativeVariance(os.str());
  }
  return (f2 - 2.0) / two_beta;
}

// Numerical thresholds carry a relative error near 1e-11; spikes that close
// to the threshold are treated as sitting on it (subcritical).
constexpr double kThresholdMargin = 1e-9;

bool above_threshold(double theta, double threshold) {
  return theta > threshold * (1.0 + kThresholdMargin);
}

void require_rank_one(const SpikeSpec& spec) {
  spec.validate();
  if (spec.rank() != 1) throw InvalidSpec("fluctuation limits are stated for rank-one spikes only");
}

}  // namespace

void SpikeSpec::validate() const {
  if (thetas.empty()) throw InvalidSpec("spike list is empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0) || !std::isfinite(thetas[i])) {
      throw InvalidSpec("spike strengths must be positive finite reals");
    }
    if (i > 0 && thetas[i] > thetas[i - 1]) throw InvalidSpec("spike strengths must be descending");
  }
}

ProjectionLimits predict_projections_largest(const TransformContext& ctx, double theta) {
  if (!above_threshold(theta, threshold_large(ctx))) {
    std::ostringstream os;
    os << "theta = " << theta << " is not above the threshold " << threshold_large(ctx);
    throw OutOfRange(os.str());
  }
  const double rho = d_inverse(ctx, 1.0 / (theta * theta));
  const double c = ctx.c();
  const double p = phi(ctx.mu(), rho, ctx.quad_tol());
  const double p_tilde = c * p + (1.0 - c) / rho;
  const double denom = theta * theta * d_prime(ctx, rho);
  return {-2.0 * p / denom, -2.0 * p_tilde / denom};
}

std::vector<SpikePrediction> predict_largest(const TransformContext& ctx, const SpikeSpec& spec) {
  spec.validate();
  const double threshold = threshold_large(ctx);
  const Tristate deloc = hypothesis_from_exponent(ctx.mu().edge_exponents().at_b);
  std::vector<SpikePrediction> out;
  out.reserve(spec.rank());
  for (double theta : spec.thetas) {
    SpikePrediction p;
    p.theta = theta;
    p.delocalization_hypothesis_met = deloc;
    p.supercritical = above_threshold(theta, threshold);
    if (p.supercritical) {
      p.limit = d_inverse(ctx, 1.0 / (theta * theta));
      const ProjectionLimits proj = predict_projections_largest(ctx, theta);
      p.left_proj_sq = proj.left_sq;
      p.right_proj_sq = proj.right_sq;
      if (spec.rank() == 1) p.fluct_std = fluct_std_largest(ctx, spec);
    } else {
      p.limit = ctx.bounds().b;
    }
    out.push_back(p);
  }
  return out;
}

ProjectionLimits predict_projections_smallest_square(const TransformContext& ctx, double theta) {
  const double rho = phi_inverse_small(ctx, theta);
  const double proj = -1.0 / phi_prime(ctx.mu(), rho, ctx.quad_tol());
  return {proj, proj};
}

std::vector<SpikePrediction> predict_smallest_square(const TransformContext& ctx,
                                                     const SpikeSpec& spec) {
  spec.validate();
  const double threshold = threshold_small(ctx);  // DomainError outside c = 1, a > 0
  const Tristate deloc = hypothesis_from_exponent(ctx.mu().edge_exponents().at_a);
  std::vector<SpikePrediction> out;
  out.reserve(spec.rank());
  for (double theta : spec.thetas) {
    SpikePrediction p;
    p.theta = theta;
    p.delocalization_hypothesis_met = deloc;
    p.supercritical = above_threshold(theta, threshold);
    if (p.supercritical) {
      p.limit = phi_inverse_small(ctx, theta);
      const ProjectionLimits proj = predict_projections_smallest_square(ctx, theta);
      p.left_proj_sq = proj.left_sq;
      p.right_proj_sq = proj.right_sq;
      if (spec.rank() == 1) p.fluct_std = fluct_std_smallest_square(ctx, spec);
    } else {
      p.limit = ctx.bounds().a;
    }
    out.push_back(p);
  }
  return out;
}

double fluct_f2_largest(const TransformContext& ctx, double theta) {
  const double rho = d_inverse(ctx, 1.0 / (theta * theta));
  const double tol = ctx.quad_tol();
  // rho^2 - t^2 through the edge offset, which stays accurate when rho is
  // close to b.
  const auto gap = [rho](const SupportPoint& p) { return p.offset(rho) * (rho + p.t); };
  const auto inv = [gap](const SupportPoint& p) { return 1.0 / gap(p); };
  const auto inv_sq = [gap](const SupportPoint& p) {
    const double d = gap(p);
    return 1.0 / (d * d);
  };
  const auto t2_inv_sq = [gap](const SupportPoint& p) {
    const double d = gap(p);
    return p.t * p.t / (d * d);
  };
  const double i1 = integrate_points(ctx.mu(), inv_sq, tol);
  const double j1 = integrate_points(ctx.mu(), inv, tol);
  const double i2 = integrate_points(ctx.mu_tilde(), inv_sq, tol);
  const double j2 = integrate_points(ctx.mu_tilde(), inv, tol);
  const double t2 = integrate_points(ctx.mu(), t2_inv_sq, tol);
  return i1 / (j1 * j1) + i2 / (j2 * j2) + 2.0 * t2 / (rho * j1 * rho * j2);
}

FluctuationTerms fluct_terms_largest(const TransformContext& ctx, const SpikeSpec& spec) {
  require_rank_one(spec);
  const double theta = spec.thetas.front();
  if (!above_threshold(theta, threshold_large(ctx))) {
    throw OutOfRange("fluctuations need a supercritical spike");
  }
  FluctuationTerms out;
  out.rho = d_inverse(ctx, 1.0 / (theta * theta));
  out.f2 = fluct_f2_largest(ctx, theta);
  out.s2_flat = variance_from_f2(out.f2, spec);
  const double t4 = theta * theta * theta * theta;
  const double dp = d_prime(ctx, out.rho);
  out.slope_gain = 4.0 / (t4 * dp * dp);
  out.s2 = out.s2_flat * out.slope_gain;
  return out;
}

double fluct_std_largest(const TransformContext& ctx, const SpikeSpec& spec) {
  return std::sqrt(fluct_terms_largest(ctx, spec).s2);
}

double fluct_f2_smallest_square(const TransformContext& ctx, double theta) {
  const double rho = phi_inverse_small(ctx, theta);
  const double r2 = rho * rho;
  const double integral = integrate(
      ctx.mu(),
      [r2](double t) {
        const double d = r2 - t * t;
        return (r2 + t * t) / (d * d);
      },
      ctx.quad_tol());
  return 2.0 * theta * theta * integral;
}

FluctuationTerms fluct_terms_smallest_square(const TransformContext& ctx, const SpikeSpec& spec) {
  require_rank_one(spec);
  const double theta = spec.thetas.front();
  FluctuationTerms out;
  out.rho = phi_inverse_small(ctx, theta);  // OutOfRange when subcritical
  out.f2 = fluct_f2_smallest_square(ctx, theta);
  out.s2_flat = variance_from_f2(out.f2, spec);
  const double dp = phi_prime(ctx.mu(), out.rho, ctx.quad_tol());
  out.slope_gain = 1.0 / (theta * theta * dp * dp);
  out.s2 = out.s2_flat * out.slope_gain;
  return out;
}

double fluct_std_smallest_square(const TransformContext& ctx, const SpikeSpec& spec) {
  return std::sqrt(fluct_terms_smallest_square(ctx, spec).s2);
}

EdgeClass classify_edge(double alpha) {
  if (!(alpha > -1.0)) {
    std::ostringstream os;
    os << "classify_edge: alpha = " << alpha << " must exceed -1";
    throw DomainError(os.str());
  }
  return {alpha > 0.0, alpha <= 1.0};
}

std::string to_string(PerturbationModel m) {
  return m == PerturbationModel::iid ? "iid" : "orthonormalized";
}

std::string to_string(Field f) { return f == Field::real ? "real" : "complex"; }

std::string to_string(Edge e) { return e == Edge::largest ? "largest" : "smallest_square"; }

std::string to_string(Tristate t) {
  switch (t) {
    case Tristate::yes:
      return "yes";
    case Tristate::no:
      return "no";
    case Tristate::unknown:
      break;
  }
  return "unknown";
}

}  // namespace rectspike
