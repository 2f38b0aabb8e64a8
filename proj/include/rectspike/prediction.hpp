#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rectspike/transforms.hpp"

namespace rectspike {

enum class PerturbationModel { iid, orthonormalized };
enum class Field { real, complex };

/// beta = 1 for real matrices, 2 for complex ones.
inline int beta_of(Field f) { return f == Field::real ? 1 : 2; }

enum class Edge { largest, smallest_square };

struct SpikeSpec {
  std::vector<double> thetas;  // descending, all > 0
  PerturbationModel model = PerturbationModel::orthonormalized;
  Field field = Field::real;

  std::size_t rank() const { return thetas.size(); }
  /// Throws InvalidSpec unless thetas are nonempty, positive and descending.
  void validate() const;
};

/// Whether the extra hypothesis of the singular-vector delocalization
/// theorem (phi' = -inf at the relevant edge) is known to hold.
enum class Tristate { yes, no, unknown };

struct SpikePrediction {
  double theta = 0.0;
  bool supercritical = false;
  double limit = 0.0;  // rho, or the edge when subcritical
  double left_proj_sq = 0.0;
  double right_proj_sq = 0.0;
  std::optional<double> fluct_std;
  Tristate delocalization_hypothesis_met = Tristate::unknown;
};

struct ProjectionLimits {
  double left_sq = 0.0;
  double right_sq = 0.0;
};

std::vector<SpikePrediction> predict_largest(const TransformContext& ctx, const SpikeSpec& spec);

ProjectionLimits predict_projections_largest(const TransformContext& ctx, double theta);

/// Requires c = 1 and a > 0.
std::vector<SpikePrediction> predict_smallest_square(const TransformContext& ctx,
                                                     const SpikeSpec& spec);

ProjectionLimits predict_projections_smallest_square(const TransformContext& ctx, double theta);

/// Pieces of the Gaussian limit of sqrt(n) (sigma - rho) for a rank-one spike.
///
/// The noise part of det M_n(rho + x / sqrt(n)) has variance proportional to
/// f^2; normalizing it by 2 theta^-2 gives `s2_flat`. The root in x is set by
/// the slope D'(rho) of det M at rho, which multiplies the variance by
/// `slope_gain` = 4 / (theta^4 D'(rho)^2). For Haar noise the exact two-by-two
/// reduction and the Monte Carlo runs both follow `s2`, not `s2_flat`.
struct FluctuationTerms {
  double rho = 0.0;
  double f2 = 0.0;
  double s2_flat = 0.0;  // f^2 / (2 beta), or (f^2 - 2) / (2 beta) when orthonormalized
  double slope_gain = 0.0;
  double s2 = 0.0;       // s2_flat * slope_gain
};

/// Squared fluctuation scale f^2 of the largest singular value (r = 1).
double fluct_f2_largest(const TransformContext& ctx, double theta);
FluctuationTerms fluct_terms_largest(const TransformContext& ctx, const SpikeSpec& spec);
/// Limit standard deviation s = sqrt(s2) of sqrt(n) (sigma_1 - rho).
double fluct_std_largest(const TransformContext& ctx, const SpikeSpec& spec);

/// f^2 = 2 theta^2 int (rho^2 + t^2) / (rho^2 - t^2)^2 dmu, rho = phi^-1(1/theta).
double fluct_f2_smallest_square(const TransformContext& ctx, double theta);
/// Here D = phi^2 on (0, a), so slope_gain = 1 / (theta^2 phi'(rho)^2).
FluctuationTerms fluct_terms_smallest_square(const TransformContext& ctx, const SpikeSpec& spec);
double fluct_std_smallest_square(const TransformContext& ctx, const SpikeSpec& spec);

struct EdgeClass {
  bool threshold_positive = false;  // alpha > 0
  bool phi_prime_diverges = false;  // alpha <= 1
};

/// Density decaying like (b - t)^alpha at the edge, alpha > -1.
EdgeClass classify_edge(double alpha);

std::string to_string(PerturbationModel m);
std::string to_string(Field f);
std::string to_string(Edge e);
std::string to_string(Tristate t);

}  // namespace rectspike
