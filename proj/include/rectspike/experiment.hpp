#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rectspike/prediction.hpp"
#include "rectspike/randmat.hpp"

namespace rectspike {

struct CollectFlags {
  bool values = true;
  bool projections = false;
  bool fluctuations = false;
  bool master_diagnostics = false;
};

struct ExperimentConfig {
  std::size_t n = 0;
  std::size_t m = 0;
  NoiseModel noise = GaussianRect{};
  SpikeSpec spec;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  Edge edge = Edge::largest;
  CollectFlags collect;
  EntryLaw entry_law = EntryLaw::gaussian;
  /// Worker threads; 0 uses std::thread::hardware_concurrency().
  unsigned threads = 1;
  /// Limit of the non-spike extreme values (b, or a for the smallest edge);
  /// used as their prediction in the aggregate when set.
  std::optional<double> bulk_edge;

  /// Throws InvalidSpec/DimensionError on inconsistent settings.
  void validate() const;
};

struct MasterResidual {
  double min_sv_ratio = 0.0;            // sigma_min / sigma_max of M_n at the spike
  double kernel_sum_residual = 0.0;     // |a + b + c + d - 1|
  double kernel_vector_residual = 0.0;  // ||M_n(z) [Theta V^* v; Theta U^* u]||
};

struct TrialResult {
  /// Top (or bottom, for the smallest edge) r + 2 singular values of X + P,
  /// in descending order.
  std::vector<double> extreme_values;
  /// Per distinct theta, in the order of first appearance.
  std::vector<double> proj_left_sq;
  std::vector<double> proj_right_sq;
  std::optional<double> fluct_sample;  // sqrt(n) (sigma - rho)
  std::optional<MasterResidual> master_residual;
  std::size_t weyl_checks = 0;
  std::size_t weyl_violations = 0;
};

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double variance = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

SummaryStats summarize(const std::vector<double>& samples);

struct SpikeAggregate {
  std::size_t rank_index = 0;  // 1-based index among the extreme values
  std::optional<double> theta;
  double predicted = 0.0;
  SummaryStats empirical;
};

struct ProjectionAggregate {
  double theta = 0.0;
  double predicted_left = 0.0;
  double predicted_right = 0.0;
  SummaryStats left;
  SummaryStats right;
};

struct Aggregate {
  std::vector<SpikeAggregate> values;
  std::vector<ProjectionAggregate> projections;
  std::optional<SummaryStats> fluctuation;
  std::optional<double> predicted_fluct_std;
  std::optional<MasterResidual> worst_master;  // componentwise maxima
  std::size_t weyl_checks = 0;
  std::size_t weyl_violations = 0;
  std::vector<TrialResult> trials;  // by trial index
};

/// Distinct thetas in order of first appearance.
std::vector<double> distinct_thetas(const std::vector<double>& thetas);

/// Runs cfg.trials independent trials. Trial i draws everything from
/// make_trial_rng(cfg.seed, i), noise first and perturbation second, so the
/// two perturbation models share noise and raw directions under a common
/// seed. Results are combined by index and do not depend on cfg.threads.
/// The first failing trial (lowest index) aborts the run with its exception.
Aggregate run_experiment(const ExperimentConfig& cfg, const std::vector<SpikePrediction>& predictions);

/// One trial, exposed for diagnostics and tests.
TrialResult run_trial(const ExperimentConfig& cfg, const std::vector<SpikePrediction>& predictions,
                      std::uint64_t index);

/// Per-spike CSV (12 significant digits).
void write_aggregate_csv(std::ostream& os, const Aggregate& agg);
void write_trials_csv(std::ostream& os, const Aggregate& agg);
/// Equal-width histogram of the fluctuation samples.
void write_histogram_csv(std::ostream& os, const std::vector<double>& samples, std::size_t bins);

}  // namespace rectspike
