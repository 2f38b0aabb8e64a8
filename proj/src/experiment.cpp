#include "rectspike/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

#include "rectspike/error.hpp"

namespace rectspike {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Index (0-based, descending order) of the k-th extreme singular value.
std::size_t empirical_index(Edge edge, std::size_t n, std::size_t k) {
  return edge == Edge::largest ? k : n - 1 - k;
}

// Weyl: sigma_{i+r}(X) <= sigma_i(X + P) <= sigma_{i-r}(X), 1-based, with
// sigma_j = +inf for j < 1 and 0 for j > n.
void weyl_check(const Eigen::VectorXd& noise, const Eigen::VectorXd& perturbed, std::size_t r,
                TrialResult& out) {
  const auto n = static_cast<std::ptrdiff_t>(perturbed.size());
  const auto rr = static_cast<std::ptrdiff_t>(r);
  const double tol = 1e-10 * std::max(1.0, std::max(noise(0), perturbed(0)));
  const auto sigma = [&](std::ptrdiff_t j) {
    if (j < 1) return std::numeric_limits<double>::infinity();
    if (j > n) return 0.0;
    return noise(j - 1);
  };
  std::vector<std::ptrdiff_t> idx;
  for (std::ptrdiff_t i = 1; i <= std::min(n, rr + 2); ++i) idx.push_back(i);
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(1, n - rr - 1); i <= n; ++i) idx.push_back(i);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  for (std::ptrdiff_t i : idx) {
    const double s = perturbed(i - 1);
    ++out.weyl_checks;
    if (s < sigma(i + rr) - tol || s > sigma(i - rr) + tol) ++out.weyl_violations;
  }
}

template <typename Scalar>
TrialResult run_trial_t(const ExperimentConfig& cfg, const std::vector<SpikePrediction>& preds,
                        std::uint64_t index) {
  Rng rng = make_trial_rng(cfg.seed, index);
  const Matrix<Scalar> x = sample_noise<Scalar>(cfg.noise, cfg.n, cfg.m, rng);
  const Perturbation<Scalar> pert = sample_perturbation<Scalar>(cfg.spec, cfg.n, cfg.m, rng, cfg.entry_law);
  const Matrix<Scalar> xt = x + pert.P;

  const bool vectors = cfg.collect.projections || cfg.collect.master_diagnostics;
  const SvdResult<Scalar> svd = svd_dense<Scalar>(xt, vectors);
  const std::size_t n = cfg.n;
  const std::size_t r = cfg.spec.rank();

  TrialResult out;
  const std::size_t count = std::min(n, r + 2);
  if (cfg.edge == Edge::largest) {
    for (std::size_t k = 0; k < count; ++k) out.extreme_values.push_back(svd.values(static_cast<Eigen::Index>(k)));
  } else {
    for (std::size_t k = n - count; k < n; ++k) out.extreme_values.push_back(svd.values(static_cast<Eigen::Index>(k)));
  }

  std::optional<MasterMatrixEvaluator<Scalar>> evaluator;
  if (cfg.collect.master_diagnostics) evaluator.emplace(x, pert);
  const Eigen::VectorXd noise_sv = evaluator ? evaluator->noise_singular_values() : singular_values<Scalar>(x);
  weyl_check(noise_sv, svd.values, r, out);

  const auto left = [&](std::size_t i) -> Vector<Scalar> { return svd.left.col(static_cast<Eigen::Index>(i)); };
  const auto right = [&](std::size_t i) -> Vector<Scalar> { return svd.right.col(static_cast<Eigen::Index>(i)); };

  if (cfg.collect.projections) {
    for (double theta : distinct_thetas(cfg.spec.thetas)) {
      const auto first = std::find(cfg.spec.thetas.begin(), cfg.spec.thetas.end(), theta);
      const auto k = static_cast<std::size_t>(first - cfg.spec.thetas.begin());
      const std::size_t i = empirical_index(cfg.edge, n, k);
      const ProjectionNorms p = projection_norms<Scalar>(left(i), right(i), pert, theta);
      out.proj_left_sq.push_back(p.left_sq);
      out.proj_right_sq.push_back(p.right_sq);
    }
  }

  if (cfg.collect.fluctuations && !preds.empty()) {
    const std::size_t i = empirical_index(cfg.edge, n, 0);
    out.fluct_sample = std::sqrt(static_cast<double>(n)) * (svd.values(static_cast<Eigen::Index>(i)) - preds.front().limit);
  }

  if (evaluator) {
    MasterResidual worst;
    bool any = false;
    for (std::size_t k = 0; k < preds.size() && k < r; ++k) {
      if (!preds[k].supercritical) continue;
      const std::size_t i = empirical_index(cfg.edge, n, k);
      const double z = svd.values(static_cast<Eigen::Index>(i));
      const MasterMatrix mm = evaluator->evaluate(z);
      const KernelIdentity ki = evaluator->kernel_identity(z, left(i), right(i));
      worst.min_sv_ratio = std::max(worst.min_sv_ratio, mm.relative_residual());
      worst.kernel_sum_residual = std::max(worst.kernel_sum_residual, ki.sum_residual);
      worst.kernel_vector_residual = std::max(worst.kernel_vector_residual, ki.kernel_residual);
      any = true;
    }
    if (any) out.master_residual = worst;
  }
  return out;
}

void put(std::ostream& os, double x) {
  if (std::isnan(x)) return;
  os << x;
}

void put(std::ostream& os, const std::optional<double>& x) {
  if (x) put(os, *x);
}

}  // namespace

void ExperimentConfig::validate() const {
  spec.validate();
  if (n == 0 || m == 0) throw DimensionError("n and m must be positive");
  if (n > m) throw DimensionError("n must not exceed m");
  if (trials == 0) throw InvalidSpec("trials must be positive");
  if (spec.rank() > n) throw InvalidSpec("spike rank exceeds min(n, m)");
  if (edge == Edge::smallest_square && n != m) {
    throw DimensionError("edge smallest_square requires n == m");
  }
  if (std::holds_alternative<HaarSquare>(noise) && n != m) {
    throw DimensionError("Haar noise requires n == m");
  }
  if (collect.fluctuations && spec.rank() != 1) {
    throw InvalidSpec("fluctuations are collected for rank-one spikes only");
  }
}

SummaryStats summarize(const std::vector<double>& samples) {
  SummaryStats s;
  s.count = samples.size();
  if (samples.empty()) {
    s.mean = s.std = s.variance = s.q05 = s.q50 = s.q95 = kNaN;
    return s;
  }
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.variance = s.count > 1 ? ss / static_cast<double>(s.count - 1) : 0.0;
  s.std = std::sqrt(s.variance);
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  s.q05 = quantile(sorted, 0.05);
  s.q50 = quantile(sorted, 0.50);
  s.q95 = quantile(sorted, 0.95);
  return s;
}

std::vector<double> distinct_thetas(const std::vector<double>& thetas) {
  std::vector<double> out;
  for (double t : thetas)
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  return out;
}

TrialResult run_trial(const ExperimentConfig& cfg, const std::vector<SpikePrediction>& predictions,
                      std::uint64_t index) {
  if (cfg.spec.field == Field::real) return run_trial_t<double>(cfg, predictions, index);
  return run_trial_t<Complex>(cfg, predictions, index);
}

Aggregate run_experiment(const ExperimentConfig& cfg, const std::vector<SpikePrediction>& predictions) {
  cfg.validate();
  if (predictions.size() != cfg.spec.rank()) {
    throw InvalidSpec("one prediction per configured spike is required");
  }

  std::vector<TrialResult> results(cfg.trials);
  std::vector<std::exception_ptr> errors(cfg.trials);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.trials || failed.load()) return;
      try {
        results[i] = run_trial(cfg, predictions, i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.trials));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Aggregate agg;
  const std::size_t r = cfg.spec.rank();
  const std::size_t count = results.front().extreme_values.size();
  for (std::size_t k = 0; k < count; ++k) {
    SpikeAggregate s;
    s.rank_index = k + 1;
    std::vector<double> col;
    col.reserve(results.size());
    // Smallest-edge values are stored descending, so the k-th smallest is at
    // the back.
    const std::size_t pos = cfg.edge == Edge::largest ? k : count - 1 - k;
    for (const auto& t : results) col.push_back(t.extreme_values[pos]);
    s.empirical = summarize(col);
    if (k < r) {
      s.theta = cfg.spec.thetas[k];
      s.predicted = predictions[k].limit;
    } else {
      s.predicted = cfg.bulk_edge.value_or(kNaN);
    }
    agg.values.push_back(s);
  }

  if (cfg.collect.projections) {
    const std::vector<double> thetas = distinct_thetas(cfg.spec.thetas);
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      ProjectionAggregate p;
      p.theta = thetas[j];
      const auto it = std::find(cfg.spec.thetas.begin(), cfg.spec.thetas.end(), thetas[j]);
      const SpikePrediction& pred = predictions[static_cast<std::size_t>(it - cfg.spec.thetas.begin())];
      p.predicted_left = pred.left_proj_sq;
      p.predicted_right = pred.right_proj_sq;
      std::vector<double> l, rr;
      for (const auto& t : results) {
        l.push_back(t.proj_left_sq[j]);
        rr.push_back(t.proj_right_sq[j]);
      }
      p.left = summarize(l);
      p.right = summarize(rr);
      agg.projections.push_back(p);
    }
  }

  if (cfg.collect.fluctuations) {
    std::vector<double> f;
    for (const auto& t : results)
      if (t.fluct_sample) f.push_back(*t.fluct_sample);
    agg.fluctuation = summarize(f);
    agg.predicted_fluct_std = predictions.front().fluct_std;
  }

  for (const auto& t : results) {
    agg.weyl_checks += t.weyl_checks;
    agg.weyl_violations += t.weyl_violations;
    if (t.master_residual) {
      if (!agg.worst_master) agg.worst_master = MasterResidual{};
      auto& w = *agg.worst_master;
      w.min_sv_ratio = std::max(w.min_sv_ratio, t.master_residual->min_sv_ratio);
      w.kernel_sum_residual = std::max(w.kernel_sum_residual, t.master_residual->kernel_sum_residual);
      w.kernel_vector_residual =
          std::max(w.kernel_vector_residual, t.master_residual->kernel_vector_residual);
    }
  }
  agg.trials = std::move(results);
  return agg;
}

void write_aggregate_csv(std::ostream& os, const Aggregate& agg) {
  os << std::setprecision(12);
  os << "quantity,index,theta,predicted,count,mean,std,variance,q05,q50,q95,delta\n";
  const auto row = [&os](const char* qty, std::size_t index, const std::optional<double>& theta,
                         double predicted, const SummaryStats& s, double mean_for_delta) {
    os << qty << ',' << index << ',';
    put(os, theta);
    os << ',';
    put(os, predicted);
    os << ',' << s.count << ',';
    put(os, s.mean);
    os << ',';
    put(os, s.std);
    os << ',';
    put(os, s.variance);
    os << ',';
    put(os, s.q05);
    os << ',';
    put(os, s.q50);
    os << ',';
    put(os, s.q95);
    os << ',';
    put(os, mean_for_delta - predicted);
    os << '\n';
  };
  for (const auto& v : agg.values) row("value", v.rank_index, v.theta, v.predicted, v.empirical, v.empirical.mean);
  for (std::size_t j = 0; j < agg.projections.size(); ++j) {
    const auto& p = agg.projections[j];
    row("proj_left_sq", j + 1, p.theta, p.predicted_left, p.left, p.left.mean);
    row("proj_right_sq", j + 1, p.theta, p.predicted_right, p.right, p.right.mean);
  }
  if (agg.fluctuation) {
    // The fluctuation row compares variances.
    const double pred = agg.predicted_fluct_std ? *agg.predicted_fluct_std * *agg.predicted_fluct_std : kNaN;
    row("fluct_variance", 1, std::nullopt, pred, *agg.fluctuation, agg.fluctuation->variance);
  }
}

void write_trials_csv(std::ostream& os, const Aggregate& agg) {
  os << std::setprecision(12);
  const std::size_t nv = agg.trials.empty() ? 0 : agg.trials.front().extreme_values.size();
  const std::size_t np = agg.trials.empty() ? 0 : agg.trials.front().proj_left_sq.size();
  os << "trial";
  for (std::size_t k = 0; k < nv; ++k) os << ",value" << k + 1;
  for (std::size_t j = 0; j < np; ++j) os << ",proj_left_sq" << j + 1 << ",proj_right_sq" << j + 1;
  os << ",fluct_sample,master_min_sv_ratio,kernel_sum_residual,kernel_vector_residual,weyl_violations\n";
  for (std::size_t i = 0; i < agg.trials.size(); ++i) {
    const auto& t = agg.trials[i];
    os << i;
    for (double v : t.extreme_values) os << ',' << v;
    for (std::size_t j = 0; j < t.proj_left_sq.size(); ++j) os << ',' << t.proj_left_sq[j] << ',' << t.proj_right_sq[j];
    os << ',';
    put(os, t.fluct_sample);
    os << ',';
    if (t.master_residual) {
      os << t.master_residual->min_sv_ratio << ',' << t.master_residual->kernel_sum_residual << ','
         << t.master_residual->kernel_vector_residual;
    } else {
      os << ",,";
    }
    os << ',' << t.weyl_violations << '\n';
  }
}

void write_histogram_csv(std::ostream& os, const std::vector<double>& samples, std::size_t bins) {
  os << std::setprecision(12);
  os << "bin,lo,hi,count,density\n";
  if (samples.empty() || bins == 0) return;
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn;
  double hi = *mx;
  if (hi <= lo) hi = lo + 1.0;
  const double w = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double x : samples) {
    auto k = static_cast<std::size_t>((x - lo) / w);
    if (k >= bins) k = bins - 1;
    ++counts[k];
  }
  const double total = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < bins; ++k) {
    const double a = lo + w * static_cast<double>(k);
    os << k << ',' << a << ',' << a + w << ',' << counts[k] << ',' << static_cast<double>(counts[k]) / (total * w)
       << '\n';
  }
}

}  // namespace rectspike
