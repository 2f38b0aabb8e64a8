#include "rectspike/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "rectspike/closed_forms.hpp"
#include "rectspike/error.hpp"

namespace rectspike::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

PerturbationModel model_of(const std::string& s) {
  if (s == "iid") return PerturbationModel::iid;
  if (s == "orthonormalized") return PerturbationModel::orthonormalized;
  throw ConfigError("unknown model \"" + s + "\"");
}

Field field_of(const std::string& s) {
  if (s == "real") return Field::real;
  if (s == "complex") return Field::complex;
  throw ConfigError("unknown field \"" + s + "\"");
}

Edge edge_of(const std::string& s) {
  if (s == "largest") return Edge::largest;
  if (s == "smallest" || s == "smallest_square") return Edge::smallest_square;
  throw ConfigError("unknown edge \"" + s + "\"");
}

void check_format(const std::string& f) {
  if (f != "csv" && f != "json") throw ConfigError("unknown format \"" + f + "\"");
}

std::vector<SpikePrediction> predict(const TransformContext& ctx, const SpikeSpec& spec, Edge edge) {
  return edge == Edge::largest ? predict_largest(ctx, spec) : predict_smallest_square(ctx, spec);
}

struct VerifyLine {
  std::string name;
  double measured;
  double threshold;
  bool passed;
};

void print_lines(std::ostream& out, const std::vector<VerifyLine>& lines) {
  for (const auto& l : lines) {
    out << (l.passed ? "PASS " : "FAIL ") << l.name << " measured=" << fmt(l.measured)
        << " threshold=" << fmt(l.threshold) << '\n';
  }
}

VerifyLine below(std::string name, double measured, double threshold) {
  return {std::move(name), measured, threshold, std::isfinite(measured) && measured < threshold};
}

// Checks that do not involve simulation.
std::vector<VerifyLine> transform_suite(const TransformContext& ctx, const SpikeSpec& spec) {
  std::vector<VerifyLine> lines;
  const double c = ctx.c();
  const SupportBounds sb = ctx.bounds();

  double u_err = 0.0;
  for (double cc : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
    for (int k = 0; k <= 200; ++k) {
      const double z = 0.05 * k;
      const double u = u_function(cc, z);
      u_err = std::max(u_err, std::abs(cc * u * u + (cc + 1.0) * u - z));
    }
  }
  lines.push_back(below("u_identity", u_err, 1e-12));

  const double width = sb.b - sb.a + 1.0;
  std::size_t mono = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 40; ++k) {
    const double z = sb.b + width * 0.1 * k;
    const double p = phi(ctx.mu(), z, ctx.quad_tol());
    if (!(p < prev)) ++mono;
    prev = p;
  }
  lines.push_back(below("phi_decreasing_violations", static_cast<double>(mono), 0.5));

  const double zbig = 1e6 * std::max(1.0, sb.b);
  lines.push_back(below("z_phi_to_one", std::abs(zbig * phi(ctx.mu(), zbig, ctx.quad_tol()) - 1.0), 1e-6));

  double fd_err = 0.0;
  for (double z : {sb.b + 0.25 * width, sb.b + width, sb.b + 3.0 * width}) {
    const double h = 1e-5;
    const double fd = (phi(ctx.mu(), z + h, ctx.quad_tol()) - phi(ctx.mu(), z - h, ctx.quad_tol())) / (2.0 * h);
    const double an = phi_prime(ctx.mu(), z, ctx.quad_tol());
    fd_err = std::max(fd_err, std::abs(fd - an) / std::max(1.0, std::abs(an)));
  }
  lines.push_back(below("phi_prime_finite_difference", fd_err, 1e-6));

  double rt = 0.0;
  const double dbp = ctx.d_b_plus();
  const double wmax = std::isfinite(dbp) ? 0.98 * dbp : 10.0;
  for (int k = 1; k <= 25; ++k) {
    const double w = wmax * k / 25.0;
    const double z = d_inverse(ctx, w);
    rt = std::max(rt, std::abs(d_transform(ctx, z) - w) / w);
  }
  lines.push_back(below("d_inverse_round_trip", rt, 1e-9));

  if (ctx.mu().kind() == MeasureKind::density && ctx.mu().density_part()->a == 1.0 - std::sqrt(c) &&
      ctx.mu().density_part()->b == 1.0 + std::sqrt(c)) {
    double cf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double w = wmax * k / 50.0;
      cf = std::max(cf, std::abs(d_inverse(ctx, w) - closed_form::gaussian::d_inverse(c, w)));
    }
    lines.push_back(below("d_inverse_vs_gaussian_closed_form", cf, 1e-8));
  }

  double cons = 0.0;
  bool any = false;
  for (double theta : distinct_thetas(spec.thetas)) {
    if (!(theta > threshold_large(ctx))) continue;
    const double rho = d_inverse(ctx, 1.0 / (theta * theta));
    const ProjectionLimits p = predict_projections_largest(ctx, theta);
    const double ph = phi(ctx.mu(), rho, ctx.quad_tol());
    cons = std::max(cons, std::abs(p.left_sq - theta * theta * ph * ph * p.right_sq));
    any = true;
  }
  if (any) lines.push_back(below("projection_consistency", cons, 1e-9));
  return lines;
}

template <typename Scalar>
double limit_check(const ExperimentFile& f, const TransformContext& ctx, double rho) {
  Rng rng = make_trial_rng(f.cfg.seed, 0);
  const Matrix<Scalar> x = sample_noise<Scalar>(f.cfg.noise, f.cfg.n, f.cfg.m, rng);
  const Perturbation<Scalar> pert = sample_perturbation<Scalar>(f.cfg.spec, f.cfg.n, f.cfg.m, rng, f.cfg.entry_law);
  const MasterMatrix mn = master_matrix<Scalar>(x, pert, rho);
  const Eigen::MatrixXcd lim = limit_master_matrix(ctx, f.cfg.spec.thetas, rho);
  return (mn.entries - lim).cwiseAbs().maxCoeff();
}

void remove_quietly(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) {
    std::error_code ec;
    fs::remove(p, ec);
  }
}

}  // namespace

std::pair<SpectralMeasure, double> resolve_measure(const MeasureArgs& args) {
  const std::string& s = args.measure;
  if (!s.empty() && s.front() == '{') {
    json j;
    try {
      j = json::parse(s);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("--measure: ") + e.what());
    }
    SpectralMeasure mu = parse_measure(j);
    double c = args.c.value_or(j.value("kind", "") == "mp" ? j.at("c").get<double>() : 1.0);
    return {std::move(mu), c};
  }
  const auto need = [&s](const std::optional<double>& v, const char* flag) {
    if (!v) throw ConfigError("--measure " + s + " requires " + flag);
    return *v;
  };
  if (s == "mp") {
    const double c = args.c.value_or(1.0);
    return {catalog::marchenko_pastur(c), c};
  }
  if (s == "haar") return {catalog::point_mass(1.0), args.c.value_or(1.0)};
  if (s == "point") return {catalog::point_mass(args.sigma.value_or(1.0)), args.c.value_or(1.0)};
  if (s == "uniform") return {catalog::uniform(need(args.a, "--a"), need(args.b, "--b")), args.c.value_or(1.0)};
  if (s == "semicircle") {
    return {catalog::semicircle(need(args.a, "--a"), need(args.b, "--b")), args.c.value_or(1.0)};
  }
  throw ConfigError("unknown measure \"" + s + "\"");
}

const std::vector<std::string>& transform_names() {
  static const std::vector<std::string> names = {
      "phi", "phi-prime", "d", "d-prime", "dinv", "c", "u", "threshold-large", "threshold-small",
      "d-b-plus", "phi-a-minus", "phi-inv-small"};
  return names;
}

int cmd_transform(const TransformArgs& args, std::ostream& out, std::ostream& err) {
  std::string current;
  try {
    check_format(args.format);
    const auto [mu, c] = resolve_measure(args.measure);
    const TransformContext ctx(mu, c);
    struct Row {
      std::optional<double> input;
      double value;
    };
    std::vector<Row> rows;
    const auto over = [&](const std::vector<double>& xs, const char* name, auto&& fn) {
      if (xs.empty()) throw ConfigError("--fn " + args.fn + " requires --" + name);
      for (double x : xs) {
        current = std::string(name) + " = " + fmt(x);
        rows.push_back({x, fn(x)});
      }
    };
    const std::string& fn = args.fn;
    if (fn == "phi") {
      over(args.z, "z", [&](double z) { return phi(ctx.mu(), z, ctx.quad_tol()); });
    } else if (fn == "phi-prime") {
      over(args.z, "z", [&](double z) { return phi_prime(ctx.mu(), z, ctx.quad_tol()); });
    } else if (fn == "d") {
      over(args.z, "z", [&](double z) { return d_transform(ctx, z); });
    } else if (fn == "d-prime") {
      over(args.z, "z", [&](double z) { return d_prime(ctx, z); });
    } else if (fn == "dinv") {
      over(args.w, "w", [&](double w) { return d_inverse(ctx, w); });
    } else if (fn == "c") {
      over(args.z, "z", [&](double z) { return c_transform(ctx, z); });
    } else if (fn == "u") {
      over(args.z, "z", [&](double z) { return u_function(c, z); });
    } else if (fn == "phi-inv-small") {
      over(args.theta, "theta", [&](double t) { return phi_inverse_small(ctx, t); });
    } else if (fn == "threshold-large") {
      rows.push_back({std::nullopt, threshold_large(ctx)});
    } else if (fn == "threshold-small") {
      rows.push_back({std::nullopt, threshold_small(ctx)});
    } else if (fn == "d-b-plus") {
      rows.push_back({std::nullopt, ctx.d_b_plus()});
    } else if (fn == "phi-a-minus") {
      rows.push_back({std::nullopt, phi_at_a_minus_abs(ctx)});
    } else {
      throw ConfigError("unknown --fn \"" + fn + "\"");
    }
    if (args.format == "csv") {
      out << "fn,input,value\n";
      for (const auto& r : rows) out << fn << ',' << fmt(r.input) << ',' << fmt(r.value) << '\n';
    } else {
      json arr = json::array();
      for (const auto& r : rows) {
        arr.push_back({{"fn", fn}, {"input", r.input ? num(*r.input) : json(nullptr)}, {"value", num(r.value)}});
      }
      out << arr.dump(2) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << args.fn;
    if (!current.empty()) err << " at " << current;
    err << ": " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err) {
  try {
    check_format(args.format);
    const auto [mu, c] = resolve_measure(args.measure);
    const TransformContext ctx(mu, c);
    SpikeSpec spec;
    spec.thetas = args.thetas;
    spec.model = model_of(args.model);
    spec.field = field_of(args.field);
    const std::vector<SpikePrediction> preds = predict(ctx, spec, edge_of(args.edge));
    if (args.format == "csv") {
      out << "theta,supercritical,limit,left_proj_sq,right_proj_sq,fluct_std,delocalization_hypothesis\n";
      for (const auto& p : preds) {
        out << fmt(p.theta) << ',' << (p.supercritical ? "true" : "false") << ',' << fmt(p.limit) << ','
            << fmt(p.left_proj_sq) << ',' << fmt(p.right_proj_sq) << ',' << fmt(p.fluct_std) << ','
            << to_string(p.delocalization_hypothesis_met) << '\n';
      }
    } else {
      json arr = json::array();
      for (const auto& p : preds) {
        arr.push_back({{"theta", p.theta},
                       {"supercritical", p.supercritical},
                       {"limit", num(p.limit)},
                       {"left_proj_sq", p.left_proj_sq},
                       {"right_proj_sq", p.right_proj_sq},
                       {"fluct_std", p.fluct_std ? json(*p.fluct_std) : json(nullptr)},
                       {"delocalization_hypothesis", to_string(p.delocalization_hypothesis_met)}});
      }
      out << arr.dump(2) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

std::vector<SpikePrediction> predictions_for(const ExperimentFile& f) {
  const TransformContext ctx(f.measure, f.c);
  return predict(ctx, f.cfg.spec, f.cfg.edge);
}

std::vector<CriterionRecord> evaluate_criteria(const ExperimentFile& f,
                                               const std::vector<SpikePrediction>& predictions,
                                               const Aggregate& agg) {
  const Tolerances& tol = f.tolerances;
  std::vector<CriterionRecord> out;
  const auto within = [&out](std::string name, double measured, double predicted, double t) {
    out.push_back({std::move(name), std::abs(measured - predicted) <= t, measured, predicted, t});
  };
  const auto at_most = [&out](std::string name, double measured, double bound) {
    out.push_back({std::move(name), measured <= bound, measured, std::nullopt, bound});
  };

  const std::size_t r = f.cfg.spec.rank();
  for (std::size_t k = 0; k < r && k < agg.values.size(); ++k) {
    const auto& v = agg.values[k];
    const bool sup = predictions[k].supercritical;
    within("value_" + std::to_string(k + 1) + "_mean", v.empirical.mean, v.predicted,
           sup ? tol.value_supercritical : tol.value_subcritical);
  }

  if (f.cfg.collect.projections) {
    std::optional<TransformContext> ctx;
    for (std::size_t j = 0; j < agg.projections.size(); ++j) {
      const auto& p = agg.projections[j];
      const auto it = std::find(f.cfg.spec.thetas.begin(), f.cfg.spec.thetas.end(), p.theta);
      const SpikePrediction& pred = predictions[static_cast<std::size_t>(it - f.cfg.spec.thetas.begin())];
      const std::string tag = "theta=" + fmt(p.theta);
      if (pred.supercritical) {
        within("proj_left_sq_mean_" + tag, p.left.mean, p.predicted_left, tol.projection);
        within("proj_right_sq_mean_" + tag, p.right.mean, p.predicted_right, tol.projection);
        if (f.cfg.edge == Edge::largest) {
          if (!ctx) ctx.emplace(f.measure, f.c);
          const double ph = phi(ctx->mu(), pred.limit, ctx->quad_tol());
          const double rhs = p.theta * p.theta * ph * ph * p.right.mean;
          within("proj_consistency_" + tag, p.left.mean - rhs, 0.0, 0.05);
        }
      } else {
        at_most("proj_left_sq_mean_" + tag, p.left.mean, tol.projection_subcritical);
        at_most("proj_right_sq_mean_" + tag, p.right.mean, tol.projection_subcritical);
      }
    }
  }

  if (agg.fluctuation && agg.predicted_fluct_std) {
    const double s2 = *agg.predicted_fluct_std * *agg.predicted_fluct_std;
    const double rel = (agg.fluctuation->variance - s2) / s2;
    out.push_back({"fluct_variance_rel_error", std::abs(rel) <= tol.fluct_variance_rel, agg.fluctuation->variance, s2,
                   tol.fluct_variance_rel});
  }

  if (agg.worst_master) {
    at_most("master_min_sv_ratio", agg.worst_master->min_sv_ratio, tol.master_residual);
    at_most("kernel_sum_residual", agg.worst_master->kernel_sum_residual, tol.master_residual);
    at_most("kernel_vector_residual", agg.worst_master->kernel_vector_residual, tol.master_residual);
  }

  at_most("weyl_violations", static_cast<double>(agg.weyl_violations), 0.0);
  return out;
}

int cmd_simulate(const fs::path& config, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  ExperimentFile f;
  std::vector<SpikePrediction> preds;
  try {
    f = load_experiment(config, g.overrides);
    preds = predictions_for(f);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const fs::path dir = g.out.value_or(fs::path("."));
  std::vector<fs::path> written;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const Aggregate agg = run_experiment(f.cfg, preds);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunManifest manifest;
    manifest.config = f.source;
    manifest.seed = f.cfg.seed;
    manifest.version = RECTSPIKE_VERSION;
    if (g.include_wall_clock) manifest.wall_clock_seconds = elapsed;
    manifest.criteria = evaluate_criteria(f, preds, agg);

    fs::create_directories(dir);
    const auto open = [&](const char* name) {
      written.push_back(dir / name);
      std::ofstream os(written.back(), std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + written.back().string());
      return os;
    };
    {
      auto os = open("aggregate.csv");
      write_aggregate_csv(os, agg);
    }
    if (f.outputs.trials_csv) {
      auto os = open("trials.csv");
      write_trials_csv(os, agg);
    }
    if (agg.fluctuation) {
      std::vector<double> samples;
      for (const auto& t : agg.trials)
        if (t.fluct_sample) samples.push_back(*t.fluct_sample);
      auto os = open("histogram.csv");
      write_histogram_csv(os, samples, f.outputs.histogram_bins);
    }
    {
      auto os = open("manifest.json");
      os << to_json(manifest).dump(2) << '\n';
      if (!os) throw std::runtime_error("cannot write manifest.json");
    }

    for (const auto& c : manifest.criteria) {
      out << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << fmt(c.measured);
      if (c.predicted) out << " predicted=" << fmt(*c.predicted);
      out << " tolerance=" << fmt(c.tolerance) << '\n';
    }
    return manifest.all_passed() ? kExitOk : kExitVerifyFailed;
  } catch (const std::exception& e) {
    remove_quietly(written);
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_verify(const fs::path& config, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  ExperimentFile f;
  std::vector<SpikePrediction> preds;
  std::vector<VerifyLine> lines;
  try {
    f = load_experiment(config, g.overrides);
    preds = predictions_for(f);
    const TransformContext ctx(f.measure, f.c);
    lines = transform_suite(ctx, f.cfg.spec);
    if (f.cfg.edge == Edge::largest && preds.front().supercritical) {
      const double rho = preds.front().limit;
      const double d = f.cfg.spec.field == Field::real ? limit_check<double>(f, ctx, rho)
                                                      : limit_check<Complex>(f, ctx, rho);
      lines.push_back(below("master_limit_max_abs", d, 0.15));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    ExperimentConfig cfg = f.cfg;
    cfg.collect = CollectFlags{};
    cfg.collect.master_diagnostics = true;
    const Aggregate agg = run_experiment(cfg, preds);
    const double tol = f.tolerances.master_residual;
    if (agg.worst_master) {
      lines.push_back(below("master_min_sv_ratio", agg.worst_master->min_sv_ratio, tol));
      lines.push_back(below("kernel_sum_residual", agg.worst_master->kernel_sum_residual, tol));
      lines.push_back(below("kernel_vector_residual", agg.worst_master->kernel_vector_residual, tol));
    }
    lines.push_back(below("weyl_violations", static_cast<double>(agg.weyl_violations), 0.5));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  print_lines(out, lines);
  for (const auto& l : lines)
    if (!l.passed) return kExitVerifyFailed;
  return kExitOk;
}

int cmd_examples(const std::string& format, std::ostream& out, std::ostream& err) {
  try {
    check_format(format);
    json gauss = json::array();
    for (double c : {0.0, 0.1, 0.25, 0.5, 1.0}) {
      const SpectralMeasure mu = c == 0.0 ? catalog::point_mass(1.0) : catalog::marchenko_pastur(c);
      const TransformContext ctx(mu, c);
      for (double theta : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        SpikeSpec spec;
        spec.thetas = {theta};
        const SpikePrediction p = predict_largest(ctx, spec).front();
        gauss.push_back({{"c", c},
                         {"theta", theta},
                         {"supercritical", p.supercritical},
                         {"limit_closed", closed_form::gaussian::spike_limit(c, theta)},
                         {"limit_numeric", p.limit},
                         {"left_closed", closed_form::gaussian::left_proj_sq(c, theta)},
                         {"left_numeric", p.left_proj_sq},
                         {"right_closed", closed_form::gaussian::right_proj_sq(c, theta)},
                         {"right_numeric", p.right_proj_sq}});
      }
    }
    json haar = json::array();
    {
      const TransformContext ctx(catalog::point_mass(1.0), 1.0);
      for (double theta : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        SpikeSpec spec;
        spec.thetas = {theta};
        const SpikePrediction big = predict_largest(ctx, spec).front();
        const SpikePrediction small = predict_smallest_square(ctx, spec).front();
        haar.push_back({{"theta", theta},
                        {"largest_closed", closed_form::haar::largest_limit(theta)},
                        {"largest_numeric", big.limit},
                        {"smallest_closed", closed_form::haar::smallest_limit(theta)},
                        {"smallest_numeric", small.limit},
                        {"smallest_proj_sq", small.left_proj_sq}});
      }
    }
    if (format == "json") {
      out << json{{"gaussian", gauss}, {"haar", haar}}.dump(2) << '\n';
      return kExitOk;
    }
    const auto table = [&out](const char* title, const json& rows) {
      out << "# " << title << '\n';
      bool header = true;
      for (const auto& row : rows) {
        if (header) {
          bool first = true;
          for (const auto& [k, _] : row.items()) {
            out << (first ? "" : ",") << k;
            first = false;
          }
          out << '\n';
          header = false;
        }
        bool first = true;
        for (const auto& [_, v] : row.items()) {
          out << (first ? "" : ",");
          if (v.is_boolean()) {
            out << (v.get<bool>() ? "true" : "false");
          } else {
            out << fmt(v.get<double>());
          }
          first = false;
        }
        out << '\n';
      }
    };
    table("gaussian", gauss);
    out << '\n';
    table("haar", haar);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace rectspike::cli
