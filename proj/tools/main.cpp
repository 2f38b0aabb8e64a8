#include <iostream>

#include "CLI11.hpp"
#include "rectspike/commands.hpp"

namespace {

void add_measure_options(CLI::App* app, rectspike::cli::MeasureArgs& m) {
  app->add_option("--measure", m.measure, "mp, haar, point, uniform, semicircle, or a JSON literal")
      ->capture_default_str();
  app->add_option("--c", m.c, "Aspect ratio (and the mp parameter)");
  app->add_option("--a", m.a, "Lower support edge (uniform, semicircle)");
  app->add_option("--b", m.b, "Upper support edge (uniform, semicircle)");
  app->add_option("--sigma", m.sigma, "Atom location (point)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rectspike::cli;

  CLI::App app{"Spiked rectangular random matrices: predictions and Monte Carlo checks"};
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  app.set_version_flag("--version", RECTSPIKE_VERSION);

  GlobalOptions global;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  unsigned threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  auto* trials_opt = app.add_option("--trials", trials, "Override the config trial count")->check(CLI::PositiveNumber);
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  std::string out_dir;
  auto* out_opt = app.add_option("--out", out_dir, "Output directory for simulate");
  bool no_clock = false;
  app.add_flag("--no-wall-clock", no_clock, "Omit wall-clock time from the manifest");

  TransformArgs targs;
  auto* transform = app.add_subcommand("transform", "Evaluate a transform of a measure");
  add_measure_options(transform, targs.measure);
  transform->add_option("--fn", targs.fn, "Transform name")->required()->check(CLI::IsMember(transform_names()));
  transform->add_option("--z", targs.z, "Evaluation points");
  transform->add_option("--w", targs.w, "Arguments of dinv");
  transform->add_option("--theta", targs.theta, "Arguments of phi-inv-small");
  transform->add_option("--format", targs.format, "csv or json")->capture_default_str();

  PredictArgs pargs;
  auto* predict = app.add_subcommand("predict", "Asymptotic predictions for a spike list");
  add_measure_options(predict, pargs.measure);
  predict->add_option("--theta", pargs.thetas, "Spike strengths, descending")->required();
  predict->add_option("--model", pargs.model, "iid or orthonormalized")->capture_default_str();
  predict->add_option("--field", pargs.field, "real or complex")->capture_default_str();
  predict->add_option("--edge", pargs.edge, "largest or smallest")->capture_default_str();
  predict->add_option("--format", pargs.format, "csv or json")->capture_default_str();

  std::string config;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a JSON config");
  simulate->add_option("config", config, "Experiment config file")->required();
  auto* verify = app.add_subcommand("verify", "Run the invariant suite on a JSON config");
  verify->add_option("config", config, "Experiment config file")->required();

  std::string eformat = "csv";
  auto* examples = app.add_subcommand("examples", "Closed-form vs numerical example tables");
  examples->add_option("--format", eformat, "csv or json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*seed_opt) global.overrides.seed = seed;
  if (*trials_opt) global.overrides.trials = trials;
  if (*threads_opt) global.overrides.threads = threads;
  if (*out_opt) global.out = out_dir;
  global.include_wall_clock = !no_clock;

  if (*transform) return cmd_transform(targs, std::cout, std::cerr);
  if (*predict) return cmd_predict(pargs, std::cout, std::cerr);
  if (*simulate) return cmd_simulate(config, global, std::cout, std::cerr);
  if (*verify) return cmd_verify(config, global, std::cout, std::cerr);
  if (*examples) return cmd_examples(eformat, std::cout, std::cerr);
  return kExitUsage;
}
