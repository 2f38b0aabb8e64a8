#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rectspike/config.hpp"

namespace rectspike::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

struct GlobalOptions {
  Overrides overrides;
  std::optional<std::filesystem::path> out;
  bool include_wall_clock = true;
};

/// Measure given on the command line: a catalog name (mp, haar, point,
/// uniform, semicircle) with its parameters, or a JSON literal.
struct MeasureArgs {
  std::string measure = "mp";
  std::optional<double> c;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> sigma;
};

struct TransformArgs {
  MeasureArgs measure;
  std::string fn;
  std::vector<double> z;
  std::vector<double> w;
  std::vector<double> theta;
  std::string format = "csv";
};

struct PredictArgs {
  MeasureArgs measure;
  std::vector<double> thetas;
  std::string model = "orthonormalized";
  std::string field = "real";
  std::string edge = "largest";
  std::string format = "csv";
};

/// Resolves the measure and the aspect ratio. For mp the --c value is both
/// the measure parameter and the aspect ratio; otherwise c defaults to 1.
std::pair<SpectralMeasure, double> resolve_measure(const MeasureArgs& args);

/// Names accepted by cmd_transform's --fn.
const std::vector<std::string>& transform_names();

int cmd_transform(const TransformArgs& args, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out,
                 std::ostream& err);
int cmd_verify(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out,
               std::ostream& err);
int cmd_examples(const std::string& format, std::ostream& out, std::ostream& err);

/// Evaluates the acceptance checks of a finished experiment against its
/// predictions (value, projection, fluctuation, master-matrix and Weyl rows).
std::vector<CriterionRecord> evaluate_criteria(const ExperimentFile& f,
                                               const std::vector<SpikePrediction>& predictions,
                                               const Aggregate& agg);

/// Predictions for the spikes of an experiment file.
std::vector<SpikePrediction> predictions_for(const ExperimentFile& f);

}  // namespace rectspike::cli
