#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rectspike/experiment.hpp"
#include "rectspike/measures.hpp"

namespace rectspike {

using json = nlohmann::ordered_json;

/// Measure literal: {"kind":"atomic","atoms":[[loc,w],...]}, {"kind":"mp","c":..},
/// {"kind":"uniform","a":..,"b":..}, {"kind":"semicircle","a":..,"b":..},
/// {"kind":"empirical","values":[...]}, {"kind":"point","sigma":..} or
/// {"kind":"haar"} (point mass at 1).
SpectralMeasure parse_measure(const json& j);

struct Tolerances {
  double value_supercritical = 0.02;
  double value_subcritical = 0.05;
  double projection = 0.03;
  double projection_subcritical = 0.05;  // upper bound on the mean
  double fluct_variance_rel = 0.15;
  double master_residual = 1e-6;
};

struct OutputOptions {
  bool trials_csv = true;
  std::size_t histogram_bins = 40;
};

/// A parsed experiment file.
struct ExperimentFile {
  json source;  // the document as read, after command-line overrides
  SpectralMeasure measure = catalog::point_mass(1.0);
  double c = 1.0;
  ExperimentConfig cfg;
  Tolerances tolerances;
  OutputOptions outputs;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
};

/// Parses and validates an experiment document. Unknown keys anywhere in the
/// schema raise ConfigError naming the key.
ExperimentFile parse_experiment(json doc, const Overrides& overrides = {});
ExperimentFile load_experiment(const std::filesystem::path& path, const Overrides& overrides = {});

struct CriterionRecord {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::optional<double> predicted;
  double tolerance = 0.0;
};

struct RunManifest {
  json config;
  std::uint64_t seed = 0;
  std::string version;
  std::optional<double> wall_clock_seconds;
  std::vector<CriterionRecord> criteria;

  bool all_passed() const;
};

json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& j);

}  // namespace rectspike
