#include "rectspike/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rectspike/error.hpp"

namespace rectspike {
namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

std::size_t get_count(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ConfigError(where + "." + key + ": expected a positive integer");
  }
  return v.get<std::size_t>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError("\"" + key + "\": expected true or false");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

PerturbationModel parse_model(const std::string& s) {
  if (s == "iid") return PerturbationModel::iid;
  if (s == "orthonormalized") return PerturbationModel::orthonormalized;
  throw ConfigError("spikes.model: unknown value \"" + s + "\"");
}

Field parse_field(const std::string& s) {
  if (s == "real") return Field::real;
  if (s == "complex") return Field::complex;
  throw ConfigError("spikes.field: unknown value \"" + s + "\"");
}

Edge parse_edge(const std::string& s) {
  if (s == "largest") return Edge::largest;
  if (s == "smallest_square" || s == "smallest") return Edge::smallest_square;
  throw ConfigError("edge: unknown value \"" + s + "\"");
}

EntryLaw parse_law(const std::string& s) {
  if (s == "gaussian") return EntryLaw::gaussian;
  if (s == "rademacher") return EntryLaw::rademacher;
  throw ConfigError("entry_law: unknown value \"" + s + "\"");
}

NoiseModel parse_noise(const json& j, const SpectralMeasure& limit) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "gaussian") return GaussianRect{};
    if (s == "haar") return HaarSquare{};
    throw ConfigError("noise: unknown value \"" + s + "\"");
  }
  check_keys(j, {"kind", "path"}, "noise");
  if (!j.contains("kind") || j.at("kind") != "dump" || !j.contains("path")) {
    throw ConfigError("noise: object form must be {\"kind\":\"dump\",\"path\":...}");
  }
  return replay_factory(get_string(j, "path", "noise"), limit);
}

}  // namespace

SpectralMeasure parse_measure(const json& j) {
  if (j.is_string()) return parse_measure(json{{"kind", j}});
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("measure: expected an object with a \"kind\" string");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "atomic") {
    check_keys(j, {"kind", "atoms"}, "measure");
    if (!j.contains("atoms") || !j.at("atoms").is_array()) throw ConfigError("measure.atoms: expected an array");
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw ConfigError("measure.atoms: each atom is [location, weight]");
      }
      atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    return SpectralMeasure::atomic(std::move(atoms));
  }
  if (kind == "mp") {
    check_keys(j, {"kind", "c"}, "measure");
    return catalog::marchenko_pastur(get_number(j, "c", "measure"));
  }
  if (kind == "uniform" || kind == "semicircle") {
    check_keys(j, {"kind", "a", "b"}, "measure");
    const double a = get_number(j, "a", "measure");
    const double b = get_number(j, "b", "measure");
    return kind == "uniform" ? catalog::uniform(a, b) : catalog::semicircle(a, b);
  }
  if (kind == "empirical") {
    check_keys(j, {"kind", "values"}, "measure");
    if (!j.contains("values") || !j.at("values").is_array()) throw ConfigError("measure.values: expected an array");
    std::vector<double> values;
    for (const auto& v : j.at("values")) {
      if (!v.is_number()) throw ConfigError("measure.values: expected numbers");
      values.push_back(v.get<double>());
    }
    return SpectralMeasure::empirical(std::move(values));
  }
  if (kind == "point") {
    check_keys(j, {"kind", "sigma"}, "measure");
    return catalog::point_mass(j.contains("sigma") ? get_number(j, "sigma", "measure") : 1.0);
  }
  if (kind == "haar") {
    check_keys(j, {"kind"}, "measure");
    return catalog::point_mass(1.0);
  }
  throw ConfigError("measure.kind: unknown value \"" + kind + "\"");
}

ExperimentFile parse_experiment(json doc, const Overrides& overrides) {
  check_keys(doc,
             {"measure", "c", "spikes", "n", "m", "trials", "seed", "edge", "collect", "noise", "threads",
              "entry_law", "outputs", "tolerances"},
             "config");
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.trials) doc["trials"] = *overrides.trials;
  if (overrides.threads) doc["threads"] = *overrides.threads;

  ExperimentFile f;
  if (!doc.contains("measure")) throw ConfigError("config: missing key \"measure\"");
  f.measure = parse_measure(doc.at("measure"));

  ExperimentConfig& cfg = f.cfg;
  cfg.n = get_count(doc, "n", "config");
  cfg.m = get_count(doc, "m", "config");
  cfg.trials = get_count(doc, "trials", "config");

  if (doc.contains("c")) {
    f.c = get_number(doc, "c", "config");
  } else if (doc.at("measure").is_object() && doc.at("measure").value("kind", "") == "mp") {
    f.c = doc.at("measure").at("c").get<double>();
  } else {
    f.c = static_cast<double>(cfg.n) / static_cast<double>(cfg.m);
  }
  if (!(f.c >= 0.0 && f.c <= 1.0)) throw ConfigError("c: must lie in [0, 1]");

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !(doc.at("seed").is_number_integer() && doc.at("seed").get<long long>() >= 0)) {
      throw ConfigError("seed: expected a non-negative integer");
    }
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }

  if (!doc.contains("spikes")) throw ConfigError("config: missing key \"spikes\"");
  const json& sp = doc.at("spikes");
  check_keys(sp, {"thetas", "model", "field"}, "spikes");
  if (!sp.contains("thetas") || !sp.at("thetas").is_array()) throw ConfigError("spikes.thetas: expected an array");
  for (const auto& t : sp.at("thetas")) {
    if (!t.is_number()) throw ConfigError("spikes.thetas: expected numbers");
    cfg.spec.thetas.push_back(t.get<double>());
  }
  if (sp.contains("model")) cfg.spec.model = parse_model(get_string(sp, "model", "spikes"));
  if (sp.contains("field")) cfg.spec.field = parse_field(get_string(sp, "field", "spikes"));

  if (doc.contains("edge")) cfg.edge = parse_edge(get_string(doc, "edge", "config"));
  if (doc.contains("entry_law")) cfg.entry_law = parse_law(get_string(doc, "entry_law", "config"));
  if (doc.contains("threads")) {
    if (!doc.at("threads").is_number_integer() || doc.at("threads").get<long long>() < 0) {
      throw ConfigError("threads: expected a non-negative integer");
    }
    cfg.threads = doc.at("threads").get<unsigned>();
  }

  if (doc.contains("collect")) {
    const json& c = doc.at("collect");
    check_keys(c, {"values", "projections", "fluctuations", "master_diagnostics"}, "collect");
    cfg.collect.values = get_bool(c, "values", true);
    cfg.collect.projections = get_bool(c, "projections", false);
    cfg.collect.fluctuations = get_bool(c, "fluctuations", false);
    cfg.collect.master_diagnostics = get_bool(c, "master_diagnostics", false);
  }

  if (doc.contains("noise")) {
    cfg.noise = parse_noise(doc.at("noise"), f.measure);
  } else if (doc.at("measure").is_object() && doc.at("measure").value("kind", "") == "haar") {
    cfg.noise = HaarSquare{};
  } else if (doc.at("measure") == "haar") {
    cfg.noise = HaarSquare{};
  }

  if (doc.contains("outputs")) {
    const json& o = doc.at("outputs");
    check_keys(o, {"trials_csv", "histogram_bins"}, "outputs");
    f.outputs.trials_csv = get_bool(o, "trials_csv", true);
    if (o.contains("histogram_bins")) f.outputs.histogram_bins = get_count(o, "histogram_bins", "outputs");
  }

  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    check_keys(t,
               {"value_supercritical", "value_subcritical", "projection", "projection_subcritical",
                "fluct_variance_rel", "master_residual"},
               "tolerances");
    Tolerances& tol = f.tolerances;
    const auto opt = [&t](const char* key, double& dst) {
      if (t.contains(key)) dst = get_number(t, key, "tolerances");
    };
    opt("value_supercritical", tol.value_supercritical);
    opt("value_subcritical", tol.value_subcritical);
    opt("projection", tol.projection);
    opt("projection_subcritical", tol.projection_subcritical);
    opt("fluct_variance_rel", tol.fluct_variance_rel);
    opt("master_residual", tol.master_residual);
  }

  const SupportBounds sb = f.measure.bounds();
  cfg.bulk_edge = cfg.edge == Edge::largest ? sb.b : sb.a;

  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  f.source = std::move(doc);
  return f;
}

ExperimentFile load_experiment(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment(std::move(doc), overrides);
}

bool RunManifest::all_passed() const {
  for (const auto& c : criteria)
    if (!c.passed) return false;
  return true;
}

json to_json(const RunManifest& m) {
  json j;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = m.config;
  if (m.wall_clock_seconds) j["wall_clock_seconds"] = *m.wall_clock_seconds;
  json crit = json::array();
  for (const auto& c : m.criteria) {
    json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["measured"] = c.measured;
    e["predicted"] = c.predicted ? json(*c.predicted) : json(nullptr);
    e["tolerance"] = c.tolerance;
    crit.push_back(std::move(e));
  }
  j["criteria"] = std::move(crit);
  j["all_passed"] = m.all_passed();
  return j;
}

RunManifest manifest_from_json(const json& j) {
  check_keys(j, {"version", "seed", "config", "wall_clock_seconds", "criteria", "all_passed"}, "manifest");
  RunManifest m;
  m.version = j.at("version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = j.at("config");
  if (j.contains("wall_clock_seconds")) m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  for (const auto& e : j.at("criteria")) {
    CriterionRecord c;
    c.name = e.at("name").get<std::string>();
    c.passed = e.at("passed").get<bool>();
    c.measured = e.at("measured").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : e.at("measured").get<double>();
    if (!e.at("predicted").is_null()) c.predicted = e.at("predicted").get<double>();
    c.tolerance = e.at("tolerance").get<double>();
    m.criteria.push_back(std::move(c));
  }
  return m;
}

}  // namespace rectspike
