#pragma once

// Strict JSON experiment configuration. Every object is checked against a
// fixed key list; unknown keys, wrong types and out-of-range values raise
// ConfigError (exit code 2 in the CLI). The resolved form, with all defaults
// filled in, is what the run manifest records and what a re-run consumes.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardmc/estimators.hpp"
#include "hardmc/kernels.hpp"
#include "hardmc/targets.hpp"

namespace hardmc::cli {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TargetConfig {
  std::string kind = "hq";  // hq | hqc | resonant | cosine | gaussian_iso
  std::int64_t d = 2;
  double kappa = 10.0;
  std::optional<double> h;      // cosine
  std::optional<double> eta;    // resonant (or cosine via h = eta^2 / 2)
  std::optional<int> K;         // resonant
  double lambda_scale = 1.0;    // resonant
};

struct WitnessConfig {
  std::string set = "full_space";
  std::int64_t index = 0;   // slab coordinate (0-based)
  double half_width = 1.0;  // slab
};

struct StartConfig {
  std::string kind = "stationary";  // stationary | point | witness
  std::vector<double> point;
  WitnessConfig witness;
};

struct ExperimentConfig {
  std::optional<TargetConfig> target;
  std::optional<KernelSpec> kernel;
  std::vector<KernelSpec> grid;
  bool has_grid = false;
  StartConfig start;
  std::optional<WitnessConfig> witness;
  std::uint64_t T = 0;
  std::uint64_t trials = 1;
  std::uint64_t samples = 10000;
  std::uint64_t gap_samples = 0;
  std::uint64_t thin = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string method = "auto";  // measure: auto | direct | factorized
  int k_max = kMaxLeapfrogSteps;
  std::uint64_t fuzz_cases = 1000;
  std::string output = "-";
};

namespace detail {

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

inline double get_real(const json& obj, const std::string& where, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline double get_positive(const json& obj, const std::string& where, const char* key) {
  const double v = get_real(obj, where, key);
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(where + "." + key + ": must be a positive finite number");
  }
  return v;
}

inline std::uint64_t get_count(const json& obj, const std::string& where, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0)) {
    throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::string get_string(const json& obj, const std::string& where, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline void require(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing required key \"" + key + "\"");
}

inline KernelSpec parse_kernel(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  require(obj, where, "kind");
  const std::string kind = get_string(obj, where, "kind");
  if (kind == "mala") {
    check_keys(obj, where, {"kind", "h"});
    require(obj, where, "h");
    return KernelSpec::mala(get_positive(obj, where, "h"));
  }
  if (kind == "hmc") {
    check_keys(obj, where, {"kind", "eta", "K"});
    require(obj, where, "eta");
    require(obj, where, "K");
    const auto K = get_count(obj, where, "K");
    if (K < 1 || K > static_cast<std::uint64_t>(kMaxLeapfrogSteps)) {
      throw ConfigError(where + ".K: must be in [1, " + std::to_string(kMaxLeapfrogSteps) + "]");
    }
    return KernelSpec::hmc(get_positive(obj, where, "eta"), static_cast<int>(K));
  }
  throw ConfigError(where + ".kind: expected \"mala\" or \"hmc\", got \"" + kind + "\"");
}

inline TargetConfig parse_target(const json& obj) {
  const std::string where = "target";
  check_keys(obj, where, {"kind", "d", "kappa", "h", "eta", "K", "lambda_scale"});
  require(obj, where, "kind");
  require(obj, where, "d");
  TargetConfig t;
  t.kind = get_string(obj, where, "kind");
  const std::set<std::string> kinds{"hq", "hqc", "resonant", "cosine", "gaussian_iso"};
  if (!kinds.count(t.kind)) throw ConfigError("target.kind: unknown kind \"" + t.kind + "\"");
  const auto d = get_count(obj, where, "d");
  if (d < 1) throw ConfigError("target.d: must be >= 1");
  t.d = static_cast<std::int64_t>(d);
  if (t.kind != "gaussian_iso") {
    require(obj, where, "kappa");
    t.kappa = get_positive(obj, where, "kappa");
  } else if (obj.contains("kappa")) {
    t.kappa = get_positive(obj, where, "kappa");
  }
  if (obj.contains("h")) t.h = get_positive(obj, where, "h");
  if (obj.contains("eta")) t.eta = get_positive(obj, where, "eta");
  if (obj.contains("K")) t.K = static_cast<int>(get_count(obj, where, "K"));
  if (obj.contains("lambda_scale")) t.lambda_scale = get_positive(obj, where, "lambda_scale");
  if (t.kind == "cosine" && !t.h && !t.eta) {
    throw ConfigError("target: cosine needs \"h\" (or \"eta\", with h = eta^2/2)");
  }
  if (t.kind == "resonant" && (!t.eta || !t.K)) {
    throw ConfigError("target: resonant needs \"eta\" and \"K\"");
  }
  return t;
}

inline WitnessConfig parse_witness(const json& obj, const std::string& where) {
  check_keys(obj, where, {"set", "index", "half_width"});
  require(obj, where, "set");
  WitnessConfig w;
  w.set = get_string(obj, where, "set");
  const std::set<std::string> sets{"gaussian_bad", "omega_hard", "small_ball", "omega_large",
                                   "hmc_bad",      "slab",       "full_space"};
  if (!sets.count(w.set)) throw ConfigError(where + ".set: unknown set \"" + w.set + "\"");
  if (obj.contains("index")) w.index = static_cast<std::int64_t>(get_count(obj, where, "index"));
  if (obj.contains("half_width")) w.half_width = get_positive(obj, where, "half_width");
  return w;
}

inline StartConfig parse_start(const json& obj) {
  const std::string where = "start";
  check_keys(obj, where, {"kind", "point", "set", "index", "half_width"});
  require(obj, where, "kind");
  StartConfig s;
  s.kind = get_string(obj, where, "kind");
  if (s.kind == "stationary") {
    check_keys(obj, where, {"kind"});
  } else if (s.kind == "point") {
    check_keys(obj, where, {"kind", "point"});
    require(obj, where, "point");
    const auto& p = obj.at("point");
    if (!p.is_array()) throw ConfigError("start.point: expected an array of numbers");
    for (const auto& v : p) {
      if (!v.is_number()) throw ConfigError("start.point: expected an array of numbers");
      s.point.push_back(v.get<double>());
    }
  } else if (s.kind == "witness") {
    json w = obj;
    w.erase("kind");
    s.witness = parse_witness(w, where);
  } else {
    throw ConfigError("start.kind: expected \"stationary\", \"point\" or \"witness\"");
  }
  return s;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& doc) {
  using namespace detail;
  check_keys(doc, "config",
             {"target", "kernel", "grid", "start", "witness", "T", "trials", "samples",
              "gap_samples", "thin", "seed", "threads", "method", "k_max", "fuzz_cases",
              "output"});
  ExperimentConfig c;
  try {
    if (doc.contains("target")) c.target = parse_target(doc.at("target"));
    if (doc.contains("kernel")) c.kernel = parse_kernel(doc.at("kernel"), "kernel");
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      if (!g.is_array()) throw ConfigError("grid: expected an array of kernel specs");
      c.has_grid = true;
      for (std::size_t i = 0; i < g.size(); ++i) {
        c.grid.push_back(parse_kernel(g[i], "grid[" + std::to_string(i) + "]"));
      }
    }
    if (doc.contains("start")) c.start = parse_start(doc.at("start"));
    if (doc.contains("witness")) c.witness = parse_witness(doc.at("witness"), "witness");
    if (doc.contains("T")) c.T = get_count(doc, "config", "T");
    if (doc.contains("trials")) c.trials = get_count(doc, "config", "trials");
    if (doc.contains("samples")) c.samples = get_count(doc, "config", "samples");
    if (doc.contains("gap_samples")) c.gap_samples = get_count(doc, "config", "gap_samples");
    if (doc.contains("thin")) c.thin = get_count(doc, "config", "thin");
    if (doc.contains("seed")) c.seed = get_count(doc, "config", "seed");
    if (doc.contains("threads")) c.threads = static_cast<unsigned>(get_count(doc, "config", "threads"));
    if (doc.contains("method")) c.method = get_string(doc, "config", "method");
    if (doc.contains("k_max")) c.k_max = static_cast<int>(get_count(doc, "config", "k_max"));
    if (doc.contains("fuzz_cases")) c.fuzz_cases = get_count(doc, "config", "fuzz_cases");
    if (doc.contains("output")) c.output = get_string(doc, "config", "output");
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  if (c.thin < 1) throw ConfigError("thin: must be >= 1");
  if (c.threads < 1) throw ConfigError("threads: must be >= 1");
  if (c.k_max < 1 || c.k_max > kMaxLeapfrogSteps) {
    throw ConfigError("k_max: must be in [1, " + std::to_string(kMaxLeapfrogSteps) + "]");
  }
  if (c.method != "auto" && c.method != "direct" && c.method != "factorized") {
    throw ConfigError("method: expected \"auto\", \"direct\" or \"factorized\"");
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Resolved form

inline json to_json(const KernelSpec& k) {
  json j;
  if (k.kind == KernelKind::mala) {
    j["kind"] = "mala";
    j["h"] = k.h;
  } else {
    j["kind"] = "hmc";
    j["eta"] = k.eta;
    j["K"] = k.K;
  }
  return j;
}

inline json to_json(const WitnessConfig& w) {
  json j;
  j["set"] = w.set;
  if (w.set == "slab") {
    j["index"] = w.index;
    j["half_width"] = w.half_width;
  }
  return j;
}

inline json to_json(const ExperimentConfig& c) {
  json j;
  if (c.target) {
    const auto& t = *c.target;
    json tj;
    tj["kind"] = t.kind;
    tj["d"] = t.d;
    tj["kappa"] = t.kappa;
    if (t.h) tj["h"] = *t.h;
    if (t.eta) tj["eta"] = *t.eta;
    if (t.K) tj["K"] = *t.K;
    if (t.kind == "resonant") tj["lambda_scale"] = t.lambda_scale;
    j["target"] = tj;
  }
  if (c.kernel) j["kernel"] = to_json(*c.kernel);
  if (c.has_grid) {
    j["grid"] = json::array();
    for (const auto& k : c.grid) j["grid"].push_back(to_json(k));
  }
  json s;
  s["kind"] = c.start.kind;
  if (c.start.kind == "point") s["point"] = c.start.point;
  if (c.start.kind == "witness") {
    s.update(to_json(c.start.witness));
  }
  j["start"] = s;
  if (c.witness) j["witness"] = to_json(*c.witness);
  j["T"] = c.T;
  j["trials"] = c.trials;
  j["samples"] = c.samples;
  j["gap_samples"] = c.gap_samples;
  j["thin"] = c.thin;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["method"] = c.method;
  j["k_max"] = c.k_max;
  j["fuzz_cases"] = c.fuzz_cases;
  j["output"] = c.output;
  return j;
}

// ---------------------------------------------------------------------------
// Building library objects

struct BuiltTarget {
  Target target;
  std::optional<ResonantTarget> resonant;
};

inline BuiltTarget build_target(const TargetConfig& t) {
  try {
    if (t.kind == "hq") return {make_hard_quadratic(t.d, t.kappa), std::nullopt};
    if (t.kind == "hqc") return {make_hqc(t.d, t.kappa), std::nullopt};
    if (t.kind == "gaussian_iso") return {make_gaussian_iso(t.d), std::nullopt};
    if (t.kind == "cosine") {
      const double h = t.h ? *t.h : 0.5 * *t.eta * *t.eta;
      return {make_cosine_hard(t.d, t.kappa, h), std::nullopt};
    }
    auto r = make_resonant_gaussian(t.d, t.kappa, *t.eta, *t.K, t.lambda_scale);
    Target copy = r.target;
    return {std::move(copy), std::move(r)};
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
}

/// Cosine period parameter of the target, if any.
inline std::optional<double> target_h(const Target& t) {
  for (const auto& b : t.blocks()) {
    if (b.spec.kind == CoordinateKind::cosine) return b.spec.h;
  }
  return std::nullopt;
}

inline WitnessSet build_witness(const WitnessConfig& w, const TargetConfig& tc,
                                const Target& target) {
  const Index d = target.dimension();
  try {
    if (w.set == "full_space") return full_space_set(d);
    if (w.set == "small_ball") return small_ball_set(d);
    if (w.set == "omega_large") return omega_large_set(d);
    if (w.set == "gaussian_bad") return gaussian_bad_set(d, tc.kappa);
    if (w.set == "hmc_bad") return hmc_bad_set(d, tc.kappa);
    if (w.set == "slab") return slab_set(d, w.index, w.half_width);
    const auto h = target_h(target);
    if (!h) throw ConfigError("witness omega_hard needs a cosine target");
    return omega_hard_set(d, tc.kappa, *h);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("witness: ") + e.what());
  }
}

}  // namespace hardmc::cli
