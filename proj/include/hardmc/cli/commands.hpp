#pragma once

// Subcommands of the experiment runner. Each command turns a validated
// ExperimentConfig into a CSV table plus a JSON summary; `execute` writes the
// table and the run manifest. Exit codes: 0 pass, 1 assertion or runtime
// failure, 2 configuration error.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hardmc/analysis.hpp"
#include "hardmc/cli/config.hpp"
#include "hardmc/estimators.hpp"
#include "hardmc/identities.hpp"
#include "hardmc/kernels.hpp"
#include "hardmc/parallel.hpp"
#include "hardmc/targets.hpp"

namespace hardmc::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitFailure = 1, kExitConfig = 2 };

// ---------------------------------------------------------------------------
// CSV

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : columns_(header.size()) {
    add_row(header);
  }

  class Row {
   public:
    explicit Row(Csv& csv) : csv_(csv) {}
    Row& operator<<(double v) { return push(format_real(v)); }
    Row& operator<<(std::uint64_t v) { return push(std::to_string(v)); }
    Row& operator<<(std::int64_t v) { return push(std::to_string(v)); }
    Row& operator<<(int v) { return push(std::to_string(v)); }
    Row& operator<<(bool v) { return push(v ? "true" : "false"); }
    Row& operator<<(const std::string& v) { return push(v); }
    Row& operator<<(const char* v) { return push(v); }
    ~Row() { csv_.add_row(cells_); }

   private:
    Row& push(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    Csv& csv_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  const std::string& text() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row has the wrong width");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
    ++rows_;
  }
  std::size_t columns_;
  std::string text_;
  std::size_t rows_ = 0;
};

/// 64-bit FNV-1a digest, hex encoded.
inline std::string fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

struct CommandResult {
  int exit_code = kExitPass;
  std::string csv;
  json summary = json::object();
  std::string message;
};

// ---------------------------------------------------------------------------
// Shared helpers

inline const TargetConfig& need_target(const ExperimentConfig& c) {
  if (!c.target) throw ConfigError("config: this command needs a \"target\"");
  return *c.target;
}

inline std::vector<KernelSpec> kernel_list(const ExperimentConfig& c) {
  if (c.has_grid) {
    if (c.grid.empty()) throw ConfigError("grid: must contain at least one kernel");
    return c.grid;
  }
  if (c.kernel) return {*c.kernel};
  throw ConfigError("config: this command needs a \"kernel\" or a \"grid\"");
}

inline void kernel_columns(Csv::Row& row, const KernelSpec& k) {
  if (k.kind == KernelKind::mala) {
    row << "mala" << k.h << std::numeric_limits<double>::quiet_NaN() << 1;
  } else {
    row << "hmc" << k.equivalent_h() << k.eta << k.K;
  }
}

/// Starting point of trial `trial` for a chain on `target`.
class StartSampler {
 public:
  StartSampler(const ExperimentConfig& c, const Target& target) : target_(target), kind_(c.start.kind) {
    if (kind_ == "point") {
      if (static_cast<Index>(c.start.point.size()) != target.dimension()) {
        throw ConfigError("start.point: has " + std::to_string(c.start.point.size()) +
                          " coordinates, target has " + std::to_string(target.dimension()));
      }
      point_ = Eigen::Map<const Eigen::VectorXd>(c.start.point.data(), target.dimension());
    } else if (kind_ == "witness") {
      set_ = build_witness(c.start.witness, need_target(c), target);
      log_measure_ = witness_log_measure(target, set_);
    }
  }

  Point draw(const RandomStream& trial_rng) const {
    if (kind_ == "point") return point_;
    auto draws = trial_rng.draws(0, DrawKind::start);
    if (kind_ == "witness") return sample_restricted(target_, set_, draws, log_measure_);
    Point x;
    sample_stationary_into(target_, draws, x);
    return x;
  }

 private:
  const Target& target_;
  std::string kind_;
  Point point_;
  WitnessSet set_;
  double log_measure_ = 0.0;
};

// ---------------------------------------------------------------------------
// verify-identities

inline CommandResult cmd_verify_identities(const ExperimentConfig& c, bool inject_fault = false) {
  IdentityOptions opt;
  opt.k_max = c.k_max;
  opt.seed = c.seed;
  opt.fuzz_cases = c.fuzz_cases;
  opt.flip_q_sign = inject_fault;
  const auto rows = verify_identities(opt);
  Csv csv({"check", "cases", "max_error", "tolerance", "passed"});
  std::vector<std::string> failed;
  for (const auto& r : rows) {
    csv.row() << r.name << r.cases << r.max_error << r.tolerance << r.passed;
    if (!r.passed) failed.push_back(r.name);
  }
  CommandResult out;
  out.csv = csv.text();
  out.summary["checks"] = rows.size();
  out.summary["failed"] = failed;
  if (!failed.empty()) {
    out.exit_code = kExitFailure;
    out.message = "identity check failed: " + failed.front();
    for (std::size_t i = 1; i < failed.size(); ++i) out.message += ", " + failed[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// scan

inline CommandResult cmd_scan(const ExperimentConfig& c) {
  const auto& tc = need_target(c);
  const auto grid = kernel_list(c);
  const auto built = build_target(tc);
  WitnessSet start_set = full_space_set(built.target.dimension());
  if (c.start.kind == "witness") {
    start_set = build_witness(c.start.witness, tc, built.target);
  } else if (c.start.kind == "point") {
    throw ConfigError("scan: start must be a witness set or stationary");
  }
  ScanOptions opt;
  opt.trials = c.trials;
  opt.gap_samples = c.gap_samples;
  opt.threads = c.threads;
  const auto rows = acceptance_scan(built.target, grid, start_set, RandomStream(c.seed, 0), opt);
  Csv csv({"kernel", "h", "eta", "K", "n", "mean_log_accept", "accept_rate", "escape_rate",
           "gap_est", "gap_se", "tv_lb"});
  for (const auto& r : rows) {
    auto row = csv.row();
    kernel_columns(row, r.kernel);
    row << r.n << r.mean_log_accept << r.accept_rate << r.escape_rate << r.gap_est << r.gap_se
        << r.tv_lb;
  }
  CommandResult out;
  out.csv = csv.text();
  out.summary["rows"] = rows.size();
  out.summary["start_set"] = to_string(start_set.kind);
  return out;
}

// ---------------------------------------------------------------------------
// mixing

struct MixingPoint {
  std::uint64_t step = 0;
  std::uint64_t rejections = 0;     // summed over trials, cumulative
  std::uint64_t clean_trials = 0;   // no rejection and |x_s| <= 0.9 sqrt(d) for all s <= step
  double mean_norm_sq = 0.0;
  double max_norm_sq = 0.0;
  std::uint64_t witness_hits = 0;
  double witness_freq = 0.0;
  double tv_lb = 0.0;
};

struct MixingSeries {
  std::vector<MixingPoint> points;
  double stationary_witness_mass = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t gradient_evals = 0;
};

/// Runs `trials` chains of T steps (trial i on rng.child(i)) and aggregates,
/// every `thin` steps and at T, rejection counts, squared norms and the
/// frequency of `witness` against its exact stationary mass.
inline MixingSeries run_mixing(const KernelSpec& kernel, const Target& target,
                               const StartSampler& start, const WitnessSet& witness,
                               std::uint64_t T, std::uint64_t trials, std::uint64_t thin,
                               const RandomStream& rng, unsigned threads = 1) {
  kernel.validate();
  std::vector<std::uint64_t> record_steps;
  for (std::uint64_t t = 0; t <= T; t += thin) record_steps.push_back(t);
  if (record_steps.back() != T) record_steps.push_back(T);
  const std::size_t m = record_steps.size();
  const double clean_radius_sq = 0.81 * static_cast<double>(target.dimension());

  struct TrialTrace {
    std::vector<std::uint64_t> rejections;
    std::vector<unsigned char> clean;
    std::vector<double> norm_sq;
    std::vector<unsigned char> in_witness;
    std::uint64_t gradient_evals = 0;
  };
  std::vector<TrialTrace> traces(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    const RandomStream sub = rng.child(i);
    auto& tr = traces[i];
    tr.rejections.resize(m);
    tr.clean.resize(m);
    tr.norm_sq.resize(m);
    tr.in_witness.resize(m);
    Point x = start.draw(sub);
    std::uint64_t rejections = 0;
    bool clean = x.squaredNorm() <= clean_radius_sq;
    std::size_t next = 0;
    for (std::uint64_t t = 0;; ++t) {
      if (next < m && record_steps[next] == t) {
        tr.rejections[next] = rejections;
        tr.clean[next] = clean ? 1 : 0;
        tr.norm_sq[next] = x.squaredNorm();
        tr.in_witness[next] = membership(witness, x) ? 1 : 0;
        ++next;
      }
      if (t == T) break;
      auto rec = kernel_step(kernel, target, x, sub, t);
      tr.gradient_evals += static_cast<std::uint64_t>(rec.gradient_evals);
      if (rec.accepted) {
        x = std::move(rec.proposal);
      } else {
        ++rejections;
        clean = false;
      }
      if (x.squaredNorm() > clean_radius_sq) clean = false;
    }
  });

  MixingSeries out;
  out.trials = trials;
  out.stationary_witness_mass = std::exp(witness_log_measure(target, witness));
  const double p = out.stationary_witness_mass;
  for (const auto& tr : traces) out.gradient_evals += tr.gradient_evals;
  for (std::size_t k = 0; k < m; ++k) {
    MixingPoint pt;
    pt.step = record_steps[k];
    double sum = 0.0;
    for (const auto& tr : traces) {
      pt.rejections += tr.rejections[k];
      pt.clean_trials += tr.clean[k];
      pt.witness_hits += tr.in_witness[k];
      sum += tr.norm_sq[k];
      pt.max_norm_sq = std::max(pt.max_norm_sq, tr.norm_sq[k]);
    }
    pt.mean_norm_sq = trials ? sum / static_cast<double>(trials) : 0.0;
    pt.witness_freq = trials ? static_cast<double>(pt.witness_hits) / trials : 0.0;
    pt.tv_lb = tv_witness_gap(pt.witness_hits, trials, Interval{p, p}, p).lower_bound;
    out.points.push_back(pt);
  }
  return out;
}

inline CommandResult cmd_mixing(const ExperimentConfig& c) {
  const auto& tc = need_target(c);
  if (!c.kernel) throw ConfigError("mixing: needs a \"kernel\"");
  if (c.trials < 1) throw ConfigError("mixing: trials must be >= 1");
  const auto built = build_target(tc);
  const StartSampler start(c, built.target);
  const WitnessConfig wc = c.witness ? *c.witness : WitnessConfig{"omega_large"};
  const WitnessSet witness = build_witness(wc, tc, built.target);
  const auto series = run_mixing(*c.kernel, built.target, start, witness, c.T, c.trials, c.thin,
                                 RandomStream(c.seed, 0), c.threads);
  Csv csv({"step", "reject_count", "clean_trials", "mean_norm_sq", "max_norm_sq",
           "witness_freq", "tv_lb"});
  for (const auto& p : series.points) {
    csv.row() << p.step << p.rejections << p.clean_trials << p.mean_norm_sq << p.max_norm_sq
              << p.witness_freq << p.tv_lb;
  }
  CommandResult out;
  out.csv = csv.text();
  const auto& last = series.points.back();
  out.summary["witness"] = wc.set;
  out.summary["stationary_witness_mass"] = series.stationary_witness_mass;
  out.summary["final_clean_fraction"] = static_cast<double>(last.clean_trials) / c.trials;
  out.summary["final_tv_lb"] = last.tv_lb;
  out.summary["gradient_evals"] = series.gradient_evals;
  out.summary["gradient_evals_per_K"] =
      static_cast<double>(series.gradient_evals) / c.kernel->K;
  return out;
}

// ---------------------------------------------------------------------------
// resonance

struct ResonanceTrial {
  std::vector<std::uint64_t> steps;
  std::vector<double> magnitude;   // |x_res| at the recorded steps
  double max_rel_deviation = 0.0;  // over every step, not only recorded ones
  std::uint64_t accepted = 0;
};

inline constexpr double kResonanceTolerance = 1e-9;

/// Runs T steps of `kernel` and tracks |x_coordinate| relative to its start.
inline ResonanceTrial run_resonance_trial(const KernelSpec& kernel, const Target& target,
                                          Index coordinate, const Point& x0, std::uint64_t T,
                                          std::uint64_t thin, const RandomStream& rng) {
  ResonanceTrial out;
  Point x = x0;
  const double m0 = std::abs(x0[coordinate]);
  for (std::uint64_t t = 0;; ++t) {
    const double m = std::abs(x[coordinate]);
    const double dev = std::abs(m - m0) / std::max(m0, std::numeric_limits<double>::min());
    out.max_rel_deviation = std::max(out.max_rel_deviation, dev);
    if (t % thin == 0 || t == T) {
      out.steps.push_back(t);
      out.magnitude.push_back(m);
    }
    if (t == T) break;
    auto rec = kernel_step(kernel, target, x, rng, t);
    if (rec.accepted) {
      ++out.accepted;
      x = std::move(rec.proposal);
    }
  }
  return out;
}

inline CommandResult cmd_resonance(const ExperimentConfig& c) {
  const auto& tc = need_target(c);
  if (tc.kind != "resonant") throw ConfigError("resonance: target.kind must be \"resonant\"");
  const auto built = build_target(tc);
  KernelSpec kernel = KernelSpec::hmc(*tc.eta, *tc.K);
  if (c.kernel) {
    if (c.kernel->kind != KernelKind::hmc) throw ConfigError("resonance: kernel must be hmc");
    kernel = *c.kernel;
  }
  const StartSampler start(c, built.target);
  const std::uint64_t trials = std::max<std::uint64_t>(c.trials, 1);
  const RandomStream rng(c.seed, 0);
  std::vector<ResonanceTrial> results(trials);
  parallel_for(trials, c.threads, [&](std::size_t i) {
    const RandomStream sub = rng.child(i);
    results[i] = run_resonance_trial(kernel, built.target, 1, start.draw(sub), c.T, c.thin, sub);
  });
  Csv csv({"trial", "step", "abs_x_res", "rel_deviation"});
  double worst = 0.0;
  std::uint64_t accepted = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto& r = results[i];
    const double m0 = r.magnitude.front();
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      csv.row() << static_cast<std::uint64_t>(i) << r.steps[k] << r.magnitude[k]
                << std::abs(r.magnitude[k] - m0) / m0;
    }
    worst = std::max(worst, r.max_rel_deviation);
    accepted += r.accepted;
  }
  CommandResult out;
  out.csv = csv.text();
  out.summary["j"] = built.resonant->j;
  out.summary["lambda"] = built.resonant->lambda;
  out.summary["max_rel_deviation"] = worst;
  out.summary["tolerance"] = kResonanceTolerance;
  out.summary["accept_rate"] =
      c.T ? static_cast<double>(accepted) / static_cast<double>(c.T * trials) : 0.0;
  if (!(worst <= kResonanceTolerance)) {
    out.exit_code = kExitFailure;
    out.message = "resonant coordinate magnitude not constant: max relative deviation " +
                  format_real(worst) + " > " + format_real(kResonanceTolerance);
  }
  return out;
}

// ---------------------------------------------------------------------------
// measure

inline CommandResult cmd_measure(const ExperimentConfig& c) {
  const auto& tc = need_target(c);
  if (!c.witness) throw ConfigError("measure: needs a \"witness\"");
  const auto built = build_target(tc);
  const auto set = build_witness(*c.witness, tc, built.target);
  MeasureMethod method = MeasureMethod::automatic;
  if (c.method == "direct") method = MeasureMethod::direct;
  if (c.method == "factorized") method = MeasureMethod::factorized;
  const auto m = set_measure_mc(built.target, set, c.samples, RandomStream(c.seed, 0), method,
                                c.threads);
  Csv csv({"set", "method", "hits", "n", "estimate", "log_estimate", "ci_lo", "ci_hi"});
  csv.row() << c.witness->set
            << (m.method == MeasureMethod::direct ? "direct" : "factorized") << m.hits << m.n
            << m.estimate << m.log_estimate << m.interval.lo << m.interval.hi;
  CommandResult out;
  out.csv = csv.text();
  out.summary["estimate"] = m.estimate;
  out.summary["log_estimate"] = m.log_estimate;
  return out;
}

// ---------------------------------------------------------------------------
// gap

inline CommandResult cmd_gap(const ExperimentConfig& c) {
  const auto& tc = need_target(c);
  const auto kernels = kernel_list(c);
  const auto built = build_target(tc);
  const RandomStream rng(c.seed, 0);
  Csv csv({"kernel", "h", "eta", "K", "n", "numerator", "numerator_se", "variance", "ratio",
           "ratio_se"});
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const auto g = dirichlet_gap_estimate(kernels[i], built.target, c.samples, rng.child(i),
                                          c.threads);
    auto row = csv.row();
    kernel_columns(row, kernels[i]);
    row << g.n << g.numerator << g.numerator_se << g.variance << g.ratio << g.ratio_se;
  }
  CommandResult out;
  out.csv = csv.text();
  out.summary["rows"] = kernels.size();
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch, output and manifest

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"verify-identities", "scan", "mixing",
                                              "resonance",         "measure", "gap"};
  return names;
}

inline CommandResult run_command(const std::string& name, const ExperimentConfig& c,
                                 bool inject_fault = false) {
  if (name == "verify-identities") return cmd_verify_identities(c, inject_fault);
  if (name == "scan") return cmd_scan(c);
  if (name == "mixing") return cmd_mixing(c);
  if (name == "resonance") return cmd_resonance(c);
  if (name == "measure") return cmd_measure(c);
  if (name == "gap") return cmd_gap(c);
  throw ConfigError("unknown command " + name);
}

/// Runs a command, writes its CSV (stdout for "-") and, for file outputs, a
/// manifest next to it at <output>.manifest.json. Returns the exit code.
inline int execute(const std::string& name, const ExperimentConfig& c, std::ostream& out,
                   std::ostream& err, bool inject_fault = false) {
  const auto started = std::chrono::steady_clock::now();
  CommandResult result;
  try {
    result = run_command(name, c, inject_fault);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (c.output == "-") {
    out << result.csv;
  } else {
    std::ofstream f(c.output, std::ios::binary);
    if (!f) {
      err << "error: cannot write " << c.output << '\n';
      return kExitFailure;
    }
    f << result.csv;
    json manifest;
    manifest["tool"] = "hardmc";
    manifest["version"] = kVersion;
    manifest["command"] = name;
    manifest["config"] = to_json(c);
    manifest["wall_time_s"] = wall;
    manifest["exit_code"] = result.exit_code;
    manifest["summary"] = result.summary;
    manifest["outputs"] = json::array(
        {{{"path", c.output}, {"bytes", result.csv.size()}, {"fnv1a64", fnv1a64(result.csv)}}});
    std::ofstream mf(c.output + ".manifest.json");
    mf << manifest.dump(2) << '\n';
  }
  if (!result.message.empty()) err << result.message << '\n';
  return result.exit_code;
}

}  // namespace hardmc::cli
