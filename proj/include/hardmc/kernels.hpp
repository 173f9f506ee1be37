#pragma once

// Metropolis-adjusted Langevin (MALA) and K-step leapfrog HMC kernels.
//
// MALA:  y = x - h grad f(x) + sqrt(2h) g,  g ~ N(0, I)
//        log_accept = f(x) - f(y)
//                   + (|y - (x - h grad f(x))|^2 - |x - (y - h grad f(y))|^2) / (4h)
// HMC:   v_0 ~ N(0, I), K leapfrog steps of size eta,
//        log_accept = H(x_0, v_0) - H(x_K, v_K),  H(x, v) = f(x) + |v|^2 / 2
//
// A move is accepted iff log(u) < log_accept for u ~ U(0, 1). Noise comes
// from the (step, proposal_noise) address of the chain's stream and u from
// (step, accept_uniform), so MALA with h and HMC with K = 1, eta = sqrt(2h)
// see identical randomness.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hardmc/random.hpp"
#include "hardmc/stats.hpp"
#include "hardmc/targets.hpp"

namespace hardmc {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KernelKind { mala, hmc };

struct KernelSpec {
  KernelKind kind = KernelKind::mala;
  double h = 0.0;    // MALA step size
  double eta = 0.0;  // HMC leapfrog step size
  int K = 1;         // HMC leapfrog steps

  static KernelSpec mala(double h) {
    KernelSpec s{KernelKind::mala, h, 0.0, 1};
    s.validate();
    return s;
  }
  static KernelSpec hmc(double eta, int K) {
    KernelSpec s{KernelKind::hmc, 0.0, eta, K};
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == KernelKind::mala) {
      if (!(h > 0.0) || !std::isfinite(h)) {
        throw std::domain_error("MALA step size h must be positive");
      }
    } else {
      if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw std::domain_error("HMC step size eta must be positive");
      }
      if (K < 1) throw std::domain_error("HMC step count K must be >= 1");
    }
  }

  /// MALA-equivalent step size: h for MALA, eta^2 / 2 for HMC.
  double equivalent_h() const { return kind == KernelKind::mala ? h : 0.5 * eta * eta; }

  /// Gradient queries per transition as executed (no caching across steps).
  int gradient_evals_per_step() const { return kind == KernelKind::mala ? 2 : K + 1; }

  std::string describe() const {
    if (kind == KernelKind::mala) return "mala(h=" + std::to_string(h) + ")";
    return "hmc(eta=" + std::to_string(eta) + ",K=" + std::to_string(K) + ")";
  }
};

/// One leapfrog sub-iterate: x_k, v_{k-1/2}, v_k.
struct LeapfrogState {
  Point x;
  Point v_half;
  Point v;
};

struct Trajectory {
  Point x0;
  Point v0;
  Point xK;
  Point vK;
  std::vector<LeapfrogState> steps;  // k = 1..K when stored
  int gradient_evals = 0;
};

struct TransitionRecord {
  Point start;
  Point noise;      // g (MALA) or v_0 (HMC)
  Point proposal;   // y (MALA) or x_K (HMC)
  std::vector<LeapfrogState> subiterates;
  double log_accept = 0.0;
  bool accepted = false;
  double u = 0.5;
  int gradient_evals = 0;
};

namespace detail {

inline void require_finite(const Point& v, const char* what) {
  if (!v.allFinite()) {
    throw NumericError(std::string("non-finite ") + what);
  }
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace detail

/// K leapfrog steps: v_{k+1/2} = v_k - (eta/2) grad f(x_k),
/// x_{k+1} = x_k + eta v_{k+1/2}, v_{k+1} = v_{k+1/2} - (eta/2) grad f(x_{k+1}).
inline Trajectory leapfrog_trajectory(const Target& target, const Point& x0,
                                      const Point& v0, double eta, int K,
                                      bool store_subiterates = true) {
  if (K < 1) throw std::domain_error("leapfrog_trajectory: K must be >= 1");
  Trajectory out;
  out.x0 = x0;
  out.v0 = v0;
  Point x = x0;
  Point v = v0;
  Point grad = target.gradient(x);
  out.gradient_evals = 1;
  if (store_subiterates) out.steps.reserve(K);
  const double half = 0.5 * eta;
  for (int k = 0; k < K; ++k) {
    Point v_half = v - half * grad;
    x += eta * v_half;
    target.gradient(x, grad);
    ++out.gradient_evals;
    v = v_half - half * grad;
    if (store_subiterates) out.steps.push_back({x, std::move(v_half), v});
  }
  out.xK = std::move(x);
  out.vK = std::move(v);
  return out;
}

/// MALA log acceptance ratio evaluated directly from the proposal densities.
inline double mala_log_ratio(const Target& target, const Point& x,
                             const Point& y, double h) {
  const Point gx = target.gradient(x);
  const Point gy = target.gradient(y);
  const double forward = (y - (x - h * gx)).squaredNorm();
  const double backward = (x - (y - h * gy)).squaredNorm();
  return target.potential(x) - target.potential(y) +
         (forward - backward) / (4.0 * h);
}

/// MALA transition from x with explicit noise g and uniform u.
inline TransitionRecord mala_step_with(const Target& target, const Point& x,
                                       double h, const Point& noise, double u) {
  if (!(h > 0.0)) throw std::domain_error("mala_step: h must be positive");
  detail::require_finite(x, "MALA start state");
  TransitionRecord rec;
  rec.start = x;
  rec.noise = noise;
  rec.u = u;
  const Point gx = target.gradient(x);
  rec.proposal = x - h * gx + std::sqrt(2.0 * h) * noise;
  detail::require_finite(rec.proposal, "MALA proposal");
  const Point gy = target.gradient(rec.proposal);
  detail::require_finite(gy, "gradient at MALA proposal");
  rec.gradient_evals = 2;
  const double fy = target.potential(rec.proposal);
  detail::require_finite(fy, "potential at MALA proposal");
  const double forward = (rec.proposal - (x - h * gx)).squaredNorm();
  const double backward = (x - (rec.proposal - h * gy)).squaredNorm();
  rec.log_accept = target.potential(x) - fy + (forward - backward) / (4.0 * h);
  detail::require_finite(rec.log_accept, "MALA log acceptance");
  rec.accepted = std::log(u) < std::min(0.0, rec.log_accept);
  return rec;
}

inline TransitionRecord mala_step(const Target& target, const Point& x,
                                  double h, const RandomStream& rng,
                                  std::uint64_t step) {
  Point noise(target.dimension());
  auto noise_draws = rng.draws(step, DrawKind::proposal_noise);
  noise_draws.fill_normal({noise.data(), static_cast<std::size_t>(noise.size())});
  const double u = rng.draws(step, DrawKind::accept_uniform).uniform();
  return mala_step_with(target, x, h, noise, u);
}

inline double hamiltonian(const Target& target, const Point& x, const Point& v) {
  return target.potential(x) + 0.5 * v.squaredNorm();
}

/// HMC transition from x with explicit initial velocity v0 and uniform u.
inline TransitionRecord hmc_step_with(const Target& target, const Point& x,
                                      double eta, int K, const Point& v0,
                                      double u, bool store_subiterates = false) {
  if (!(eta > 0.0)) throw std::domain_error("hmc_step: eta must be positive");
  if (K < 1) throw std::domain_error("hmc_step: K must be >= 1");
  detail::require_finite(x, "HMC start state");
  auto traj = leapfrog_trajectory(target, x, v0, eta, K, store_subiterates);
  detail::require_finite(traj.xK, "HMC proposal");
  detail::require_finite(traj.vK, "HMC final velocity");
  TransitionRecord rec;
  rec.start = x;
  rec.noise = v0;
  rec.u = u;
  rec.gradient_evals = traj.gradient_evals;
  rec.log_accept = hamiltonian(target, x, v0) - hamiltonian(target, traj.xK, traj.vK);
  detail::require_finite(rec.log_accept, "HMC log acceptance");
  rec.accepted = std::log(u) < std::min(0.0, rec.log_accept);
  rec.proposal = std::move(traj.xK);
  rec.subiterates = std::move(traj.steps);
  return rec;
}

inline TransitionRecord hmc_step(const Target& target, const Point& x,
                                 double eta, int K, const RandomStream& rng,
                                 std::uint64_t step,
                                 bool store_subiterates = false) {
  Point v0(target.dimension());
  auto noise_draws = rng.draws(step, DrawKind::proposal_noise);
  noise_draws.fill_normal({v0.data(), static_cast<std::size_t>(v0.size())});
  const double u = rng.draws(step, DrawKind::accept_uniform).uniform();
  return hmc_step_with(target, x, eta, K, v0, u, store_subiterates);
}

inline TransitionRecord kernel_step(const KernelSpec& kernel, const Target& target,
                                    const Point& x, const RandomStream& rng,
                                    std::uint64_t step,
                                    bool store_subiterates = false) {
  if (kernel.kind == KernelKind::mala) return mala_step(target, x, kernel.h, rng, step);
  return hmc_step(target, x, kernel.eta, kernel.K, rng, step, store_subiterates);
}

// ---------------------------------------------------------------------------
// Chains

using WitnessPredicate = std::function<bool(const Point&)>;

struct RecordPolicy {
  bool keep_states = true;
  int thin = 1;
  bool keep_records = false;
  bool keep_subiterates = false;
  std::vector<WitnessPredicate> witnesses;
};

/// Per-coordinate Welford accumulators stored as vectors.
class VectorMoments {
 public:
  void push(const Point& x) {
    if (n_ == 0) {
      mean_ = Eigen::VectorXd::Zero(x.size());
      m2_ = Eigen::VectorXd::Zero(x.size());
    }
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_.array() += delta.array() * (x - mean_).array();
  }
  std::uint64_t count() const { return n_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::VectorXd variance() const {
    if (n_ < 2) return Eigen::VectorXd::Zero(mean_.size());
    return m2_ / static_cast<double>(n_ - 1);
  }

 private:
  std::uint64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct Trace {
  KernelSpec kernel;
  std::uint64_t steps = 0;
  std::vector<Point> states;  // x_0, x_thin, x_2thin, ... when kept
  std::vector<TransitionRecord> records;
  Point final_state;
  std::uint64_t accepted = 0;
  std::uint64_t gradient_evals = 0;
  RunningMoments log_accept;
  VectorMoments coordinates;                // over x_0..x_T
  std::vector<std::uint64_t> witness_hits;  // over x_0..x_T

  double accept_rate() const {
    return steps == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(steps);
  }
};

/// Runs T kernel steps from x0; step t uses the t-th address of `rng`.
inline Trace run_chain(const KernelSpec& kernel, const Target& target,
                       const Point& x0, std::uint64_t T, const RandomStream& rng,
                       const RecordPolicy& policy = {}) {
  kernel.validate();
  if (policy.thin < 1) throw std::invalid_argument("run_chain: thin must be >= 1");
  Trace trace;
  trace.kernel = kernel;
  trace.witness_hits.assign(policy.witnesses.size(), 0);
  auto observe = [&](const Point& x, std::uint64_t t) {
    trace.coordinates.push(x);
    for (std::size_t w = 0; w < policy.witnesses.size(); ++w) {
      if (policy.witnesses[w](x)) ++trace.witness_hits[w];
    }
    if (policy.keep_states && t % static_cast<std::uint64_t>(policy.thin) == 0) {
      trace.states.push_back(x);
    }
  };
  Point x = x0;
  observe(x, 0);
  for (std::uint64_t t = 0; t < T; ++t) {
    TransitionRecord rec;
    try {
      rec = kernel_step(kernel, target, x, rng, t, policy.keep_subiterates);
    } catch (const NumericError& e) {
      throw NumericError("chain aborted at step " + std::to_string(t) + ": " + e.what());
    }
    ++trace.steps;
    trace.gradient_evals += static_cast<std::uint64_t>(rec.gradient_evals);
    trace.log_accept.push(rec.log_accept);
    if (rec.accepted) {
      ++trace.accepted;
      x = rec.proposal;
    }
    observe(x, t + 1);
    if (policy.keep_records) trace.records.push_back(std::move(rec));
  }
  trace.final_state = std::move(x);
  return trace;
}

}  // namespace hardmc
