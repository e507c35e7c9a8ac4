// Copyright 2026 The idmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDMPC__LOOP_HPP_
#define IDMPC__LOOP_HPP_

/**
 * @file
 * @brief Closed-loop adaptive tracking MPC.
 *
 * After an offline bootstrap of N transitions, the loop repeats every n_apply steps:
 *  1. identify an affine model from the last N transitions (unless frozen),
 *  2. solve the tracking MPC with that model from the measured state,
 *  3. apply the first n_apply optimal inputs open loop.
 * Identification stops for good once two consecutive plant states differ by less than
 * MpcConfig::stop_threshold.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "mpc.hpp"
#include "plant.hpp"
#include "sysid.hpp"

namespace idmpc {

enum class BootstrapKind {
  /// MPC on the exact plant linearization at the current state, re-linearized every n_apply steps.
  model_based_mpc,
  /// Nominal input plus seeded uniform perturbation, clipped to the input set.
  excited_rollout,
};

struct BootstrapStrategy
{
  BootstrapKind kind = BootstrapKind::model_based_mpc;
  double amplitude   = 0.1;
  std::uint64_t seed = 0;
  /// Nominal input for excited_rollout; empty means zero.
  Vector nominal;
};

/// Portable uniform generator; identical streams on every platform for a given seed.
class SplitMix64
{
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next()
  {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

enum class LoopStatus { completed, infeasible, domain_error, rank_deficient, solver_error };

inline const char * to_string(LoopStatus s)
{
  switch (s) {
  case LoopStatus::completed: return "completed";
  case LoopStatus::infeasible: return "infeasible";
  case LoopStatus::domain_error: return "domain_error";
  case LoopStatus::rank_deficient: return "rank_deficient";
  case LoopStatus::solver_error: return "solver_error";
  }
  return "unknown";
}

/// Diagnostics recorded at one solve instant of the adaptive loop.
struct SolveRecord
{
  long t = 0;
  double J_star      = 0;
  double J_hat_star  = 0;
  double V           = 0;
  double sigma_min_Z = 0;
  double id_error    = 0;
  QpStatus status    = QpStatus::max_iter;
  bool frozen        = false;
  int qp_iterations  = 0;
  AffineModel model;
  Vector x_s, u_s, y_s;
  Vector x_sr;
};

/**
 * @brief Time-indexed closed-loop record.
 *
 * x and y hold t = 0..T, u holds the inputs applied at t = 0..T-1. The output at the final time
 * is evaluated with a zero input since no input is applied there.
 */
struct ClosedLoopTrace
{
  Index n = 0, m = 0, p = 0;
  Vector y_ref;
  long bootstrap_length = 0;
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::vector<Vector> y;
  std::vector<SolveRecord> solves;
  LoopStatus status = LoopStatus::completed;
  std::string message;

  long final_time() const { return static_cast<long>(x.size()) - 1; }
  bool completed() const { return status == LoopStatus::completed; }
};

namespace detail {

/// Steps the plant, records the trajectory and feeds the data window.
class Recorder
{
public:
  Recorder(const Plant & plant, const Vector & x0, Index N)
      : plant_(plant), window_(N, plant.state_dim(), plant.input_dim(), plant.output_dim())
  {
    if (x0.size() != plant.state_dim()) { throw DimensionError("closed loop: x0 has wrong size"); }
    x_.push_back(x0);
  }

  void apply(const Vector & u)
  {
    const long t = time();
    try {
      Vector y  = plant_.output(x_.back(), u);
      Vector xn = plant_.step(x_.back(), u);
      window_.push(x_.back(), u, y, xn);
      u_.push_back(u);
      y_.push_back(std::move(y));
      x_.push_back(std::move(xn));
    } catch (const DomainError & err) {
      throw DomainError(err.what(), t);
    }
  }

  long time() const { return static_cast<long>(x_.size()) - 1; }
  const Vector & state() const { return x_.back(); }
  const DataWindow & window() const { return window_; }
  const Plant & plant() const { return plant_; }

  std::vector<Vector> & states() { return x_; }
  std::vector<Vector> & inputs() { return u_; }
  std::vector<Vector> & outputs() { return y_; }

private:
  const Plant & plant_;
  DataWindow window_;
  std::vector<Vector> x_, u_, y_;
};

inline void check_input(const Vector & u, const MpcConfig & cfg, long t)
{
  constexpr double tol = 1e-8;
  if ((u.array() < cfg.u_lo.array() - tol).any() || (u.array() > cfg.u_hi.array() + tol).any()) {
    throw SolverError("input constraint violated at t=" + std::to_string(t), "constraint_violation");
  }
}

inline void run_bootstrap(Recorder & rec, const MpcConfig & cfg, const BootstrapStrategy & strategy)
{
  const Plant & plant = rec.plant();
  const Index n = plant.state_dim(), m = plant.input_dim();
  const long N        = static_cast<long>(cfg.N);
  const long n_apply  = static_cast<long>(cfg.steps_per_solve(n));

  if (strategy.kind == BootstrapKind::model_based_mpc) {
    std::optional<Vector> warm;
    while (rec.time() < N) {
      const AffineModel lin = linearize(plant, rec.state(), Vector::Zero(m));
      const MpcSolution sol = solve_tracking(lin, rec.state(), cfg, warm);
      if (!sol.ok()) {
        throw SolverError("bootstrap MPC failed at t=" + std::to_string(rec.time()), to_string(sol.status));
      }
      for (long k = 0; k < n_apply && rec.time() < N; ++k) {
        check_input(sol.u_pred[static_cast<std::size_t>(k)], cfg, rec.time());
        rec.apply(sol.u_pred[static_cast<std::size_t>(k)]);
      }
      warm = sol.shifted(n_apply);
    }
    return;
  }

  SplitMix64 rng(strategy.seed);
  const Vector nominal = strategy.nominal.size() == m ? strategy.nominal : Vector(Vector::Zero(m));
  while (rec.time() < N) {
    Vector u(m);
    for (Index j = 0; j < m; ++j) {
      u[j] = std::clamp(nominal[j] + rng.uniform(-strategy.amplitude, strategy.amplitude), cfg.u_lo[j], cfg.u_hi[j]);
    }
    // keep bounded state components (e.g. a stored input) inside their box
    const Vector xn = plant.step(rec.state(), u);
    for (const auto & b : cfg.state_box) {
      if (xn[b.index] < b.lo || xn[b.index] > b.hi) {
        u = nominal.cwiseMax(cfg.u_lo).cwiseMin(cfg.u_hi);
        break;
      }
    }
    rec.apply(u);
  }
}

inline void check_bootstrap_pe(const DataWindow & w)
{
  const Matrix Z     = w.Z();
  const double sigma = pe_metric(w);
  if (!(sigma > 1e-12 * std::max(1.0, sigma_max(Z)))) {
    throw SingularError("bootstrap: regressor Z is rank deficient", sigma);
  }
}

inline void check_bootstrap_length(const Plant & plant, const MpcConfig & cfg)
{
  const Index needed = plant.state_dim() + plant.input_dim() + 1;
  if (cfg.N < needed) {
    throw ConfigError("bootstrap: N=" + std::to_string(cfg.N) + " is below n+m+1=" + std::to_string(needed)
                      + ", Z cannot have full row rank");
  }
}

}  // namespace detail

/**
 * @brief Generate the initial data window D_N.
 *
 * Throws ConfigError if N < n + m + 1 and SingularError if the collected regressor is rank
 * deficient.
 */
inline DataWindow bootstrap(const Plant & plant, const Vector & x0, const MpcConfig & cfg, const BootstrapStrategy & strategy)
{
  cfg.validate(plant.state_dim(), plant.input_dim(), plant.output_dim());
  detail::check_bootstrap_length(plant, cfg);
  detail::Recorder rec(plant, x0, cfg.N);
  detail::run_bootstrap(rec, cfg, strategy);
  detail::check_bootstrap_pe(rec.window());
  return rec.window();
}

/// Same as bootstrap() but without the excitation check; used for diagnostics of degenerate data.
inline DataWindow collect_bootstrap(const Plant & plant, const Vector & x0, const MpcConfig & cfg, const BootstrapStrategy & strategy)
{
  cfg.validate(plant.state_dim(), plant.input_dim(), plant.output_dim());
  detail::check_bootstrap_length(plant, cfg);
  detail::Recorder rec(plant, x0, cfg.N);
  detail::run_bootstrap(rec, cfg, strategy);
  return rec.window();
}

/**
 * @brief Run the adaptive tracking MPC in closed loop until T_end.
 *
 * Solve instants are t = N, N + n_apply, ... < T_end. Failures (infeasible MPC, plant domain
 * errors, rank-deficient bootstrap) end the run early; the trace is returned up to that point
 * with the corresponding status.
 */
inline ClosedLoopTrace run_closed_loop(const Plant & plant, const Vector & x0, const MpcConfig & cfg,
                                       const BootstrapStrategy & strategy, long T_end)
{
  const Index n = plant.state_dim(), m = plant.input_dim(), p = plant.output_dim();
  cfg.validate(n, m, p);
  detail::check_bootstrap_length(plant, cfg);
  if (T_end < static_cast<long>(cfg.N)) { throw ConfigError("run_closed_loop: T_end must be at least N"); }

  ClosedLoopTrace trace;
  trace.n = n;
  trace.m = m;
  trace.p = p;
  trace.y_ref = cfg.y_ref;
  trace.bootstrap_length = static_cast<long>(cfg.N);

  detail::Recorder rec(plant, x0, cfg.N);
  const long n_apply = static_cast<long>(cfg.steps_per_solve(n));

  auto finish = [&](LoopStatus status, std::string message) {
    trace.status  = status;
    trace.message = std::move(message);
    trace.x       = std::move(rec.states());
    trace.u       = std::move(rec.inputs());
    trace.y       = std::move(rec.outputs());
    try {
      trace.y.push_back(plant.output(trace.x.back(), Vector::Zero(m)));
    } catch (const DomainError &) {
      trace.y.push_back(Vector::Constant(p, std::numeric_limits<double>::quiet_NaN()));
    }
    return trace;
  };

  try {
    detail::run_bootstrap(rec, cfg, strategy);
    detail::check_bootstrap_pe(rec.window());
  } catch (const DomainError & err) {
    return finish(LoopStatus::domain_error, err.what());
  } catch (const SingularError & err) {
    return finish(LoopStatus::rank_deficient, err.what());
  } catch (const SolverError & err) {
    return finish(LoopStatus::infeasible, err.what());
  }

  bool frozen = false;
  std::optional<AffineModel> model;
  std::optional<Vector> warm;
  ActiveSetSolver solver(cfg.qp);

  for (long t = static_cast<long>(cfg.N); t < T_end; t += n_apply) {
    const Vector x_t = rec.state();

    if (!frozen && t > static_cast<long>(cfg.N)) {
      const auto & xs = rec.states();
      for (long k = t - n_apply; k < t; ++k) {
        if ((xs[static_cast<std::size_t>(k + 1)] - xs[static_cast<std::size_t>(k)]).norm() < cfg.stop_threshold) {
          frozen = true;
          break;
        }
      }
    }

    SolveRecord rec_s;
    rec_s.t = t;
    try {
      if (!frozen || !model) { model = identify(rec.window(), cfg.lambda); }
      rec_s.sigma_min_Z = pe_metric(rec.window());
      rec_s.frozen      = frozen;
      rec_s.model       = *model;
      rec_s.id_error    = id_error_diagnostic(*model, plant, x_t);

      const TrackingQp tqp(*model, x_t, cfg);
      const MpcSolution sol = tqp.decode(solver.solve(tqp.problem(), warm));
      rec_s.status        = sol.status;
      rec_s.qp_iterations = sol.qp_iterations;
      rec_s.J_star        = sol.J_star;
      rec_s.x_s           = sol.x_s;
      rec_s.u_s           = sol.u_s;
      rec_s.y_s           = sol.y_s;

      const ReachableEquilibrium eq = optimal_reachable_cost(*model, cfg);
      rec_s.J_hat_star = eq.J_hat_star;
      rec_s.x_sr       = eq.x_sr;
      rec_s.V          = lyapunov_candidate(sol.J_star, eq.J_hat_star);
      trace.solves.push_back(rec_s);

      if (!sol.ok()) {
        return finish(sol.status == QpStatus::infeasible ? LoopStatus::infeasible : LoopStatus::solver_error,
                      std::string("MPC ") + to_string(sol.status) + " at t=" + std::to_string(t));
      }
      for (long k = 0; k < n_apply && rec.time() < T_end; ++k) {
        detail::check_input(sol.u_pred[static_cast<std::size_t>(k)], cfg, rec.time());
        rec.apply(sol.u_pred[static_cast<std::size_t>(k)]);
      }
      warm = sol.shifted(n_apply);
    } catch (const DomainError & err) {
      return finish(LoopStatus::domain_error, err.what());
    } catch (const Error & err) {
      if (trace.solves.empty() || trace.solves.back().t != t) {
        rec_s.status = QpStatus::max_iter;
        trace.solves.push_back(rec_s);
      }
      return finish(LoopStatus::solver_error, err.what());
    }
  }
  return finish(LoopStatus::completed, "");
}

}  // namespace idmpc

#endif  // IDMPC__LOOP_HPP_
