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

#ifndef IDMPC__ANALYSIS_HPP_
#define IDMPC__ANALYSIS_HPP_

/**
 * @file
 * @brief Post-hoc metrics: tracking error, true-plant equilibrium, parameter sweeps.
 */

#include <algorithm>
#include <atomic>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "csv.hpp"
#include "diagnostics.hpp"
#include "loop.hpp"

namespace idmpc {

/// Sum over t = offset..T of |y_t - y_ref|_2.
inline double tracking_error(const ClosedLoopTrace & trace, const Vector & y_ref, long T = 2500, long offset = 0)
{
  if (T < 0 || offset < 0 || offset > T) { throw DimensionError("tracking_error: need 0 <= offset <= T"); }
  if (static_cast<long>(trace.y.size()) < T + 1) {
    throw DimensionError("tracking_error: trace has " + std::to_string(trace.y.size()) + " outputs, need " + std::to_string(T + 1));
  }
  double err = 0;
  for (long t = offset; t <= T; ++t) {
    const Vector & y = trace.y[static_cast<std::size_t>(t)];
    if (y.size() != y_ref.size()) { throw DimensionError("tracking_error: y_ref size mismatch"); }
    err += (y - y_ref).norm();
  }
  return err;
}

inline double tracking_error(const ClosedLoopTrace & trace, long T = 2500, long offset = 0)
{
  return tracking_error(trace, trace.y_ref, T, offset);
}

// ------------------------------------------------------------------------------------------------
// true-plant equilibrium

struct PlantEquilibrium
{
  Vector x_sr;
  Vector u_sr;
  Vector y_sr;
  double residual = 0;  ///< |f(x_sr, u_sr) - x_sr|
  double cost     = 0;  ///< |y_sr - y_ref|_S^2
};

struct EquilibriumOptions
{
  int starts          = 20;
  int max_iter        = 50;
  double tol          = 1e-12;
  double max_residual = 1e-10;
  /// Open-loop steps used to generate the second inner seed of every start.
  int settle_steps = 5000;
};

namespace detail {

/// Newton on f(x, u) = x for fixed u, starting from x. Returns false when it fails to converge.
inline bool newton_fixed_point(const Plant & plant, Vector & x, const Vector & u, const EquilibriumOptions & opt)
{
  const Index n = plant.state_dim();
  try {
    for (int it = 0; it < opt.max_iter; ++it) {
      const Vector F = plant.step(x, u) - x;
      if (!F.allFinite()) { return false; }
      if (F.norm() <= opt.tol) { return true; }
      const AffineModel lin = linearize(plant, x, u);
      const Matrix J = lin.A - Matrix::Identity(n, n);
      const Eigen::ColPivHouseholderQR<Matrix> qr(J);
      if (qr.rank() < n) { return false; }
      const Vector dx = qr.solve(-F);
      // damped step: keep the residual decreasing (and inside the plant's domain)
      bool moved = false;
      for (double a = 1.0; a > 1e-6; a *= 0.5) {
        try {
          const Vector xn = x + a * dx;
          if ((plant.step(xn, u) - xn).norm() < F.norm()) {
            x     = xn;
            moved = true;
            break;
          }
        } catch (const DomainError &) {
        }
      }
      if (!moved) { break; }
    }
    return (plant.step(x, u) - x).norm() <= opt.max_residual;
  } catch (const DomainError &) {
    return false;
  }
}

}  // namespace detail

/**
 * @brief Equilibrium of the plant minimizing |h(x, u) - y_ref|_S^2 subject to f(x, u) = x and
 * u in [u_lo, u_hi].
 *
 * Nested scheme: Newton for x(u) on the steady-state equations, projected Gauss-Newton on u,
 * multistart over equispaced inputs on the box diagonal. The inner Newton solve of each start is
 * seeded both with x_guess and with the state the plant settles to under that constant input, since
 * the steady-state equations may have several branches. Throws Error if no start reaches a residual
 * of EquilibriumOptions::max_residual.
 */
inline PlantEquilibrium plant_equilibrium(const Plant & plant, const Vector & u_lo, const Vector & u_hi, const Vector & y_ref,
                                          const Matrix & S, const Vector & x_guess, const EquilibriumOptions & opt = {})
{
  const Index n = plant.state_dim(), m = plant.input_dim(), p = plant.output_dim();
  if (u_lo.size() != m || u_hi.size() != m || y_ref.size() != p || S.rows() != p || S.cols() != p || x_guess.size() != n) {
    throw DimensionError("plant_equilibrium: argument dimensions");
  }
  if ((u_lo.array() > u_hi.array()).any()) { throw DimensionError("plant_equilibrium: empty input box"); }
  const Eigen::LLT<Matrix> Sc(S);
  if (Sc.info() != Eigen::Success) { throw DimensionError("plant_equilibrium: S not positive definite"); }
  const Matrix Lt = Sc.matrixU();

  auto project = [&](const Vector & u) -> Vector { return u.cwiseMax(u_lo).cwiseMin(u_hi); };

  std::optional<PlantEquilibrium> best;
  double best_residual = std::numeric_limits<double>::infinity();

  // seeds for the inner solve: the user guess, and where the plant settles under a constant input
  // (reaches other stable branches of the steady-state equations)
  std::vector<std::pair<Vector, Vector>> seeds;
  for (int s = 0; s < opt.starts; ++s) {
    const double frac = opt.starts > 1 ? static_cast<double>(s) / (opt.starts - 1) : 0.5;
    const Vector u = u_lo + frac * (u_hi - u_lo);
    seeds.emplace_back(x_guess, u);
    try {
      Vector x = x_guess;
      for (int k = 0; k < opt.settle_steps && x.allFinite(); ++k) { x = plant.step(x, u); }
      if (x.allFinite()) { seeds.emplace_back(x, u); }
    } catch (const DomainError &) {
    }
  }

  for (const auto & [x_seed, u_seed] : seeds) {
    Vector u = u_seed;
    Vector x = x_seed;
    if (!detail::newton_fixed_point(plant, x, u, opt)) { continue; }

    auto cost_at = [&](const Vector & xx, const Vector & uu) {
      const Vector r = Lt * (plant.output(xx, uu) - y_ref);
      return r.squaredNorm();
    };
    double cost = cost_at(x, u);

    for (int it = 0; it < opt.max_iter; ++it) {
      const AffineModel lin = linearize(plant, x, u);
      const Matrix G = Lt * (lin.C * (lin.A - Matrix::Identity(n, n)).colPivHouseholderQr().solve(-lin.B) + lin.D);
      const Vector r = Lt * (plant.output(x, u) - y_ref);
      // Gauss-Newton step on the free inputs (those not pinned at a bound with outward gradient)
      const Vector grad = G.transpose() * r;
      std::vector<Index> free;
      for (Index j = 0; j < m; ++j) {
        const bool at_lo = u[j] <= u_lo[j] && grad[j] > 0;
        const bool at_hi = u[j] >= u_hi[j] && grad[j] < 0;
        if (!at_lo && !at_hi) { free.push_back(j); }
      }
      if (free.empty()) { break; }
      Matrix Gf(G.rows(), static_cast<Index>(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k) { Gf.col(static_cast<Index>(k)) = G.col(free[k]); }
      const Vector df = Gf.completeOrthogonalDecomposition().solve(-r);
      Vector du = Vector::Zero(m);
      for (std::size_t k = 0; k < free.size(); ++k) { du[free[k]] = df[static_cast<Index>(k)]; }
      if (du.norm() <= opt.tol * (1.0 + u.norm())) { break; }

      bool improved = false;
      for (double a = 1.0; a > 1e-6; a *= 0.5) {
        const Vector un = project(u + a * du);
        Vector xn = x;
        if (!detail::newton_fixed_point(plant, xn, un, opt)) { continue; }
        const double cn = cost_at(xn, un);
        if (cn <= cost) {
          improved = (cost - cn) > opt.tol * opt.tol || (un - u).norm() > opt.tol;
          x = xn;
          u = un;
          cost = cn;
          break;
        }
      }
      if (!improved) { break; }
    }

    const double residual = (plant.step(x, u) - x).norm();
    best_residual = std::min(best_residual, residual);
    if (residual > opt.max_residual) { continue; }
    if (!best || cost < best->cost - 1e-15) {
      best = PlantEquilibrium{x, u, plant.output(x, u), residual, cost};
    }
  }
  if (!best) {
    throw Error("plant_equilibrium: no start converged (best residual " + format_double(best_residual) + ")");
  }
  return *best;
}

/**
 * @brief Plant equilibrium under a controller configuration.
 *
 * For an AugmentedPlant the steady-state input set is the state_box steady-state range of the
 * stored input component; the result is lifted back to the augmented state with a zero increment.
 * For any other plant [us_lo, us_hi] is used directly.
 */
inline PlantEquilibrium plant_equilibrium(const Plant & plant, const MpcConfig & cfg, const Vector & x_guess,
                                          const EquilibriumOptions & opt = {})
{
  if (const auto * aug = dynamic_cast<const AugmentedPlant *>(&plant)) {
    const Plant & inner = aug->inner();
    const Index n0 = inner.state_dim(), m0 = inner.input_dim();
    Vector lo = Vector::Constant(m0, -std::numeric_limits<double>::infinity());
    Vector hi = Vector::Constant(m0, std::numeric_limits<double>::infinity());
    for (const auto & b : cfg.state_box) {
      const Index j = b.index - aug->stored_input_offset();
      if (j >= 0 && j < m0) {
        lo[j] = b.ss_lo;
        hi[j] = b.ss_hi;
      }
    }
    if (!lo.allFinite() || !hi.allFinite()) {
      throw ConfigError("plant_equilibrium: augmented plant needs state_box bounds on every stored input");
    }
    if (x_guess.size() != plant.state_dim()) { throw DimensionError("plant_equilibrium: x_guess size"); }
    const PlantEquilibrium e = plant_equilibrium(inner, lo, hi, cfg.y_ref, cfg.S, x_guess.head(n0), opt);
    PlantEquilibrium out;
    out.x_sr.resize(n0 + m0);
    out.x_sr << e.x_sr, e.u_sr;
    out.u_sr     = Vector::Zero(plant.input_dim());
    out.y_sr     = e.y_sr;
    out.residual = (plant.step(out.x_sr, out.u_sr) - out.x_sr).norm();
    out.cost     = e.cost;
    return out;
  }
  return plant_equilibrium(plant, cfg.us_lo, cfg.us_hi, cfg.y_ref, cfg.S, x_guess, opt);
}

// ------------------------------------------------------------------------------------------------
// sweeps

struct SweepSpec
{
  std::vector<double> lambda_values;
  std::vector<Index> N_values;
  long T_end   = 2500;
  int workers  = 1;
  std::uint64_t seed = 0;
};

struct SweepCell
{
  double lambda = 0;
  Index N       = 0;
  LoopStatus status = LoopStatus::completed;
  std::optional<double> tracking_error;  ///< only for completed runs
  Vector y_end;
  std::string message;

  bool ok() const { return status == LoopStatus::completed && tracking_error.has_value(); }
};

/// Cells in row-major order: N_values index outer, lambda_values index inner.
struct SweepGrid
{
  std::vector<double> lambda_values;
  std::vector<Index> N_values;
  std::vector<SweepCell> cells;

  const SweepCell & at(std::size_t i_N, std::size_t i_lambda) const { return cells.at(i_N * lambda_values.size() + i_lambda); }
};

/// Per-cell seed; independent of scheduling so results do not depend on the worker count.
inline std::uint64_t cell_seed(std::uint64_t base, std::size_t index)
{
  return SplitMix64(base ^ (0x9e3779b97f4a7c15ULL * (index + 1))).next();
}

/**
 * @brief Run one closed loop per (lambda, N) cell on a pool of worker threads.
 *
 * Each cell copies base_cfg, overrides lambda and N, and records the tracking error over
 * [0, T_end] or the failure status. Configuration errors of a single cell are recorded as failures.
 */
inline SweepGrid run_sweep(const Plant & plant, const Vector & x0, const MpcConfig & base_cfg,
                           const BootstrapStrategy & strategy, const SweepSpec & spec)
{
  if (spec.lambda_values.empty() || spec.N_values.empty()) { throw ConfigError("run_sweep: empty grid"); }
  if (spec.workers < 1) { throw ConfigError("run_sweep: workers must be positive"); }

  SweepGrid grid;
  grid.lambda_values = spec.lambda_values;
  grid.N_values      = spec.N_values;
  grid.cells.resize(spec.lambda_values.size() * spec.N_values.size());

  auto run_cell = [&](std::size_t idx) {
    SweepCell & cell = grid.cells[idx];
    cell.N      = spec.N_values[idx / spec.lambda_values.size()];
    cell.lambda = spec.lambda_values[idx % spec.lambda_values.size()];
    MpcConfig cfg = base_cfg;
    cfg.N      = cell.N;
    cfg.lambda = cell.lambda;
    BootstrapStrategy strat = strategy;
    strat.seed = cell_seed(spec.seed, idx);
    try {
      const ClosedLoopTrace trace = run_closed_loop(plant, x0, cfg, strat, spec.T_end);
      cell.status  = trace.status;
      cell.message = trace.message;
      cell.y_end   = trace.y.back();
      if (trace.completed()) { cell.tracking_error = tracking_error(trace, cfg.y_ref, spec.T_end); }
    } catch (const Error & err) {
      cell.status  = LoopStatus::solver_error;
      cell.message = err.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.cells.size(); i = next++) { run_cell(i); }
  };
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), grid.cells.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t i = 0; i < nthreads; ++i) { pool.emplace_back(worker); }
    for (auto & th : pool) { th.join(); }
  }
  return grid;
}

/// Matrix CSV: one row per N, one column per lambda; cells hold the error or the failure status.
inline void write_sweep_csv(std::ostream & os, const SweepGrid & grid)
{
  os << "N\\lambda";
  for (double l : grid.lambda_values) { os << ',' << format_double(l); }
  os << '\n';
  for (std::size_t i = 0; i < grid.N_values.size(); ++i) {
    os << grid.N_values[i];
    for (std::size_t j = 0; j < grid.lambda_values.size(); ++j) {
      const SweepCell & c = grid.at(i, j);
      os << ',' << (c.ok() ? format_double(*c.tracking_error) : std::string(to_string(c.status)));
    }
    os << '\n';
  }
}

}  // namespace idmpc

#endif  // IDMPC__ANALYSIS_HPP_
