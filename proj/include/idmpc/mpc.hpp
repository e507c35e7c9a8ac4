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

#ifndef IDMPC__MPC_HPP_
#define IDMPC__MPC_HPP_

/**
 * @file
 * @brief Tracking MPC with artificial steady states on an affine prediction model.
 *
 * At each solve the problem
 * \f[
 *   \min \sum_{k=0}^{L-1} \left( \|\hat x_k - \hat x^s\|_Q^2 + \|\hat u_k - \hat u^s\|_R^2 \right) + \|\hat y^s - y^r\|_S^2
 * \f]
 * (offset term counted once, so that J* - \f$\hat J^*\f$ vanishes at the optimal reachable equilibrium)
 * subject to the model dynamics from \f$ \hat x_0 = x_t \f$, the terminal equality
 * \f$ \hat x_L = \hat x^s \f$, the steady-state relations of \f$ (\hat x^s, \hat u^s, \hat y^s) \f$ and
 * input constraints is condensed into a dense QP.
 */

#include <optional>
#include <vector>

#include "model.hpp"
#include "qp.hpp"

namespace idmpc {

/// Box on one predicted state component (k = 1..L-1) and on the same component of x^s.
struct StateBound
{
  Index index = 0;
  double lo    = 0;
  double hi    = 0;
  double ss_lo = 0;
  double ss_hi = 0;
};

struct MpcConfig
{
  Matrix Q;
  Matrix R;
  Matrix S;
  Index L = 41;
  Index N = 25;
  /// Inputs applied per solve; 0 selects the model state dimension.
  Index n_apply = 0;
  Vector u_lo, u_hi;
  Vector us_lo, us_hi;
  double lambda = 1e-12;
  Vector y_ref;
  std::vector<StateBound> state_box;
  double stop_threshold = 5e-6;
  QpOptions qp{};

  Index steps_per_solve(Index n) const { return n_apply > 0 ? n_apply : n; }

  /// Throws ConfigError if any invariant is violated for a system of size (n, m, p).
  void validate(Index n, Index m, Index p) const
  {
    auto pd = [](const Matrix & W, Index dim, const char * name) {
      if (W.rows() != dim || W.cols() != dim) {
        throw ConfigError(std::string("MpcConfig: ") + name + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
      }
      if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, W.cwiseAbs().maxCoeff())) {
        throw ConfigError(std::string("MpcConfig: ") + name + " must be symmetric");
      }
      Eigen::LLT<Matrix> llt(W);
      if (llt.info() != Eigen::Success) { throw ConfigError(std::string("MpcConfig: ") + name + " must be positive definite"); }
    };
    pd(Q, n, "Q");
    pd(R, m, "R");
    pd(S, p, "S");
    if (L < n) { throw ConfigError("MpcConfig: horizon L=" + std::to_string(L) + " must be at least n=" + std::to_string(n)); }
    if (N < n) { throw ConfigError("MpcConfig: window length N=" + std::to_string(N) + " must be at least n=" + std::to_string(n)); }
    if (steps_per_solve(n) < 1 || steps_per_solve(n) > L) { throw ConfigError("MpcConfig: n_apply must lie in [1, L]"); }
    if (u_lo.size() != m || u_hi.size() != m || us_lo.size() != m || us_hi.size() != m) {
      throw ConfigError("MpcConfig: input bounds must have size m=" + std::to_string(m));
    }
    for (Index j = 0; j < m; ++j) {
      if (!(u_lo[j] <= us_lo[j] && us_lo[j] <= us_hi[j] && us_hi[j] <= u_hi[j])) {
        throw ConfigError("MpcConfig: steady-state input set must lie inside the input set");
      }
    }
    if (y_ref.size() != p) { throw ConfigError("MpcConfig: y_ref must have size p=" + std::to_string(p)); }
    if (!(lambda >= 0.0)) { throw ConfigError("MpcConfig: lambda must be nonnegative"); }
    if (!(stop_threshold >= 0.0)) { throw ConfigError("MpcConfig: stop_threshold must be nonnegative"); }
    for (const auto & b : state_box) {
      if (b.index < 0 || b.index >= n) { throw ConfigError("MpcConfig: state_box index out of range"); }
      if (!(b.lo <= b.ss_lo && b.ss_lo <= b.ss_hi && b.ss_hi <= b.hi)) {
        throw ConfigError("MpcConfig: state_box steady-state range must lie inside its bounds");
      }
    }
  }
};

struct MpcSolution
{
  std::vector<Vector> x_pred;  ///< L + 1 predicted states, x_pred[0] = x_t
  std::vector<Vector> u_pred;  ///< L predicted inputs
  Vector x_s, u_s, y_s;
  double J_star = 0;
  QpStatus status = QpStatus::max_iter;
  int qp_iterations = 0;
  Vector z;  ///< raw decision vector [u_0..u_{L-1}, x_s, u_s]

  bool ok() const { return status == QpStatus::optimal; }

  /// Decision vector shifted by `shift` inputs, tail padded with u_s (warm start for the next solve).
  Vector shifted(Index shift) const
  {
    Vector w        = z;
    const Index L   = static_cast<Index>(u_pred.size());
    const Index m   = u_s.size();
    for (Index k = 0; k < L; ++k) {
      w.segment(k * m, m) = k + shift < L ? u_pred[static_cast<std::size_t>(k + shift)] : u_s;
    }
    return w;
  }
};

/**
 * @brief Steady state of the model for a given input: x_s = (I - A)^{-1} (B u_s + e).
 *
 * Throws SingularError when sigma_min(I - A) < tol.
 */
inline std::pair<Vector, Vector> steady_state_map(const AffineModel & mdl, const Vector & u_s, double tol = 1e-9)
{
  mdl.validate();
  if (u_s.size() != mdl.input_dim()) { throw DimensionError("steady_state_map: u_s has wrong size"); }
  const Matrix IA = Matrix::Identity(mdl.state_dim(), mdl.state_dim()) - mdl.A;
  const double smin = sigma_min(IA);
  if (smin < tol) { throw SingularError("steady_state_map: I - A is singular", smin); }
  const Vector x_s = IA.colPivHouseholderQr().solve(mdl.B * u_s + mdl.e);
  return {x_s, mdl.output(x_s, u_s)};
}

/**
 * @brief Condensed tracking QP plus the data needed to decode its solution.
 *
 * Decision vector z = [u_0, ..., u_{L-1}, x_s, u_s]. The optimal value of the MPC cost is
 * 1/2 z'Hz + g'z + constant.
 */
class TrackingQp
{
public:
  TrackingQp(const AffineModel & mdl, const Vector & x_t, const MpcConfig & cfg) : mdl_(mdl), x_t_(x_t), L_(cfg.L)
  {
    mdl.validate();
    const Index n = mdl.state_dim(), m = mdl.input_dim(), p = mdl.output_dim();
    if (x_t.size() != n) { throw DimensionError("build_tracking_qp: x_t has wrong size"); }
    cfg.validate(n, m, p);

    const Index L = cfg.L, d = L * m + n + m;
    const Index xs = L * m, us = L * m + n;
    auto sel = [d](Index offset, Index width) {
      Matrix E = Matrix::Zero(width, d);
      E.middleCols(offset, width).setIdentity();
      return E;
    };
    const Matrix Exs = sel(xs, n), Eus = sel(us, m);

    // affine rollout x_k = Px[k] z + px[k]
    std::vector<Matrix> Px(static_cast<std::size_t>(L + 1));
    std::vector<Vector> px(static_cast<std::size_t>(L + 1));
    Px[0] = Matrix::Zero(n, d);
    px[0] = x_t;
    for (Index k = 0; k < L; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      Px[kk + 1] = mdl.A * Px[kk];
      Px[kk + 1].middleCols(k * m, m) += mdl.B;
      px[kk + 1] = mdl.A * px[kk] + mdl.e;
    }

    Matrix Hh = Matrix::Zero(d, d);
    Vector gh = Vector::Zero(d);
    constant_ = 0;
    auto add_term = [&](const Matrix & M, const Vector & c, const Matrix & W) {
      const Matrix WM = W * M;
      Hh += M.transpose() * WM;
      gh += WM.transpose() * c;
      constant_ += c.dot(W * c);
    };
    for (Index k = 0; k < L; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      add_term(Px[kk] - Exs, px[kk], cfg.Q);
      add_term(sel(k * m, m) - Eus, Vector::Zero(m), cfg.R);
    }
    add_term(mdl.C * Exs + mdl.D * Eus, mdl.r - cfg.y_ref, cfg.S);

    qp_.H = Hh + Hh.transpose();
    qp_.g = 2.0 * gh;

    qp_.A_eq.resize(2 * n, d);
    qp_.b_eq.resize(2 * n);
    qp_.A_eq.topRows(n)    = Px[static_cast<std::size_t>(L)] - Exs;
    qp_.b_eq.head(n)       = -px[static_cast<std::size_t>(L)];
    qp_.A_eq.bottomRows(n) = (mdl.A - Matrix::Identity(n, n)) * Exs + mdl.B * Eus;
    qp_.b_eq.tail(n)       = -mdl.e;

    std::vector<std::pair<Vector, double>> rows;  // a' z <= b
    auto bound = [&](const Vector & a, double offset, double lo, double hi) {
      if (std::isfinite(hi)) { rows.emplace_back(a, hi - offset); }
      if (std::isfinite(lo)) { rows.emplace_back(-a, offset - lo); }
    };
    for (Index k = 0; k < L; ++k) {
      for (Index j = 0; j < m; ++j) { bound(sel(k * m + j, 1).row(0).transpose(), 0.0, cfg.u_lo[j], cfg.u_hi[j]); }
    }
    for (Index j = 0; j < m; ++j) { bound(Eus.row(j).transpose(), 0.0, cfg.us_lo[j], cfg.us_hi[j]); }
    for (const auto & b : cfg.state_box) {
      // x_L = x_s, so the terminal predicted state is covered by the steady-state bound
      for (Index k = 1; k < L; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        bound(Px[kk].row(b.index).transpose(), px[kk][b.index], b.lo, b.hi);
      }
      bound(Exs.row(b.index).transpose(), 0.0, b.ss_lo, b.ss_hi);
    }
    qp_.A_in.resize(static_cast<Index>(rows.size()), d);
    qp_.b_in.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      qp_.A_in.row(static_cast<Index>(i)) = rows[i].first.transpose();
      qp_.b_in[static_cast<Index>(i)]     = rows[i].second;
    }
  }

  const QpProblem & problem() const { return qp_; }
  double constant() const { return constant_; }

  /// MPC cost at decision vector z.
  double cost(const Vector & z) const { return qp_.objective(z) + constant_; }

  /// Map a QP solution back to predicted trajectories; states are recomputed by rollout.
  MpcSolution decode(const QpSolution & sol) const
  {
    const Index n = mdl_.state_dim(), m = mdl_.input_dim();
    MpcSolution out;
    out.status        = sol.status;
    out.qp_iterations = sol.iterations;
    out.z             = sol.z;
    out.x_pred.reserve(static_cast<std::size_t>(L_ + 1));
    out.x_pred.push_back(x_t_);
    for (Index k = 0; k < L_; ++k) {
      out.u_pred.push_back(sol.z.segment(k * m, m));
      out.x_pred.push_back(mdl_.next_state(out.x_pred.back(), out.u_pred.back()));
    }
    out.x_s    = sol.z.segment(L_ * m, n);
    out.u_s    = sol.z.segment(L_ * m + n, m);
    out.y_s    = mdl_.output(out.x_s, out.u_s);
    out.J_star = cost(sol.z);
    return out;
  }

private:
  AffineModel mdl_;
  Vector x_t_;
  Index L_;
  QpProblem qp_;
  double constant_ = 0;
};

inline TrackingQp build_tracking_qp(const AffineModel & mdl, const Vector & x_t, const MpcConfig & cfg)
{
  return TrackingQp(mdl, x_t, cfg);
}

/// Build, solve and decode the tracking MPC problem.
inline MpcSolution solve_tracking(const AffineModel & mdl, const Vector & x_t, const MpcConfig & cfg,
                                  const std::optional<Vector> & warm_start = std::nullopt)
{
  const TrackingQp tqp(mdl, x_t, cfg);
  ActiveSetSolver solver(cfg.qp);
  return tqp.decode(solver.solve(tqp.problem(), warm_start));
}

/// MPC cost evaluated directly on trajectories (no condensing).
inline double tracking_cost(const MpcSolution & sol, const MpcConfig & cfg)
{
  double J = 0;
  for (std::size_t k = 0; k < sol.u_pred.size(); ++k) {
    const Vector dx = sol.x_pred[k] - sol.x_s;
    const Vector du = sol.u_pred[k] - sol.u_s;
    J += dx.dot(cfg.Q * dx) + du.dot(cfg.R * du);
  }
  const Vector dy = sol.y_s - cfg.y_ref;
  return J + dy.dot(cfg.S * dy);
}

struct ReachableEquilibrium
{
  Vector y_sr, x_sr, u_sr;
  double J_hat_star = 0;
  QpStatus status   = QpStatus::max_iter;
};

/**
 * @brief Optimal reachable equilibrium of the model: minimize |y_s - y_ref|_S^2 over model steady
 * states with u_s in the steady-state input set (and the steady-state state bounds).
 */
inline ReachableEquilibrium optimal_reachable_cost(const AffineModel & mdl, const MpcConfig & cfg)
{
  mdl.validate();
  const Index n = mdl.state_dim(), m = mdl.input_dim(), p = mdl.output_dim();
  if (cfg.y_ref.size() != p || cfg.S.rows() != p || cfg.us_lo.size() != m || cfg.us_hi.size() != m) {
    throw DimensionError("optimal_reachable_cost: configuration does not match the model");
  }
  const Index d = n + m;

  Matrix M(p, d);  // y_s - y_ref = M w + c
  M << mdl.C, mdl.D;
  const Vector c = mdl.r - cfg.y_ref;

  QpProblem qp;
  qp.H = 2.0 * M.transpose() * cfg.S * M;
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  qp.g = 2.0 * M.transpose() * (cfg.S * c);
  qp.A_eq.resize(n, d);
  qp.A_eq << mdl.A - Matrix::Identity(n, n), mdl.B;
  qp.b_eq = -mdl.e;

  std::vector<std::pair<Vector, double>> rows;
  auto bound = [&](Index col, double lo, double hi) {
    Vector a = Vector::Zero(d);
    a[col]   = 1.0;
    rows.emplace_back(a, hi);
    rows.emplace_back(-a, -lo);
  };
  for (Index j = 0; j < m; ++j) { bound(n + j, cfg.us_lo[j], cfg.us_hi[j]); }
  for (const auto & b : cfg.state_box) { bound(b.index, b.ss_lo, b.ss_hi); }
  qp.A_in.resize(static_cast<Index>(rows.size()), d);
  qp.b_in.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    qp.A_in.row(static_cast<Index>(i)) = rows[i].first.transpose();
    qp.b_in[static_cast<Index>(i)]     = rows[i].second;
  }

  ActiveSetSolver solver(cfg.qp);
  QpSolution sol;
  try {
    sol = solver.solve(qp);
  } catch (const IndefiniteError &) {
    // steady-state manifold larger than the output space: pick the minimum-norm minimizer
    qp.H += 1e-10 * std::max(1.0, qp.H.cwiseAbs().maxCoeff()) * Matrix::Identity(d, d);
    sol = solver.solve(qp);
  }

  ReachableEquilibrium out;
  out.status     = sol.status;
  out.x_sr       = sol.z.head(n);
  out.u_sr       = sol.z.tail(m);
  out.y_sr       = mdl.output(out.x_sr, out.u_sr);
  const Vector dy = out.y_sr - cfg.y_ref;
  out.J_hat_star = dy.dot(cfg.S * dy);
  return out;
}

/// Lyapunov function candidate V = J*_MPC - J^*; reported raw, without sign clamping.
inline double lyapunov_candidate(double J_star, double J_hat_star) { return J_star - J_hat_star; }

}  // namespace idmpc

#endif  // IDMPC__MPC_HPP_
