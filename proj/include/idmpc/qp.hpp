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

#ifndef IDMPC__QP_HPP_
#define IDMPC__QP_HPP_

/**
 * @file
 * @brief Dense convex quadratic programming.
 *
 * Problems have the form
 * \f[
 *   \min_z \tfrac{1}{2} z^T H z + g^T z \quad \text{s.t.} \quad A_{eq} z = b_{eq}, \; A_{in} z \leq b_{in}.
 * \f]
 * The Lagrangian convention is \f$ L = f(z) + \nu^T (A_{eq} z - b_{eq}) + \mu^T (A_{in} z - b_{in}) \f$
 * with \f$ \mu \geq 0 \f$, so stationarity reads \f$ Hz + g + A_{eq}^T \nu + A_{in}^T \mu = 0 \f$.
 */

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"

namespace idmpc {

struct QpProblem
{
  Matrix H;
  Vector g;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;

  Index dim() const { return H.rows(); }
  Index num_eq() const { return A_eq.rows(); }
  Index num_in() const { return A_in.rows(); }

  double objective(const Vector & z) const { return 0.5 * z.dot(H * z) + g.dot(z); }

  /// Throws DimensionError on inconsistent sizes or an asymmetric Hessian.
  void validate() const
  {
    const Index d = H.rows();
    if (H.cols() != d || g.size() != d) { throw DimensionError("QpProblem: H must be d x d and g of size d"); }
    if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != d)) {
      throw DimensionError("QpProblem: equality block has inconsistent dimensions");
    }
    if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != d)) {
      throw DimensionError("QpProblem: inequality block has inconsistent dimensions");
    }
    if (A_eq.rows() > d) { throw DimensionError("QpProblem: more equality constraints than variables"); }
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if (d > 0 && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw DimensionError("QpProblem: H is not symmetric");
    }
  }
};

enum class QpStatus { optimal, infeasible, max_iter };

inline const char * to_string(QpStatus s)
{
  switch (s) {
  case QpStatus::optimal: return "optimal";
  case QpStatus::infeasible: return "infeasible";
  case QpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

struct KktResiduals
{
  double stationarity    = 0;  ///< |Hz + g + A_eq^T nu + A_in^T mu|_inf
  double primal_eq       = 0;  ///< |A_eq z - b_eq|_inf
  double primal_in       = 0;  ///< max(0, max(A_in z - b_in))
  double complementarity = 0;  ///< sum |mu_i (b_in - A_in z)_i|
  double dual            = 0;  ///< max(0, -min mu)

  double max() const { return std::max({stationarity, primal_eq, primal_in, complementarity, dual}); }
};

struct QpSolution
{
  Vector z;
  Vector nu;
  Vector mu;
  double objective = std::numeric_limits<double>::quiet_NaN();
  KktResiduals kkt{};
  QpStatus status = QpStatus::max_iter;
  int iterations  = 0;
  /// Inequality rows held active at the returned point.
  std::vector<Index> active_set;
  /// For infeasible problems: smallest achievable max constraint violation found by phase 1.
  double infeasibility = 0;
};

/// Evaluate KKT residuals of (z, nu, mu) for problem p.
inline KktResiduals kkt_residuals(const QpProblem & p, const Vector & z, const Vector & nu, const Vector & mu)
{
  KktResiduals r;
  Vector stat = p.H * z + p.g;
  if (p.num_eq() > 0) {
    stat += p.A_eq.transpose() * nu;
    r.primal_eq = (p.A_eq * z - p.b_eq).cwiseAbs().maxCoeff();
  }
  if (p.num_in() > 0) {
    stat += p.A_in.transpose() * mu;
    const Vector slack = p.b_in - p.A_in * z;
    r.primal_in        = std::max(0.0, -slack.minCoeff());
    r.complementarity  = mu.cwiseProduct(slack).cwiseAbs().sum();
    r.dual             = std::max(0.0, -mu.minCoeff());
  }
  r.stationarity = stat.size() > 0 ? stat.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

namespace detail {

inline double rhs_scale(const QpProblem & p)
{
  double s = 1.0;
  if (p.b_eq.size() > 0) { s = std::max(s, p.b_eq.cwiseAbs().maxCoeff()); }
  if (p.b_in.size() > 0) {
    const Vector fin = p.b_in.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
    s = std::max(s, fin.cwiseAbs().maxCoeff());
  }
  return s;
}

struct EqpResult
{
  Vector z;
  Vector lambda;
};

/**
 * Null-space solve of min 1/2 z'Hz + g'z s.t. Az = b. The null space basis comes from a
 * column-pivoted QR of A^T, so rank deficiency of A is detected rather than silently absorbed.
 */
inline EqpResult eqp_nullspace(const Matrix & H, const Vector & g, const Matrix & A, const Vector & b)
{
  const Index d = H.rows(), k = A.rows();
  EqpResult res;

  if (k == 0) {
    Eigen::LLT<Matrix> llt(H);
    if (d > 0 && (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0)) {
      throw IndefiniteError("solve_eqp: Hessian is not positive definite");
    }
    res.z = d > 0 ? Vector(llt.solve(-g)) : Vector();
    res.lambda.resize(0);
    return res;
  }
  if (k > d) { throw SingularError("solve_eqp: more equality rows than variables", 0.0); }

  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  const Matrix R_full = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const double r0 = std::abs(R_full(0, 0));
  const double rk = std::abs(R_full(k - 1, k - 1));
  if (r0 == 0.0 || rk <= 1e-12 * r0) { throw SingularError("solve_eqp: equality constraints are rank deficient", rk); }

  const Matrix Q  = qr.householderQ();
  const auto Q1   = Q.leftCols(k);
  const Matrix Zn = Q.rightCols(d - k);
  const auto R    = R_full.template triangularView<Eigen::Upper>();
  const auto & P  = qr.colsPermutation();

  // A = P R^T Q1^T  =>  A (Q1 y) = b  <=>  R^T y = P^T b
  const Vector y  = R.transpose().solve(Vector(P.transpose() * b));
  Vector z        = Q1 * y;

  if (d > k) {
    const Matrix Hr = Zn.transpose() * H * Zn;
    Eigen::LLT<Matrix> llt(Hr);
    const double hscale = std::max(Hr.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if (llt.info() != Eigen::Success) { throw IndefiniteError("solve_eqp: reduced Hessian is not positive definite"); }
    const Vector ldiag = llt.matrixL().toDenseMatrix().diagonal();
    if (ldiag.minCoeff() * ldiag.minCoeff() <= 1e-14 * hscale) {
      throw IndefiniteError("solve_eqp: reduced Hessian is singular");
    }
    const Vector w = llt.solve(-(Zn.transpose() * (H * z + g)));
    z += Zn * w;
  }

  // A^T lambda = -(Hz + g)  <=>  R (P^T lambda) = -Q1^T (Hz + g)
  const Vector rhs = -(Q1.transpose() * (H * z + g));
  res.lambda       = P * Vector(R.solve(rhs));
  res.z            = std::move(z);
  return res;
}

}  // namespace detail

/**
 * @brief Solve an equality-constrained QP through its KKT conditions.
 *
 * Requires A_eq to have full row rank (SingularError otherwise) and H to be positive definite on
 * the null space of A_eq (IndefiniteError otherwise).
 */
inline QpSolution solve_eqp(const Matrix & H, const Vector & g, const Matrix & A_eq, const Vector & b_eq)
{
  QpProblem p{H, g, A_eq, b_eq, Matrix(0, H.rows()), Vector(0)};
  p.validate();
  auto [z, nu] = detail::eqp_nullspace(H, g, A_eq, b_eq);
  QpSolution sol;
  sol.z          = std::move(z);
  sol.nu         = std::move(nu);
  sol.mu         = Vector(0);
  sol.objective  = p.objective(sol.z);
  sol.kkt        = kkt_residuals(p, sol.z, sol.nu, sol.mu);
  sol.status     = QpStatus::optimal;
  sol.iterations = 1;
  return sol;
}

struct QpOptions
{
  /// KKT tolerance, relative to max(1, problem data magnitude).
  double tol = 1e-8;
  int max_iter = 1000;
  /// Ruiz equilibration of H before iterating.
  bool equilibrate = true;
  /// Consecutive degenerate steps after which the leaving constraint is chosen by smallest index.
  int bland_after = 5;
};

/**
 * @brief Dense primal active-set solver.
 *
 * Holds a workspace and is therefore not thread safe; use one instance per thread. Equalities
 * are always in the working set and are satisfied to rounding at the returned point, which is
 * recomputed from the final working set in the original (unscaled) coordinates.
 *
 * A feasible starting point is obtained from the warm start (or the origin) by projecting onto
 * the equality constraints; if that point violates inequalities, a phase-1 problem minimizing a
 * single slack on the violated rows is solved first.
 */
class ActiveSetSolver
{
public:
  explicit ActiveSetSolver(QpOptions opts = {}) : opts_(opts) {}

  const QpOptions & options() const { return opts_; }

  QpSolution solve(const QpProblem & prob, const std::optional<Vector> & warm_start = std::nullopt)
  {
    prob.validate();
    const Index d = prob.dim(), ke = prob.num_eq(), ki = prob.num_in();
    if (warm_start && warm_start->size() != d) { throw DimensionError("ActiveSetSolver: warm start has wrong size"); }

    scale(prob);

    QpSolution sol;
    sol.mu = Vector::Zero(ki);
    sol.nu = Vector::Zero(ke);

    Vector z0 = warm_start ? Vector(col_scale_.cwiseInverse().cwiseProduct(*warm_start)) : Vector(Vector::Zero(d));
    if (ke > 0) {
      // minimum-distance projection onto the equality constraints
      auto [zp, unused] = detail::eqp_nullspace(Matrix::Identity(d, d), -z0, Aeq_, beq_);
      z0 = zp;
    }

    std::vector<Index> work;
    int iters = 0;
    const double viol = ki > 0 ? (Ain_ * z0 - bin_).maxCoeff() : 0.0;
    if (viol > 1e-12 * detail::rhs_scale(prob)) {
      auto [z1, w1, ok, it1, resid] = phase_one(z0, viol);
      iters += it1;
      if (!ok) {
        sol.z             = col_scale_.cwiseProduct(z1);
        sol.status        = QpStatus::infeasible;
        sol.iterations    = iters;
        sol.objective     = prob.objective(sol.z);
        sol.infeasibility = ki > 0 ? std::max(0.0, (prob.A_in * sol.z - prob.b_in).maxCoeff()) : 0.0;
        sol.kkt           = kkt_residuals(prob, sol.z, sol.nu, sol.mu);
        return sol;
      }
      z0   = z1;
      work = w1;
    }

    if (work.empty()) { work = active_rows(z0); }

    auto [zs, ws, converged, it2] = phase_two(H_, g_, Aeq_, beq_, Ain_, bin_, z0, work, opts_.max_iter - iters);
    iters += it2;

    sol.z          = col_scale_.cwiseProduct(zs);
    sol.active_set = ws;
    std::sort(sol.active_set.begin(), sol.active_set.end());
    polish(prob, sol);
    sol.iterations = iters;
    sol.objective  = prob.objective(sol.z);
    sol.kkt        = kkt_residuals(prob, sol.z, sol.nu, sol.mu);

    const double data_scale = std::max({1.0, prob.H.cwiseAbs().maxCoeff(), prob.g.size() ? prob.g.cwiseAbs().maxCoeff() : 0.0});
    const bool kkt_ok       = sol.kkt.stationarity <= opts_.tol * data_scale && sol.kkt.primal_eq <= opts_.tol * detail::rhs_scale(prob)
                        && sol.kkt.primal_in <= opts_.tol * detail::rhs_scale(prob) && sol.kkt.dual <= opts_.tol * data_scale
                        && sol.kkt.complementarity <= opts_.tol * data_scale * detail::rhs_scale(prob);
    sol.status = converged && kkt_ok ? QpStatus::optimal : QpStatus::max_iter;
    return sol;
  }

private:
  struct PhaseTwoResult
  {
    Vector z;
    std::vector<Index> work;
    bool converged;
    int iterations;
  };

  struct PhaseOneResult
  {
    Vector z;
    std::vector<Index> work;
    bool feasible;
    int iterations;
    double slack;
  };

  /// Ruiz equilibration of H, unit-norm constraint rows and cost normalization.
  void scale(const QpProblem & p)
  {
    const Index d = p.dim();
    col_scale_ = Vector::Ones(d);
    if (opts_.equilibrate && d > 0) {
      for (int it = 0; it < 20; ++it) {
        const Matrix Hs = col_scale_.asDiagonal() * p.H * col_scale_.asDiagonal();
        bool done       = true;
        for (Index i = 0; i < d; ++i) {
          const double rmax = Hs.row(i).cwiseAbs().maxCoeff();
          if (rmax > 0 && std::abs(rmax - 1.0) > 1e-3) {
            col_scale_[i] /= std::sqrt(rmax);
            done = false;
          }
        }
        if (done) { break; }
      }
    }
    H_ = col_scale_.asDiagonal() * p.H * col_scale_.asDiagonal();
    g_ = col_scale_.cwiseProduct(p.g);
    const double c = 1.0 / std::max({1.0, H_.size() ? H_.cwiseAbs().maxCoeff() : 0.0, g_.size() ? g_.cwiseAbs().maxCoeff() : 0.0});
    H_ *= c;
    g_ *= c;

    auto rows = [&](const Matrix & A, const Vector & b, Matrix & As, Vector & bs) {
      As = A * col_scale_.asDiagonal();
      bs = b;
      for (Index i = 0; i < As.rows(); ++i) {
        const double nrm = As.row(i).norm();
        if (nrm > 0) {
          As.row(i) /= nrm;
          bs[i] /= nrm;
        }
      }
    };
    rows(p.A_eq, p.b_eq, Aeq_, beq_);
    rows(p.A_in, p.b_in, Ain_, bin_);
  }

  static Matrix gather(const Matrix & Aeq, const Matrix & Ain, const std::vector<Index> & work)
  {
    Matrix A(Aeq.rows() + static_cast<Index>(work.size()), Aeq.cols());
    A.topRows(Aeq.rows()) = Aeq;
    for (std::size_t j = 0; j < work.size(); ++j) { A.row(Aeq.rows() + static_cast<Index>(j)) = Ain.row(work[j]); }
    return A;
  }

  /// Linearly independent subset of the inequality rows active at z, in index order.
  std::vector<Index> active_rows(const Vector & z) const
  {
    std::vector<Index> work;
    const Index ke = Aeq_.rows(), d = H_.rows();
    for (Index i = 0; i < Ain_.rows() && ke + static_cast<Index>(work.size()) < d; ++i) {
      if (bin_[i] - Ain_.row(i).dot(z) > 1e-12 * (1.0 + std::abs(bin_[i]))) { continue; }
      work.push_back(i);
      Eigen::ColPivHouseholderQR<Matrix> qr(gather(Aeq_, Ain_, work).transpose());
      qr.setThreshold(1e-10);
      if (qr.rank() < ke + static_cast<Index>(work.size())) { work.pop_back(); }
    }
    return work;
  }

  /// Primal active-set iteration from a feasible z with a linearly independent working set.
  PhaseTwoResult phase_two(const Matrix & H, const Vector & g, const Matrix & Aeq, const Vector & beq,
                           const Matrix & Ain, const Vector & bin, Vector z, std::vector<Index> work,
                           int max_iter) const
  {
    (void)beq;
    const Index ki   = Ain.rows();
    const Index ke   = Aeq.rows();
    const double tol = opts_.tol;
    std::vector<char> in_work(static_cast<std::size_t>(ki), 0);
    for (Index i : work) { in_work[static_cast<std::size_t>(i)] = 1; }

    int degenerate = 0;
    for (int it = 0; it < max_iter; ++it) {
      const Matrix AW    = gather(Aeq, Ain, work);
      const Vector grad  = H * z + g;
      auto [p, lambda]   = detail::eqp_nullspace(H, grad, AW, Vector::Zero(AW.rows()));

      if (p.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + z.cwiseAbs().maxCoeff())) {
        // stationary on the working set: check the inequality multipliers
        std::size_t leave = work.size();
        double most_neg   = -0.1 * tol;
        for (std::size_t j = 0; j < work.size(); ++j) {
          const double mu = lambda[ke + static_cast<Index>(j)];
          if (mu < most_neg) {
            if (degenerate >= opts_.bland_after) {
              if (leave == work.size() || work[j] < work[leave]) { leave = j; }
            } else {
              most_neg = mu;
              leave    = j;
            }
          }
        }
        if (leave == work.size()) { return {z, work, true, it + 1}; }
        in_work[static_cast<std::size_t>(work[leave])] = 0;
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(leave));
        continue;
      }

      double alpha   = 1.0;
      Index blocking = -1;
      for (Index i = 0; i < ki; ++i) {
        if (in_work[static_cast<std::size_t>(i)]) { continue; }
        const double ap = Ain.row(i).dot(p);
        if (ap <= 1e-11 * p.norm()) { continue; }
        const double ratio = std::max(0.0, (bin[i] - Ain.row(i).dot(z)) / ap);
        if (ratio < alpha) {
          alpha    = ratio;
          blocking = i;
        }
      }
      z += alpha * p;
      if (blocking >= 0) {
        work.push_back(blocking);
        in_work[static_cast<std::size_t>(blocking)] = 1;
        degenerate = alpha == 0.0 ? degenerate + 1 : 0;
      } else {
        degenerate = 0;
      }
    }
    return {z, work, false, max_iter};
  }

  /**
   * min s + delta/2 (|z - z0|^2 + s^2)  s.t.  Aeq z = beq,  Ain z - s <= bin,  s >= 0,
   * started from the feasible point (z0, max violation).
   */
  PhaseOneResult phase_one(const Vector & z0, double viol) const
  {
    const Index d = H_.rows(), ke = Aeq_.rows(), ki = Ain_.rows();
    constexpr double delta = 1e-8;

    Matrix H1 = Matrix::Identity(d + 1, d + 1) * delta;
    Vector g1 = Vector::Zero(d + 1);
    g1.head(d) = -delta * z0;
    g1[d]      = 1.0;

    Matrix Aeq1 = Matrix::Zero(ke, d + 1);
    Aeq1.leftCols(d) = Aeq_;
    Matrix Ain1 = Matrix::Zero(ki + 1, d + 1);
    Ain1.topLeftCorner(ki, d) = Ain_;
    Ain1.block(0, d, ki, 1).setConstant(-1.0);
    Ain1(ki, d) = -1.0;
    Vector bin1(ki + 1);
    bin1 << bin_, 0.0;

    Vector start(d + 1);
    start << z0, viol;

    auto [z1, w1, conv, iters] = phase_two(H1, g1, Aeq1, beq_, Ain1, bin1, start, {}, opts_.max_iter);
    const double s = z1[d];
    std::vector<Index> work;
    for (Index i : w1) {
      if (i < ki) { work.push_back(i); }
    }
    const bool feasible = conv && s <= opts_.tol;
    // Rows that were held active with a positive slack are not active in the original problem.
    if (s != 0.0) { work.clear(); }
    return {z1.head(d), work, feasible, iters, s};
  }

  /// Re-solve the final working set in original coordinates.
  void polish(const QpProblem & p, QpSolution & sol) const
  {
    const Index ke = p.num_eq();
    const Matrix AW = gather(p.A_eq, p.A_in, sol.active_set);
    Vector bW(AW.rows());
    bW.head(ke) = p.b_eq;
    for (std::size_t j = 0; j < sol.active_set.size(); ++j) { bW[ke + static_cast<Index>(j)] = p.b_in[sol.active_set[j]]; }
    try {
      auto [z, lambda] = detail::eqp_nullspace(p.H, p.g, AW, bW);
      sol.z  = z;
      sol.nu = lambda.head(ke);
      sol.mu.setZero();
      for (std::size_t j = 0; j < sol.active_set.size(); ++j) { sol.mu[sol.active_set[j]] = lambda[ke + static_cast<Index>(j)]; }
    } catch (const Error &) {
      // keep the scaled iterate; residuals will report the quality
    }
  }

  QpOptions opts_;
  Vector col_scale_;
  Matrix H_, Aeq_, Ain_;
  Vector g_, beq_, bin_;
};

/// Convenience wrapper around ActiveSetSolver.
inline QpSolution solve_qp(const QpProblem & p, double tol = 1e-8, int max_iter = 1000)
{
  QpOptions opts;
  opts.tol      = tol;
  opts.max_iter = max_iter;
  return ActiveSetSolver(opts).solve(p);
}

/**
 * @brief Exhaustive active-set enumeration, intended as a test oracle.
 *
 * Solves the equality-constrained subproblem for every subset of inequality rows and returns the
 * primal and dual feasible candidate with the smallest objective. Limited to d <= 8, k_in <= 12.
 */
inline QpSolution brute_force_qp(const QpProblem & p, double tol = 1e-9)
{
  p.validate();
  const Index d = p.dim(), ke = p.num_eq(), ki = p.num_in();
  if (d > 8 || ki > 12) { throw DimensionError("brute_force_qp: problem too large for enumeration"); }

  QpSolution best;
  best.status    = QpStatus::infeasible;
  best.objective = std::numeric_limits<double>::infinity();
  const double feas_tol = tol * detail::rhs_scale(p);

  for (std::uint32_t mask = 0; mask < (1u << ki); ++mask) {
    std::vector<Index> subset;
    for (Index i = 0; i < ki; ++i) {
      if (mask & (1u << i)) { subset.push_back(i); }
    }
    if (ke + static_cast<Index>(subset.size()) > d) { continue; }
    Matrix A(ke + static_cast<Index>(subset.size()), d);
    Vector b(A.rows());
    A.topRows(ke) = p.A_eq;
    b.head(ke)    = p.b_eq;
    for (std::size_t j = 0; j < subset.size(); ++j) {
      A.row(ke + static_cast<Index>(j)) = p.A_in.row(subset[j]);
      b[ke + static_cast<Index>(j)]     = p.b_in[subset[j]];
    }
    detail::EqpResult r;
    try {
      r = detail::eqp_nullspace(p.H, p.g, A, b);
    } catch (const Error &) {
      continue;
    }
    if (ki > 0 && (p.A_in * r.z - p.b_in).maxCoeff() > feas_tol) { continue; }
    if (subset.size() > 0 && r.lambda.tail(static_cast<Index>(subset.size())).minCoeff() < -tol) { continue; }
    const double obj = p.objective(r.z);
    if (obj < best.objective) {
      best.z         = r.z;
      best.nu        = r.lambda.head(ke);
      best.mu        = Vector::Zero(ki);
      for (std::size_t j = 0; j < subset.size(); ++j) { best.mu[subset[j]] = r.lambda[ke + static_cast<Index>(j)]; }
      best.objective  = obj;
      best.active_set = subset;
      best.status     = QpStatus::optimal;
    }
  }
  if (best.status == QpStatus::optimal) { best.kkt = kkt_residuals(p, best.z, best.nu, best.mu); }
  best.iterations = static_cast<int>(1u << ki);
  return best;
}

}  // namespace idmpc

#endif  // IDMPC__QP_HPP_
