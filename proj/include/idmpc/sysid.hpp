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

#ifndef IDMPC__SYSID_HPP_
#define IDMPC__SYSID_HPP_

/**
 * @file
 * @brief Moving data window and regularized least-squares identification of affine models.
 */

#include <Eigen/QR>

#include <cmath>
#include <deque>

#include "model.hpp"

namespace idmpc {

/**
 * @brief The N most recent transitions of a plant.
 *
 * Holds states x_{t-N}..x_t, inputs u_{t-N}..u_{t-1} and outputs y_{t-N}..y_{t-1}, where t is
 * the absolute time of the newest state. Pushing a transition into a full window evicts the
 * oldest one.
 */
class DataWindow
{
public:
  DataWindow(Index length, Index n, Index m, Index p, long start_time = 0)
      : length_(length), n_(n), m_(m), p_(p), t_(start_time)
  {
    if (length < 1 || n < 1 || m < 1 || p < 1) { throw DimensionError("DataWindow: dimensions must be positive"); }
  }

  /// Append the transition (x, u, y) -> x_next. x must equal the newest stored state.
  void push(const Vector & x, const Vector & u, const Vector & y, const Vector & x_next)
  {
    if (x.size() != n_ || x_next.size() != n_ || u.size() != m_ || y.size() != p_) {
      throw DimensionError("DataWindow::push: sample has wrong dimensions");
    }
    if (states_.empty()) {
      states_.push_back(x);
    } else if ((x - states_.back()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + x.cwiseAbs().maxCoeff())) {
      throw DimensionError("DataWindow::push: transition does not start at the newest state");
    }
    states_.push_back(x_next);
    inputs_.push_back(u);
    outputs_.push_back(y);
    ++t_;
    if (static_cast<Index>(inputs_.size()) > length_) {
      states_.pop_front();
      inputs_.pop_front();
      outputs_.pop_front();
    }
  }

  Index length() const { return length_; }
  Index size() const { return static_cast<Index>(inputs_.size()); }
  bool full() const { return size() == length_; }
  long time() const { return t_; }

  Index state_dim() const { return n_; }
  Index input_dim() const { return m_; }
  Index output_dim() const { return p_; }

  const std::deque<Vector> & states() const { return states_; }
  const std::deque<Vector> & inputs() const { return inputs_; }
  const std::deque<Vector> & outputs() const { return outputs_; }

  /// [x_{t-N}, ..., x_{t-1}]
  Matrix X() const { return stack(states_, n_, 0, size()); }
  /// [x_{t-N+1}, ..., x_t]
  Matrix X_plus() const { return stack(states_, n_, 1, size()); }
  /// [u_{t-N}, ..., u_{t-1}]
  Matrix U() const { return stack(inputs_, m_, 0, size()); }
  /// [y_{t-N}, ..., y_{t-1}]
  Matrix Y() const { return stack(outputs_, p_, 0, size()); }

  /// Regressor [X; U; 1^T], column k is [x_{t-N+k}; u_{t-N+k}; 1].
  Matrix Z() const
  {
    Matrix z(n_ + m_ + 1, size());
    z.topRows(n_)         = X();
    z.middleRows(n_, m_)  = U();
    z.bottomRows(1).setOnes();
    return z;
  }

private:
  static Matrix stack(const std::deque<Vector> & v, Index rows, std::size_t first, Index cols)
  {
    Matrix out(rows, cols);
    for (Index k = 0; k < cols; ++k) { out.col(k) = v[first + static_cast<std::size_t>(k)]; }
    return out;
  }

  Index length_, n_, m_, p_;
  long t_;
  std::deque<Vector> states_;
  std::deque<Vector> inputs_;
  std::deque<Vector> outputs_;
};

/// Default regularization of the identification.
inline constexpr double kDefaultRegularization = 1e-12;

/**
 * @brief Regularized least-squares affine model from a full data window.
 *
 * Computes
 *
 *   [A B e] = X+ Z^T (Z Z^T + lambda I)^{-1},   [C D r] = Y Z^T (Z Z^T + lambda I)^{-1}
 *
 * through a Householder QR of the stacked matrix [Z^T; sqrt(lambda) I], whose R factor satisfies
 * R^T R = Z Z^T + lambda I, so the Gram matrix is never formed explicitly.
 *
 * With lambda == 0 the regressor must have full row rank: SingularError is thrown if
 * sigma_min(Z Z^T) < 1e-14 sigma_max(Z Z^T).
 */
inline AffineModel identify(const DataWindow & window, double lambda = kDefaultRegularization)
{
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) { throw DimensionError("identify: lambda must be finite and nonnegative"); }
  if (!window.full()) { throw DimensionError("identify: data window is not full"); }

  const Index n = window.state_dim(), m = window.input_dim(), p = window.output_dim();
  const Index K = n + m + 1, N = window.size();
  const Matrix Z = window.Z();

  if (lambda == 0.0) {
    if (N < K) { throw SingularError("identify: fewer samples than regressors", 0.0); }
    Eigen::JacobiSVD<Matrix> svd(Z);
    const double smax = svd.singularValues().maxCoeff();
    const double smin = svd.singularValues().minCoeff();
    if (smin * smin < 1e-14 * smax * smax) { throw SingularError("identify: Z Z^T is singular", smin * smin); }
  }

  Matrix lhs = Matrix::Zero(N + K, K);
  lhs.topRows(N) = Z.transpose();
  lhs.bottomRows(K).diagonal().setConstant(std::sqrt(lambda));

  Matrix rhs = Matrix::Zero(N + K, n + p);
  rhs.topLeftCorner(N, n)  = window.X_plus().transpose();
  rhs.topRightCorner(N, p) = window.Y().transpose();

  const Matrix theta = lhs.householderQr().solve(rhs).transpose();  // (n + p) x K

  AffineModel mdl;
  mdl.A = theta.block(0, 0, n, n);
  mdl.B = theta.block(0, n, n, m);
  mdl.e = theta.block(0, n + m, n, 1);
  mdl.C = theta.block(n, 0, p, n);
  mdl.D = theta.block(n, n, p, m);
  mdl.r = theta.block(n, n + m, p, 1);
  mdl.validate();
  return mdl;
}

/// Persistence-of-excitation measure sigma_min(Z) of a full window.
inline double pe_metric(const DataWindow & window)
{
  if (!window.full()) { throw DimensionError("pe_metric: data window is not full"); }
  const Matrix Z = window.Z();
  if (Z.cols() < Z.rows()) { return 0.0; }
  return sigma_min(Z);
}

struct AssumptionThresholds
{
  double steady_state    = 1e-6;  ///< sigma_s
  double controllability = 1e-6;
  double nonsingular     = 1e-6;  ///< sigma_l
};

/// Singular-value diagnostics of an identified model and pass/fail against thresholds.
struct AssumptionReport
{
  /// sigma_min([A - I, B; C, D]), zero when the matrix cannot have full column rank.
  double steady_state_sigma = 0;
  /// sigma_min([B, AB, ..., A^{n-1} B]).
  double controllability_sigma = 0;
  /// sigma_min(I - A).
  double nonsingular_sigma = 0;

  bool steady_state_ok    = false;
  bool controllability_ok = false;
  bool nonsingular_ok     = false;
};

inline AssumptionReport assumption_report(const AffineModel & mdl, const AssumptionThresholds & thr = {})
{
  mdl.validate();
  const Index n = mdl.state_dim(), m = mdl.input_dim(), p = mdl.output_dim();
  const Matrix I = Matrix::Identity(n, n);

  Matrix ss(n + p, n + m);
  ss << mdl.A - I, mdl.B, mdl.C, mdl.D;

  Matrix ctrb(n, n * m);
  Matrix blk = mdl.B;
  for (Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = blk;
    blk = mdl.A * blk;
  }

  AssumptionReport rep;
  rep.steady_state_sigma    = ss.rows() >= ss.cols() ? sigma_min(ss) : 0.0;
  rep.controllability_sigma = sigma_min(ctrb);
  rep.nonsingular_sigma     = sigma_min(I - mdl.A);
  rep.steady_state_ok       = rep.steady_state_sigma >= thr.steady_state;
  rep.controllability_ok    = rep.controllability_sigma >= thr.controllability;
  rep.nonsingular_ok        = rep.nonsingular_sigma >= thr.nonsingular;
  return rep;
}

}  // namespace idmpc

#endif  // IDMPC__SYSID_HPP_
