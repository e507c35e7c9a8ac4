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

#ifndef IDMPC__MODEL_HPP_
#define IDMPC__MODEL_HPP_

/**
 * @file
 * @brief Linear-algebra aliases and the affine model shared by identification and control.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "errors.hpp"

namespace idmpc {

using Index  = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * @brief Local affine model
 *
 *   x+ = A x + B u + e,
 *   y  = C x + D u + r.
 *
 * Produced either by least-squares identification from data or by linearizing a plant.
 */
struct AffineModel
{
  Matrix A;
  Matrix B;
  Vector e;
  Matrix C;
  Matrix D;
  Vector r;

  Index state_dim() const { return A.rows(); }
  Index input_dim() const { return B.cols(); }
  Index output_dim() const { return C.rows(); }

  Vector next_state(const Vector & x, const Vector & u) const { return A * x + B * u + e; }
  Vector output(const Vector & x, const Vector & u) const { return C * x + D * u + r; }

  /// Throws DimensionError if the blocks do not describe one (n, m, p) system.
  void validate() const
  {
    const Index n = A.rows(), m = B.cols(), p = C.rows();
    if (A.cols() != n || B.rows() != n || e.size() != n || C.cols() != n || D.rows() != p
        || D.cols() != m || r.size() != p) {
      throw DimensionError("AffineModel: inconsistent block dimensions");
    }
    if (!A.allFinite() || !B.allFinite() || !e.allFinite() || !C.allFinite() || !D.allFinite()
        || !r.allFinite()) {
      throw DimensionError("AffineModel: non-finite coefficient");
    }
  }

  /// Largest absolute coefficient difference over all six blocks.
  double max_abs_diff(const AffineModel & o) const
  {
    double d = 0;
    d = std::max(d, (A - o.A).cwiseAbs().maxCoeff());
    d = std::max(d, (B - o.B).cwiseAbs().maxCoeff());
    d = std::max(d, (e - o.e).cwiseAbs().maxCoeff());
    d = std::max(d, (C - o.C).cwiseAbs().maxCoeff());
    if (D.size() > 0) { d = std::max(d, (D - o.D).cwiseAbs().maxCoeff()); }
    d = std::max(d, (r - o.r).cwiseAbs().maxCoeff());
    return d;
  }
};

/// Smallest singular value of a (possibly rectangular) matrix, 0 for empty input.
inline double sigma_min(const Matrix & M)
{
  if (M.size() == 0) { return 0.0; }
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues().minCoeff();
}

/// Largest singular value, 0 for empty input.
inline double sigma_max(const Matrix & M)
{
  if (M.size() == 0) { return 0.0; }
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues().maxCoeff();
}

}  // namespace idmpc

#endif  // IDMPC__MODEL_HPP_
