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

// Shared helpers for the unit tests: seeded random instances for property-style checks.

#ifndef IDMPC_TESTS__TEST_UTIL_HPP_
#define IDMPC_TESTS__TEST_UTIL_HPP_

#include <random>

#include <idmpc/model.hpp>
#include <idmpc/qp.hpp>

namespace idmpc::test {

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Matrix matrix(Index r, Index c, double lo = -1.0, double hi = 1.0)
  {
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) { M(i, j) = uniform(lo, hi); }
    }
    return M;
  }

  Vector vector(Index n, double lo = -1.0, double hi = 1.0) { return matrix(n, 1, lo, hi); }

  /// Symmetric positive definite with eigenvalues at least min_eig.
  Matrix spd(Index n, double min_eig = 0.1)
  {
    const Matrix M = matrix(n, n);
    return M * M.transpose() + min_eig * Matrix::Identity(n, n);
  }

  AffineModel affine(Index n, Index m, Index p, double lo = -2.0, double hi = 2.0)
  {
    return {matrix(n, n, lo, hi), matrix(n, m, lo, hi), vector(n, lo, hi),
            matrix(p, n, lo, hi), matrix(p, m, lo, hi), vector(p, lo, hi)};
  }

  /// Strictly convex QP that is feasible by construction (a random point satisfies all rows).
  QpProblem qp(Index d, Index ke, Index ki)
  {
    const Vector zf = vector(d);
    QpProblem p;
    p.H    = spd(d);
    p.g    = vector(d, -3.0, 3.0);
    p.A_eq = matrix(ke, d);
    p.b_eq = p.A_eq * zf;
    p.A_in = matrix(ki, d);
    p.b_in = p.A_in * zf + vector(ki, 0.0, 1.0);
    return p;
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace idmpc::test

#endif  // IDMPC_TESTS__TEST_UTIL_HPP_
