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

#include <gtest/gtest.h>

#include <idmpc/qp.hpp>

#include "test_util.hpp"

using namespace idmpc;

namespace {

Matrix mat(Index r, Index c, std::initializer_list<double> v)
{
  Matrix M(r, c);
  auto it = v.begin();
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) { M(i, j) = *it++; }
  }
  return M;
}

Vector vec(std::initializer_list<double> v) { return mat(static_cast<Index>(v.size()), 1, v); }

/// Null-space solve with an SVD basis, independent of the QR route used by the library.
Vector svd_nullspace_oracle(const Matrix & H, const Vector & g, const Matrix & A, const Vector & b)
{
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index k = A.rows(), d = A.cols();
  const Matrix V = svd.matrixV();
  const Vector zp = svd.solve(b);
  const Matrix N  = V.rightCols(d - k);
  const Vector w  = (N.transpose() * H * N).ldlt().solve(-N.transpose() * (H * zp + g));
  return zp + N * w;
}

void expect_kkt(const QpProblem & p, const QpSolution & s, double tol)
{
  ASSERT_EQ(s.status, QpStatus::optimal);
  const auto r = kkt_residuals(p, s.z, s.nu, s.mu);
  EXPECT_LE(r.stationarity, tol);
  EXPECT_LE(r.primal_eq, tol);
  EXPECT_LE(r.primal_in, tol);
  EXPECT_LE(r.complementarity, tol);
  EXPECT_LE(r.dual, tol);
}

}  // namespace

TEST(SolveEqp, ForcedByConstraint)
{
  const auto s = solve_eqp(mat(1, 1, {1}), vec({0}), mat(1, 1, {1}), vec({3}));
  EXPECT_NEAR(s.z[0], 3.0, 1e-14);
  EXPECT_NEAR(s.objective, 4.5, 1e-14);
}

TEST(SolveEqp, Symmetric)
{
  const auto s = solve_eqp(Matrix::Identity(2, 2), Vector::Zero(2), mat(1, 2, {1, 1}), vec({2}));
  EXPECT_NEAR(s.z[0], 1.0, 1e-14);
  EXPECT_NEAR(s.z[1], 1.0, 1e-14);
  EXPECT_NEAR(s.nu[0], -1.0, 1e-14);
}

TEST(SolveEqp, MatchesNullSpaceOracle)
{
  test::Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix H = rng.spd(5);
    const Vector g = rng.vector(5);
    const Matrix A = rng.matrix(2, 5);
    const Vector b = A * rng.vector(5);
    const auto s   = solve_eqp(H, g, A, b);
    EXPECT_LE((s.z - svd_nullspace_oracle(H, g, A, b)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(s.kkt.stationarity, 1e-10);
    EXPECT_LE(s.kkt.primal_eq, 1e-10);
  }
}

TEST(SolveEqp, Errors)
{
  // duplicate equality rows
  EXPECT_THROW(solve_eqp(Matrix::Identity(2, 2), Vector::Zero(2), mat(2, 2, {1, 1, 2, 2}), vec({1, 2})), SingularError);
  // concave on the null space
  EXPECT_THROW(solve_eqp(mat(2, 2, {-1, 0, 0, 1}), Vector::Zero(2), mat(1, 2, {0, 1}), vec({0})), IndefiniteError);
  // positive definite on the null space suffices
  EXPECT_NO_THROW(solve_eqp(mat(2, 2, {1, 0, 0, -1}), Vector::Zero(2), mat(1, 2, {0, 1}), vec({0})));
}

TEST(SolveQp, ClampedScalar)
{
  // (z - 2)^2 = z^2 - 4z + 4
  QpProblem p{mat(1, 1, {2}), vec({-4}), Matrix(0, 1), Vector(0), mat(2, 1, {1, -1}), vec({1, 0})};
  const auto s = solve_qp(p);
  EXPECT_NEAR(s.z[0], 1.0, 1e-12);
  expect_kkt(p, s, 1e-8);
  ASSERT_EQ(s.active_set.size(), 1u);
  EXPECT_EQ(s.active_set[0], 0);

  const auto bf = brute_force_qp(p);
  EXPECT_NEAR(bf.z[0], 1.0, 1e-12);
  ASSERT_EQ(bf.active_set.size(), 1u);
  EXPECT_EQ(bf.active_set[0], 0);
}

TEST(SolveQp, SeparableLowerBounds)
{
  QpProblem p{Matrix::Identity(2, 2), Vector::Zero(2), Matrix(0, 2), Vector(0), -Matrix::Identity(2, 2), vec({-1, -1})};
  const auto s = solve_qp(p);
  EXPECT_NEAR(s.z[0], 1.0, 1e-12);
  EXPECT_NEAR(s.z[1], 1.0, 1e-12);
  expect_kkt(p, s, 1e-8);
}

TEST(SolveQp, InfeasibleDetected)
{
  // z <= 0 and z >= 1
  QpProblem p{mat(1, 1, {1}), vec({0}), Matrix(0, 1), Vector(0), mat(2, 1, {1, -1}), vec({0, -1})};
  const auto s = solve_qp(p);
  EXPECT_EQ(s.status, QpStatus::infeasible);
  EXPECT_NEAR(s.infeasibility, 0.5, 1e-6);
  EXPECT_EQ(brute_force_qp(p).status, QpStatus::infeasible);
}

TEST(SolveQp, InfeasibleWithEqualities)
{
  // z1 + z2 = 3, z1 <= 1, z2 <= 1
  QpProblem p{Matrix::Identity(2, 2), Vector::Zero(2), mat(1, 2, {1, 1}), vec({3}), Matrix::Identity(2, 2), vec({1, 1})};
  EXPECT_EQ(solve_qp(p).status, QpStatus::infeasible);
}

TEST(SolveQp, MaxIterReported)
{
  test::Rng rng(43);
  const QpProblem p = rng.qp(4, 0, 6);
  const auto s      = solve_qp(p, 1e-8, 0);
  EXPECT_EQ(s.status, QpStatus::max_iter);
}

TEST(BruteForceQp, Unconstrained)
{
  test::Rng rng(47);
  const Matrix H = rng.spd(3);
  const Vector g = rng.vector(3);
  QpProblem p{H, g, Matrix(0, 3), Vector(0), Matrix(0, 3), Vector(0)};
  EXPECT_LE((brute_force_qp(p).z + H.ldlt().solve(g)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BruteForceQp, EqualityOnlyDelegates)
{
  test::Rng rng(53);
  const QpProblem p = rng.qp(4, 2, 0);
  EXPECT_LE((brute_force_qp(p).z - solve_eqp(p.H, p.g, p.A_eq, p.b_eq).z).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(brute_force_qp(rng.qp(9, 0, 1)), DimensionError);
}

TEST(SolveQp, AgreesWithBruteForce)
{
  test::Rng rng(59);
  for (int trial = 0; trial < 300; ++trial) {
    const Index d  = rng.integer(1, 4);
    const Index ke = rng.integer(0, std::min<int>(2, static_cast<int>(d) - 1));
    const Index ki = rng.integer(0, 6);
    const QpProblem p = rng.qp(d, ke, ki);
    const auto s  = solve_qp(p);
    const auto bf = brute_force_qp(p);
    ASSERT_EQ(bf.status, QpStatus::optimal);
    expect_kkt(p, s, 1e-8);
    EXPECT_NEAR(s.objective, bf.objective, 1e-7) << "trial " << trial;
  }
}

TEST(SolveQp, RemovingConstraintNeverIncreasesOptimum)
{
  test::Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const QpProblem p = rng.qp(4, 1, 6);
    const auto full   = solve_qp(p);
    ASSERT_EQ(full.status, QpStatus::optimal);
    for (Index drop = 0; drop < p.num_in(); ++drop) {
      QpProblem q = p;
      q.A_in.resize(p.num_in() - 1, p.dim());
      q.b_in.resize(p.num_in() - 1);
      for (Index i = 0, j = 0; i < p.num_in(); ++i) {
        if (i == drop) { continue; }
        q.A_in.row(j) = p.A_in.row(i);
        q.b_in[j++]   = p.b_in[i];
      }
      EXPECT_LE(solve_qp(q).objective, full.objective + 1e-9);
    }
  }
}

TEST(SolveQp, WarmStartGivesSameAnswer)
{
  test::Rng rng(67);
  for (int trial = 0; trial < 50; ++trial) {
    const QpProblem p = rng.qp(6, 2, 10);
    ActiveSetSolver solver;
    const auto cold = solver.solve(p);
    const auto warm = solver.solve(p, cold.z);
    const auto far  = solver.solve(p, Vector(Vector::Constant(6, 50.0)));
    ASSERT_EQ(cold.status, QpStatus::optimal);
    EXPECT_LE(warm.iterations, cold.iterations);
    EXPECT_NEAR(warm.objective, cold.objective, 1e-9);
    EXPECT_NEAR(far.objective, cold.objective, 1e-9);
  }
}

TEST(SolveQp, MultiScaleHessian)
{
  // Weights spanning several orders of magnitude, as produced by MPC condensing.
  test::Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    QpProblem p = rng.qp(4, 1, 6);
    const Vector s = (Vector(4) << 1e-2, 1.0, 1e2, 1e3).finished();
    p.H = s.asDiagonal() * p.H * s.asDiagonal();
    p.g = s.cwiseProduct(p.g);
    const auto a = solve_qp(p);
    const auto b = brute_force_qp(p);
    ASSERT_EQ(a.status, QpStatus::optimal);
    EXPECT_NEAR(a.objective, b.objective, 1e-7 * std::max(1.0, std::abs(b.objective)));
  }
}

TEST(QpProblem, Validation)
{
  QpProblem p{mat(2, 2, {1, 0.5, 0, 1}), Vector::Zero(2), Matrix(0, 2), Vector(0), Matrix(0, 2), Vector(0)};
  EXPECT_THROW(solve_qp(p), DimensionError);
  QpProblem q{Matrix::Identity(2, 2), Vector::Zero(3), Matrix(0, 2), Vector(0), Matrix(0, 2), Vector(0)};
  EXPECT_THROW(solve_qp(q), DimensionError);
}
