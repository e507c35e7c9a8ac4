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

#include <idmpc/plant.hpp>

#include "test_util.hpp"

using namespace idmpc;

namespace {

Vector vec(std::initializer_list<double> v)
{
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) { out[i++] = x; }
  return out;
}

// Values from tests/oracles/cstr_oracle.py (40-digit mpmath evaluation).
constexpr double kStdStep[2]     = {0.40023113256593166, 0.60320481143406834};
constexpr double kPrintedStep[2] = {0.39157783141482915, 0.60320481143406834};
constexpr double kStdFold10[2]   = {0.38691586994200066, 0.64553471776932064};
constexpr double kStdJac[2][3]   = {{0.97557783141482915, -0.080123158806504737, 0.0},
                                    {0.014422168585170853, 1.0677831588065047, -0.00511056}};
constexpr double kPrintedJac00   = 0.99;
constexpr double kPrintedJac01   = -0.20030789701626184;

AffineModel scalar_affine(double a, double b, double e)
{
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Vector::Constant(1, e),
          Matrix::Identity(1, 1),    Matrix::Zero(1, 1),        Vector::Zero(1)};
}

}  // namespace

TEST(CstrPlant, DefaultParameters)
{
  CstrParams p;
  EXPECT_EQ(p.Ts, 0.2);
  EXPECT_EQ(p.theta, 20.0);
  EXPECT_EQ(p.k_bar, 300.0);
  EXPECT_EQ(p.M, 5.0);
  EXPECT_EQ(p.x_f, 0.3947);
  EXPECT_EQ(p.x_c, 0.3816);
  EXPECT_EQ(p.alpha, 0.117);
}

TEST(CstrPlant, StepMatchesOracle)
{
  const Vector x = CstrPlant().step(vec({0.4, 0.6}), vec({0.1}));
  EXPECT_NEAR(x[0], kStdStep[0], 1e-12);
  EXPECT_NEAR(x[1], kStdStep[1], 1e-12);

  CstrParams printed;
  printed.form     = CstrForm::printed;
  const Vector xp = CstrPlant(printed).step(vec({0.4, 0.6}), vec({0.1}));
  EXPECT_NEAR(xp[0], kPrintedStep[0], 1e-12);
  EXPECT_NEAR(xp[1], kPrintedStep[1], 1e-12);
}

TEST(CstrPlant, LinearPartFixedPoint)
{
  for (CstrForm form : {CstrForm::standard, CstrForm::printed}) {
    CstrParams p;
    p.alpha = 0;
    p.k_bar = 0;
    p.form  = form;
    const Vector x = CstrPlant(p).step(vec({1.0, p.x_f}), vec({0.7}));
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], p.x_f);
  }
}

TEST(CstrPlant, CoolingVanishesAtCoolantTemperature)
{
  CstrPlant plant;
  const double xc = plant.params().x_c;
  const Vector a  = plant.step(vec({0.3, xc}), vec({0.1}));
  const Vector b  = plant.step(vec({0.3, xc}), vec({1.9}));
  EXPECT_EQ(a[1], b[1]);
}

TEST(CstrPlant, DomainError)
{
  CstrPlant plant;
  EXPECT_THROW(plant.step(vec({0.4, 0.0}), vec({0.1})), DomainError);
  EXPECT_THROW(plant.step(vec({0.4, -0.2}), vec({0.1})), DomainError);
  EXPECT_THROW(plant.step(vec({0.4}), vec({0.1})), DimensionError);
}

TEST(CstrPlant, LocallyLipschitzOnCompactBox)
{
  // Empirical Lipschitz constant from a coarse grid, then random perturbation checks.
  CstrPlant plant;
  test::Rng rng(3);
  double lip = 0;
  for (int k = 0; k < 200; ++k) {
    const Vector x = vec({rng.uniform(0.1, 0.9), rng.uniform(0.4, 0.9)});
    const Vector u = vec({rng.uniform(0.1, 2.0)});
    lip = std::max(lip, linearize(plant, x, u).A.norm() + linearize(plant, x, u).B.norm());
  }
  for (int k = 0; k < 500; ++k) {
    const Vector x  = vec({rng.uniform(0.1, 0.9), rng.uniform(0.4, 0.9)});
    const Vector u  = vec({rng.uniform(0.1, 2.0)});
    const Vector dx = rng.vector(2, -1e-3, 1e-3);
    const Vector du = rng.vector(1, -1e-3, 1e-3);
    const double lhs = (plant.step(x + dx, u + du) - plant.step(x, u)).norm();
    EXPECT_LE(lhs, 1.1 * lip * std::sqrt(dx.squaredNorm() + du.squaredNorm()));
  }
}

TEST(Simulate, IdentityPlant)
{
  AffinePlant plant({Matrix::Identity(2, 2), Matrix::Zero(2, 1), Vector::Zero(2), Matrix::Identity(2, 2),
                     Matrix::Zero(2, 1), Vector::Zero(2)});
  const Vector x0 = vec({1.5, -2.0});
  const auto traj = simulate(plant, x0, {Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)});
  ASSERT_EQ(traj.states.size(), 4u);
  ASSERT_EQ(traj.outputs.size(), 3u);
  for (const auto & x : traj.states) { EXPECT_EQ(x, x0); }
}

TEST(Simulate, LengthContract)
{
  const auto traj = simulate(CstrPlant(), vec({0.4, 0.6}), {vec({0.1})});
  EXPECT_EQ(traj.states.size(), 2u);
  EXPECT_EQ(traj.outputs.size(), 1u);
  EXPECT_THROW(simulate(CstrPlant(), vec({0.4, 0.6}), {}), DimensionError);
}

TEST(Simulate, CstrFoldMatchesOracle)
{
  const std::vector<Vector> inputs(10, vec({0.1}));
  const auto traj = simulate(CstrPlant(), vec({0.4, 0.6}), inputs);
  EXPECT_NEAR(traj.states.back()[0], kStdFold10[0], 1e-12);
  EXPECT_NEAR(traj.states.back()[1], kStdFold10[1], 1e-12);
  EXPECT_NEAR(traj.outputs.front()[0], 0.6, 0.0);
}

TEST(Simulate, DomainErrorCarriesTimeIndex)
{
  // Strong cooling drives x2 through zero after a few steps.
  CstrParams p;
  p.alpha = 50.0;
  const std::vector<Vector> inputs(20, vec({2.0}));
  try {
    simulate(CstrPlant(p), vec({0.4, 0.6}), inputs);
    FAIL() << "expected a domain error";
  } catch (const DomainError & err) {
    EXPECT_GT(err.time_index(), 0);
  }
}

TEST(Linearize, AffinePlantIsItsOwnLinearization)
{
  AffinePlant plant(scalar_affine(2.0, 3.0, 1.0));
  const AffineModel lin = linearize(plant, vec({0.7}), vec({-0.3}));
  EXPECT_NEAR(lin.A(0, 0), 2.0, 1e-8);
  EXPECT_NEAR(lin.B(0, 0), 3.0, 1e-8);
  EXPECT_NEAR(lin.e[0], 1.0, 1e-8);
  EXPECT_NEAR(lin.C(0, 0), 1.0, 1e-8);
  EXPECT_NEAR(lin.D(0, 0), 0.0, 1e-8);
  EXPECT_NEAR(lin.r[0], 0.0, 1e-8);
}

TEST(Linearize, CstrJacobianMatchesOracle)
{
  const AugmentedPlant aug(std::make_shared<CstrPlant>());
  const AffineModel lin = linearize(CstrPlant(), vec({0.4, 0.6}), vec({0.1}));
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(lin.A(i, 0), kStdJac[i][0], 1e-6);
    EXPECT_NEAR(lin.A(i, 1), kStdJac[i][1], 1e-6);
    EXPECT_NEAR(lin.B(i, 0), kStdJac[i][2], 1e-6);
  }
  // output is x2
  EXPECT_NEAR(lin.C(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(lin.C(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(lin.D(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(lin.r[0], 0.0, 1e-9);
  // offsets reproduce f at the linearization point
  EXPECT_LE((lin.next_state(vec({0.4, 0.6}), vec({0.1})) - CstrPlant().step(vec({0.4, 0.6}), vec({0.1}))).norm(), 1e-14);

  CstrParams printed;
  printed.form       = CstrForm::printed;
  const auto lin_pr = linearize(CstrPlant(printed), vec({0.4, 0.6}), vec({0.1}));
  EXPECT_NEAR(lin_pr.A(0, 0), kPrintedJac00, 1e-6);
  EXPECT_NEAR(lin_pr.A(0, 1), kPrintedJac01, 1e-6);
}

TEST(Linearize, AugmentedCstrStructure)
{
  const AugmentedPlant aug(std::make_shared<CstrPlant>());
  const AffineModel lin = linearize(aug, vec({0.4, 0.6, 0.1}), vec({0.0}));
  EXPECT_NEAR(lin.A(0, 0), kStdJac[0][0], 1e-6);
  EXPECT_NEAR(lin.A(1, 2), kStdJac[1][2], 1e-6);
  EXPECT_NEAR(lin.A(2, 2), 1.0, 1e-9);
  EXPECT_NEAR(lin.A(2, 0), 0.0, 1e-9);
  EXPECT_NEAR(lin.B(2, 0), 1.0, 1e-9);
  EXPECT_NEAR(lin.B(0, 0), 0.0, 1e-9);
  EXPECT_NEAR(lin.C(0, 1), 1.0, 1e-9);
}

TEST(Linearize, LinearOutputMap)
{
  // h(x, u) = x2 of the CSTR: C = [0, 1], D = 0, r = 0 anywhere in the domain
  const AffineModel lin = linearize(CstrPlant(), vec({0.2, 0.8}), vec({1.3}));
  EXPECT_NEAR(lin.C(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(lin.C(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(lin.D(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(lin.r[0], 0.0, 1e-9);
}

TEST(Linearize, RecoversRandomAffinePlants)
{
  // Truncation error of central differences vanishes for affine maps; what is left is
  // rounding of order eps * |f| / h, which dominates the 10 h^2 truncation budget.
  test::Rng rng(11);
  constexpr double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = rng.integer(1, 4), m = rng.integer(1, 2), p = rng.integer(1, 3);
    const AffineModel gen = rng.affine(n, m, p);
    AffinePlant plant(gen);
    const Vector x = rng.vector(n, -3, 3), u = rng.vector(m, -3, 3);
    const AffineModel lin = linearize(plant, x, u, h);
    const double fscale = 1.0 + std::max(plant.step(x, u).cwiseAbs().maxCoeff(), plant.output(x, u).cwiseAbs().maxCoeff())
                          + 3.0 * std::max(x.cwiseAbs().maxCoeff(), u.cwiseAbs().maxCoeff());
    const double tol = 10 * h * h + 100 * std::numeric_limits<double>::epsilon() * fscale / h;
    EXPECT_LE(lin.max_abs_diff(gen), tol * (1.0 + gen.max_abs_diff(AffineModel{Matrix::Zero(n, n), Matrix::Zero(n, m), Vector::Zero(n), Matrix::Zero(p, n), Matrix::Zero(p, m), Vector::Zero(p)})));
  }
}

TEST(AugmentedPlant, ZeroRateReproducesInnerPlant)
{
  auto inner = std::make_shared<CstrPlant>();
  AugmentedPlant aug(inner);
  EXPECT_EQ(aug.state_dim(), 3);
  EXPECT_EQ(aug.input_dim(), 1);
  EXPECT_EQ(aug.output_dim(), 1);

  Vector xa = vec({0.4, 0.6, 0.73});
  Vector xi = vec({0.4, 0.6});
  for (int k = 0; k < 50; ++k) {
    EXPECT_EQ(aug.output(xa, vec({0.0})), inner->output(xi, vec({0.73})));
    xa = aug.step(xa, vec({0.0}));
    xi = inner->step(xi, vec({0.73}));
    EXPECT_EQ(xa.head(2), xi);
    EXPECT_EQ(xa[2], 0.73);
  }
}

TEST(AugmentedPlant, IncrementTakesEffectNextStep)
{
  auto inner = std::make_shared<CstrPlant>();
  AugmentedPlant aug(inner);
  const Vector xa = aug.step(vec({0.4, 0.6, 0.1}), vec({0.5}));
  const Vector xi = inner->step(vec({0.4, 0.6}), vec({0.1}));
  EXPECT_EQ(xa.head(2), xi);
  EXPECT_DOUBLE_EQ(xa[2], 0.6);
}
