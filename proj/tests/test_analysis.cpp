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

#include <sstream>

#include <idmpc/analysis.hpp>
#include <idmpc/config.hpp>

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

ClosedLoopTrace constant_output_trace(const std::vector<double> & ys)
{
  ClosedLoopTrace tr;
  tr.n = tr.m = tr.p = 1;
  for (double y : ys) {
    tr.x.push_back(vec({0.0}));
    tr.y.push_back(vec({y}));
  }
  tr.u.assign(ys.size() - 1, vec({0.0}));
  tr.y_ref = vec({0.0});
  return tr;
}

AffineModel two_state_model()
{
  AffineModel a;
  a.A = (Matrix(2, 2) << 0.9, 0.1, 0.0, 0.8).finished();
  a.B = (Matrix(2, 1) << 0.0, 1.0).finished();
  a.e = vec({0.1, 0.0});
  a.C = (Matrix(1, 2) << 1.0, 0.0).finished();
  a.D = Matrix::Zero(1, 1);
  a.r = Vector::Zero(1);
  return a;
}

MpcConfig two_state_config()
{
  MpcConfig c;
  c.Q = Matrix::Identity(2, 2);
  c.R = Matrix::Constant(1, 1, 0.1);
  c.S = Matrix::Constant(1, 1, 100.0);
  c.L = 10;
  c.N = 8;
  c.u_lo  = vec({-5});
  c.u_hi  = vec({5});
  c.us_lo = vec({-4.9});
  c.us_hi = vec({4.9});
  c.y_ref = vec({1.2});
  return c;
}

BootstrapStrategy excited()
{
  BootstrapStrategy b;
  b.kind      = BootstrapKind::excited_rollout;
  b.amplitude = 0.5;
  return b;
}

}  // namespace

TEST(TrackingError, ZeroOnSetpoint)
{
  const ClosedLoopTrace tr = constant_output_trace({0.0, 0.0, 0.0});
  EXPECT_EQ(tracking_error(tr, vec({0.0}), 2), 0.0);
}

TEST(TrackingError, SumsNormsUpToT)
{
  const ClosedLoopTrace tr = constant_output_trace({1.0, 1.0, 5.0});
  EXPECT_DOUBLE_EQ(tracking_error(tr, vec({0.0}), 1), 2.0);
  EXPECT_DOUBLE_EQ(tracking_error(tr, vec({0.0}), 2), 7.0);
  EXPECT_DOUBLE_EQ(tracking_error(tr, vec({0.0}), 2, 1), 6.0);
}

TEST(TrackingError, ShortTraceThrows)
{
  const ClosedLoopTrace tr = constant_output_trace({1.0, 1.0});
  EXPECT_THROW(tracking_error(tr, vec({0.0}), 2), DimensionError);
  EXPECT_THROW(tracking_error(tr, vec({0.0, 0.0}), 1), DimensionError);
}

TEST(PlantEquilibrium, CstrMatchesOracle)
{
  const RunConfig cfg = default_run_config();
  const PlantPtr plant = cfg.make_plant();
  const PlantEquilibrium eq = plant_equilibrium(*plant, cfg.mpc, cfg.x0);
  // 40-digit reference from tests/oracles/cstr_oracle.py
  EXPECT_NEAR(eq.x_sr[0], 0.26315647701744548, 1e-10);
  EXPECT_NEAR(eq.x_sr[1], 0.6519, 1e-10);
  EXPECT_NEAR(eq.x_sr[2], 0.7583272827319985, 1e-10);
  EXPECT_NEAR(eq.y_sr[0], 0.6519, 1e-10);
  EXPECT_EQ(eq.u_sr.size(), 1);
  EXPECT_EQ(eq.u_sr[0], 0.0);
  EXPECT_LE(eq.residual, 1e-10);
  EXPECT_LE((plant->step(eq.x_sr, eq.u_sr) - eq.x_sr).norm(), 1e-10);
}

TEST(PlantEquilibrium, UnreachableSetpointGivesBoundaryInput)
{
  RunConfig cfg = default_run_config();
  cfg.mpc.y_ref = vec({10.0});
  const PlantPtr plant = cfg.make_plant();
  const PlantEquilibrium eq = plant_equilibrium(*plant, cfg.mpc, cfg.x0);
  const double u = eq.x_sr[2];
  EXPECT_TRUE(std::abs(u - 0.11) < 1e-12 || std::abs(u - 1.99) < 1e-12) << u;
  EXPECT_LE(eq.residual, 1e-10);
  EXPECT_GT(eq.cost, 0.0);
}

TEST(PlantEquilibrium, AffinePlantAgreesWithModelSteadyStateQp)
{
  const AffineModel mdl = two_state_model();
  const AffinePlant plant(mdl);
  for (double y_ref : {1.2, 100.0, -30.0}) {
    MpcConfig cfg = two_state_config();
    cfg.y_ref = vec({y_ref});
    const PlantEquilibrium eq         = plant_equilibrium(plant, cfg, vec({0.0, 0.0}));
    const ReachableEquilibrium model_eq = optimal_reachable_cost(mdl, cfg);
    EXPECT_NEAR(eq.u_sr[0], model_eq.u_sr[0], 1e-8) << y_ref;
    EXPECT_NEAR((eq.x_sr - model_eq.x_sr).cwiseAbs().maxCoeff(), 0.0, 1e-8) << y_ref;
    EXPECT_NEAR(eq.cost, model_eq.J_hat_star, 1e-8 * std::max(1.0, eq.cost)) << y_ref;
  }
}

TEST(PlantEquilibrium, RejectsBadArguments)
{
  const AffinePlant plant(two_state_model());
  EXPECT_THROW(plant_equilibrium(plant, vec({1.0}), vec({0.0}), vec({0.0}), Matrix::Identity(1, 1), vec({0, 0})), DimensionError);
  EXPECT_THROW(plant_equilibrium(plant, vec({0.0}), vec({1.0}), vec({0.0}), Matrix::Identity(1, 1), vec({0})), DimensionError);
}

TEST(IdErrorDiagnostic, ZeroForOwnLinearization)
{
  const RunConfig cfg = default_run_config();
  const PlantPtr plant = cfg.make_plant();
  const AffineModel lin = linearize(*plant, cfg.x0, Vector::Zero(1));
  EXPECT_EQ(id_error_diagnostic(lin, *plant, cfg.x0), 0.0);
}

TEST(IdErrorDiagnostic, ExactIdentificationOfAffinePlant)
{
  test::Rng rng(17);
  const AffineModel mdl = rng.affine(3, 2, 2, -1.0, 1.0);
  const AffinePlant plant(mdl);
  DataWindow w(12, 3, 2, 2);
  Vector x = rng.vector(3);
  for (int k = 0; k < 12; ++k) {
    const Vector u  = rng.vector(2);
    const Vector xn = plant.step(x, u);
    w.push(x, u, plant.output(x, u), xn);
    x = xn;
  }
  const AffineModel est = identify(w, 0.0);
  EXPECT_LE(id_error_diagnostic(est, plant, x), 1e-8);
}

TEST(Sweep, SingleCellMatchesDirectRun)
{
  const RunConfig cfg = default_run_config();
  const PlantPtr plant = cfg.make_plant();
  SweepSpec spec;
  spec.lambda_values = {1e-12};
  spec.N_values      = {25};
  spec.T_end         = 300;
  const SweepGrid grid = run_sweep(*plant, cfg.x0, cfg.mpc, {}, spec);
  ASSERT_EQ(grid.cells.size(), 1u);
  ASSERT_TRUE(grid.cells[0].ok());
  const ClosedLoopTrace tr = run_closed_loop(*plant, cfg.x0, cfg.mpc, {}, 300);
  EXPECT_EQ(*grid.cells[0].tracking_error, tracking_error(tr, cfg.mpc.y_ref, 300));
  EXPECT_EQ(grid.cells[0].y_end, tr.y.back());
}

TEST(Sweep, ResultIndependentOfWorkerCount)
{
  const AffinePlant plant(two_state_model());
  const MpcConfig cfg = two_state_config();
  SweepSpec spec;
  spec.lambda_values = {0.0, 1e-10, 1e-6};
  spec.N_values      = {6, 8, 12};
  spec.T_end         = 80;
  spec.seed          = 9;
  spec.workers       = 1;
  const SweepGrid serial = run_sweep(plant, vec({0, 0}), cfg, excited(), spec);
  spec.workers = 4;
  const SweepGrid parallel = run_sweep(plant, vec({0, 0}), cfg, excited(), spec);
  ASSERT_EQ(serial.cells.size(), 9u);
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    EXPECT_EQ(serial.cells[i].status, parallel.cells[i].status);
    EXPECT_EQ(serial.cells[i].tracking_error, parallel.cells[i].tracking_error);
    EXPECT_EQ(serial.cells[i].N, parallel.cells[i].N);
    EXPECT_EQ(serial.cells[i].lambda, parallel.cells[i].lambda);
  }
  // row-major layout: N outer, lambda inner
  EXPECT_EQ(serial.at(1, 2).N, 8);
  EXPECT_EQ(serial.at(1, 2).lambda, 1e-6);
}

TEST(Sweep, FailedCellsCarryStatusNotError)
{
  const AffinePlant plant(two_state_model());
  MpcConfig cfg = two_state_config();
  SweepSpec spec;
  // N = 2 is below n + m + 1 and cannot produce an identifiable window
  spec.lambda_values = {1e-12};
  spec.N_values      = {2, 8};
  spec.T_end         = 40;
  const SweepGrid grid = run_sweep(plant, vec({0, 0}), cfg, excited(), spec);
  EXPECT_FALSE(grid.cells[0].ok());
  EXPECT_FALSE(grid.cells[0].tracking_error.has_value());
  EXPECT_TRUE(grid.cells[1].ok());

  std::ostringstream os;
  write_sweep_csv(os, grid);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N\\lambda,1e-12");
  EXPECT_NE(csv.find("\n2,solver_error\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\n8," + format_double(*grid.cells[1].tracking_error) + "\n"), std::string::npos) << csv;
}

TEST(Sweep, OverRegularizationIsRecordedNotFatal)
{
  const RunConfig cfg = default_run_config();
  const PlantPtr plant = cfg.make_plant();
  SweepSpec spec;
  spec.lambda_values = {1e2};
  spec.N_values      = {25};
  spec.T_end         = 200;
  const SweepGrid grid = run_sweep(*plant, cfg.x0, cfg.mpc, {}, spec);
  ASSERT_EQ(grid.cells.size(), 1u);
  const SweepCell & c = grid.cells[0];
  if (c.ok()) {
    EXPECT_TRUE(std::isfinite(*c.tracking_error));
  } else {
    EXPECT_FALSE(c.message.empty());
  }
}

TEST(Sweep, EmptyGridIsRejected)
{
  const AffinePlant plant(two_state_model());
  SweepSpec spec;
  spec.N_values = {8};
  EXPECT_THROW(run_sweep(plant, vec({0, 0}), two_state_config(), excited(), spec), ConfigError);
}
