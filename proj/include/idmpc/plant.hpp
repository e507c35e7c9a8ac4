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

#ifndef IDMPC__PLANT_HPP_
#define IDMPC__PLANT_HPP_

/**
 * @file
 * @brief Discrete-time plants: interface, CSTR benchmark, input-rate augmentation, rollout and
 * finite-difference linearization.
 */

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "model.hpp"

namespace idmpc {

/**
 * @brief Deterministic discrete-time plant x+ = f(x, u), y = h(x, u).
 *
 * Implementations are immutable after construction and may be shared between threads.
 */
class Plant
{
public:
  virtual ~Plant() = default;

  virtual Index state_dim() const  = 0;
  virtual Index input_dim() const  = 0;
  virtual Index output_dim() const = 0;

  virtual Vector step(const Vector & x, const Vector & u) const   = 0;
  virtual Vector output(const Vector & x, const Vector & u) const = 0;

protected:
  void check_dims(const Vector & x, const Vector & u) const
  {
    if (x.size() != state_dim() || u.size() != input_dim()) {
      throw DimensionError("Plant: expected state of size " + std::to_string(state_dim())
                           + " and input of size " + std::to_string(input_dim()));
    }
  }
};

using PlantPtr = std::shared_ptr<const Plant>;

/// Which reaction term the first CSTR state equation uses.
enum class CstrForm {
  /// Consumption term T_s k x1 exp(-M/x2), as in the usual CSTR benchmark.
  standard,
  /// Consumption term T_s k exp(-M/x2) without the x1 factor.
  printed,
};

struct CstrParams
{
  double Ts    = 0.2;
  double theta = 20.0;
  double k_bar = 300.0;
  double M     = 5.0;
  double x_f   = 0.3947;
  double x_c   = 0.3816;
  double alpha = 0.117;
  CstrForm form = CstrForm::standard;
};

/**
 * @brief Euler-discretized continuous stirred tank reactor.
 *
 *   x1+ = x1 + Ts/theta (1 - x1) - Ts k x1 exp(-M/x2)
 *   x2+ = x2 + Ts/theta (x_f - x2) + Ts k x1 exp(-M/x2) - Ts alpha u (x2 - x_c)
 *   y   = x2
 *
 * With CstrForm::printed the x1 factor in the first consumption term is dropped.
 * The domain is x2 > 0.
 */
class CstrPlant final : public Plant
{
public:
  CstrPlant() = default;
  explicit CstrPlant(CstrParams params) : params_(params) {}

  Index state_dim() const override { return 2; }
  Index input_dim() const override { return 1; }
  Index output_dim() const override { return 1; }

  const CstrParams & params() const { return params_; }

  Vector step(const Vector & x, const Vector & u) const override
  {
    check_dims(x, u);
    if (!(x[1] > 0.0)) { throw DomainError("CstrPlant: x2 must be positive"); }
    const auto & p    = params_;
    const double rate = p.Ts * p.k_bar * std::exp(-p.M / x[1]);
    const double cons = p.form == CstrForm::standard ? rate * x[0] : rate;
    Vector xn(2);
    xn[0] = x[0] + p.Ts / p.theta * (1.0 - x[0]) - cons;
    xn[1] = x[1] + p.Ts / p.theta * (p.x_f - x[1]) + rate * x[0] - p.Ts * p.alpha * u[0] * (x[1] - p.x_c);
    return xn;
  }

  Vector output(const Vector & x, const Vector & u) const override
  {
    check_dims(x, u);
    return x.segment<1>(1);
  }

private:
  CstrParams params_{};
};

/**
 * @brief Input-rate augmentation of an inner plant.
 *
 * Augmented state is [x; u], the new input is du. One step applies the inner dynamics with the
 * stored u and then increments u by du:
 *
 *   [x; u]+ = [f(x, u); u + du],   y = h(x, u).
 */
class AugmentedPlant final : public Plant
{
public:
  explicit AugmentedPlant(PlantPtr inner) : inner_(std::move(inner)) {}

  Index state_dim() const override { return inner_->state_dim() + inner_->input_dim(); }
  Index input_dim() const override { return inner_->input_dim(); }
  Index output_dim() const override { return inner_->output_dim(); }

  const Plant & inner() const { return *inner_; }
  const PlantPtr & inner_ptr() const { return inner_; }

  /// Index of the first stored-input component inside the augmented state.
  Index stored_input_offset() const { return inner_->state_dim(); }

  Vector step(const Vector & x, const Vector & du) const override
  {
    check_dims(x, du);
    const Index n = inner_->state_dim(), m = inner_->input_dim();
    Vector xn(n + m);
    xn.head(n) = inner_->step(x.head(n), x.tail(m));
    xn.tail(m) = x.tail(m) + du;
    return xn;
  }

  Vector output(const Vector & x, const Vector & du) const override
  {
    check_dims(x, du);
    const Index n = inner_->state_dim(), m = inner_->input_dim();
    return inner_->output(x.head(n), x.tail(m));
  }

  /// Splits an augmented state into (inner state, stored input).
  std::pair<Vector, Vector> split(const Vector & x) const
  {
    return {x.head(inner_->state_dim()), x.tail(inner_->input_dim())};
  }

private:
  PlantPtr inner_;
};

/// Exactly affine plant, mostly useful as a test bed with known ground truth.
class AffinePlant final : public Plant
{
public:
  explicit AffinePlant(AffineModel model) : model_(std::move(model)) { model_.validate(); }

  Index state_dim() const override { return model_.state_dim(); }
  Index input_dim() const override { return model_.input_dim(); }
  Index output_dim() const override { return model_.output_dim(); }

  const AffineModel & model() const { return model_; }

  Vector step(const Vector & x, const Vector & u) const override
  {
    check_dims(x, u);
    return model_.next_state(x, u);
  }

  Vector output(const Vector & x, const Vector & u) const override
  {
    check_dims(x, u);
    return model_.output(x, u);
  }

private:
  AffineModel model_;
};

/// Result of an open-loop rollout: len(inputs) + 1 states and len(inputs) outputs.
struct Trajectory
{
  std::vector<Vector> states;
  std::vector<Vector> outputs;
};

/**
 * @brief Roll out a plant from x0 under the given input sequence.
 *
 * Output k is h(x_k, u_k). Domain errors are rethrown with the failing time index.
 */
inline Trajectory simulate(const Plant & plant, const Vector & x0, const std::vector<Vector> & inputs)
{
  if (inputs.empty()) { throw DimensionError("simulate: input sequence is empty"); }
  if (x0.size() != plant.state_dim()) { throw DimensionError("simulate: initial state has wrong size"); }
  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.outputs.reserve(inputs.size());
  traj.states.push_back(x0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    try {
      traj.outputs.push_back(plant.output(traj.states.back(), inputs[k]));
      traj.states.push_back(plant.step(traj.states.back(), inputs[k]));
    } catch (const DomainError & err) {
      throw DomainError(err.what(), static_cast<long>(k));
    }
  }
  return traj;
}

/**
 * @brief Central finite-difference linearization of a plant at (x_lin, u_lin).
 *
 * Each coordinate uses the step rel_step * max(1, |coordinate|). The offsets are chosen such
 * that the affine model reproduces f and h exactly at the linearization point.
 */
inline AffineModel linearize(const Plant & plant, const Vector & x_lin, const Vector & u_lin, double rel_step = 1e-6)
{
  const Index n = plant.state_dim(), m = plant.input_dim(), p = plant.output_dim();
  if (x_lin.size() != n || u_lin.size() != m) { throw DimensionError("linearize: wrong point dimensions"); }

  AffineModel mdl;
  mdl.A.resize(n, n);
  mdl.B.resize(n, m);
  mdl.C.resize(p, n);
  mdl.D.resize(p, m);

  auto column = [&](Vector x_plus, Vector u_plus, Vector x_minus, Vector u_minus, double h2) {
    return std::pair<Vector, Vector>{(plant.step(x_plus, u_plus) - plant.step(x_minus, u_minus)) / h2,
                                     (plant.output(x_plus, u_plus) - plant.output(x_minus, u_minus)) / h2};
  };

  for (Index i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x_lin[i]));
    Vector xp = x_lin, xm = x_lin;
    xp[i] += h;
    xm[i] -= h;
    auto [df, dh] = column(xp, u_lin, xm, u_lin, xp[i] - xm[i]);
    mdl.A.col(i) = df;
    mdl.C.col(i) = dh;
  }
  for (Index j = 0; j < m; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(u_lin[j]));
    Vector up = u_lin, um = u_lin;
    up[j] += h;
    um[j] -= h;
    auto [df, dh] = column(x_lin, up, x_lin, um, up[j] - um[j]);
    mdl.B.col(j) = df;
    mdl.D.col(j) = dh;
  }

  mdl.e = plant.step(x_lin, u_lin) - mdl.A * x_lin - mdl.B * u_lin;
  mdl.r = plant.output(x_lin, u_lin) - mdl.C * x_lin - mdl.D * u_lin;
  return mdl;
}

}  // namespace idmpc

#endif  // IDMPC__PLANT_HPP_
