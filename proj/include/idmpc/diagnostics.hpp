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

#ifndef IDMPC__DIAGNOSTICS_HPP_
#define IDMPC__DIAGNOSTICS_HPP_

#include "plant.hpp"

namespace idmpc {

/**
 * @brief Max-norm distance between a model and the plant linearization at (x_t, 0).
 *
 * Empirical counterpart of the identification-vs-linearization error bound.
 */
inline double id_error_diagnostic(const AffineModel & mdl, const Plant & plant, const Vector & x_t)
{
  return mdl.max_abs_diff(linearize(plant, x_t, Vector::Zero(plant.input_dim())));
}

}  // namespace idmpc

#endif  // IDMPC__DIAGNOSTICS_HPP_
