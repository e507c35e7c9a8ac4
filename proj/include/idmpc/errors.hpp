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

#ifndef IDMPC__ERRORS_HPP_
#define IDMPC__ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace idmpc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A plant was evaluated outside of its domain (e.g. CSTR with x2 <= 0).
class DomainError : public Error
{
public:
  explicit DomainError(const std::string & what, long time_index = -1)
      : Error(time_index < 0 ? what : what + " (at t=" + std::to_string(time_index) + ")"),
        time_index_(time_index)
  {}

  /// Time index at which the violation occurred, -1 if not part of a rollout.
  long time_index() const noexcept { return time_index_; }

private:
  long time_index_;
};

/// Matrix or vector dimensions are inconsistent.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// A matrix that must be invertible is (numerically) singular.
class SingularError : public Error
{
public:
  SingularError(const std::string & what, double sigma_min)
      : Error(what + " (sigma_min=" + std::to_string(sigma_min) + ")"), sigma_min_(sigma_min)
  {}

  double sigma_min() const noexcept { return sigma_min_; }

private:
  double sigma_min_;
};

/// Reduced Hessian of an equality-constrained QP is not positive definite.
class IndefiniteError : public Error
{
public:
  using Error::Error;
};

/// An optimization inside the control loop did not return an optimal solution.
class SolverError : public Error
{
public:
  SolverError(const std::string & what, std::string status) : Error(what + " (" + status + ")"), status_(std::move(status)) {}

  const std::string & status() const noexcept { return status_; }

private:
  std::string status_;
};

/// Invalid configuration value or violated configuration invariant.
class ConfigError : public Error
{
public:
  using Error::Error;
};

}  // namespace idmpc

#endif  // IDMPC__ERRORS_HPP_
