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

#ifndef IDMPC__CONFIG_HPP_
#define IDMPC__CONFIG_HPP_

/**
 * @file
 * @brief Run configuration: flat `section.key = value` text files.
 *
 * Lines are `key = value`; `#` starts a comment. Matrices are written row-wise with `;` between
 * rows and `,` or blanks between entries; a single number given for a weight matrix means that
 * multiple of the identity, a single number given for an input bound applies to every input.
 * Unknown and repeated keys are errors. An empty file gives the CSTR benchmark setup.
 */

#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "csv.hpp"
#include "loop.hpp"
#include "plant.hpp"

namespace idmpc {

struct RunConfig
{
  enum class PlantType { cstr, affine };

  PlantType plant_type = PlantType::cstr;
  CstrParams cstr;
  /// CSTR only: treat the input as a state and control its increment.
  bool augment = true;
  /// plant.type = affine: generating model.
  AffineModel affine;
  Vector x0;

  MpcConfig mpc;
  BootstrapStrategy bootstrap;
  long T_end = 2500;
  std::uint64_t seed = 0;

  std::vector<double> sweep_lambda;
  std::vector<Index> sweep_N;
  int workers = 1;

  std::string trace_path = "trace.csv";
  std::string sweep_path = "sweep.csv";

  PlantPtr make_plant() const
  {
    if (plant_type == PlantType::affine) { return std::make_shared<AffinePlant>(affine); }
    auto inner = std::make_shared<CstrPlant>(cstr);
    if (augment) { return std::make_shared<AugmentedPlant>(inner); }
    return inner;
  }

  BootstrapStrategy bootstrap_strategy() const
  {
    BootstrapStrategy b = bootstrap;
    b.seed = seed;
    return b;
  }

  SweepSpec sweep_spec() const
  {
    SweepSpec s;
    s.lambda_values = sweep_lambda;
    s.N_values      = sweep_N;
    s.T_end         = T_end;
    s.workers       = workers;
    s.seed          = seed;
    return s;
  }

  /// Throws ConfigError on any inconsistency.
  void validate() const
  {
    const PlantPtr plant = make_plant();
    const Index n = plant->state_dim();
    if (x0.size() != n) { throw ConfigError("plant.x0 must have " + std::to_string(n) + " entries"); }
    mpc.validate(n, plant->input_dim(), plant->output_dim());
    if (T_end < static_cast<long>(mpc.N)) { throw ConfigError("run.T_end must be at least mpc.N"); }
    if (workers < 1) { throw ConfigError("sweep.workers must be positive"); }
    if (bootstrap.amplitude < 0) { throw ConfigError("bootstrap.amplitude must be nonnegative"); }
    for (double l : sweep_lambda) {
      if (!(l >= 0)) { throw ConfigError("sweep.lambda values must be nonnegative"); }
    }
    for (Index N : sweep_N) {
      if (N < 1) { throw ConfigError("sweep.N values must be positive"); }
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) { return {}; }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline Matrix parse_matrix(const std::string & key, const std::string & value)
{
  std::vector<std::vector<double>> rows;
  for (auto row : split(value, ';')) {
    std::string r(row);
    for (char & c : r) {
      if (c == ',' || c == '\t') { c = ' '; }
    }
    std::istringstream is(r);
    std::vector<double> entries;
    std::string tok;
    while (is >> tok) {
      try {
        entries.push_back(parse_double(tok));
      } catch (const ConfigError &) {
        throw ConfigError(key + ": '" + tok + "' is not a number");
      }
    }
    if (entries.empty()) {
      if (split(value, ';').size() == 1) { break; }
      throw ConfigError(key + ": empty matrix row");
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) { return Matrix(0, 0); }
  const std::size_t cols = rows.front().size();
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) { throw ConfigError(key + ": rows have different lengths"); }
    for (std::size_t j = 0; j < cols; ++j) { M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j]; }
  }
  return M;
}

inline Vector parse_vector(const std::string & key, const std::string & value)
{
  const Matrix M = parse_matrix(key, value);
  if (M.size() == 0) { return Vector(0); }
  if (M.rows() != 1 && M.cols() != 1) { throw ConfigError(key + ": expected a list, got a matrix"); }
  return Eigen::Map<const Vector>(M.data(), M.size());
}

inline double parse_scalar(const std::string & key, const std::string & value)
{
  const Vector v = parse_vector(key, value);
  if (v.size() != 1) { throw ConfigError(key + ": expected a single number"); }
  return v[0];
}

inline long parse_integer(const std::string & key, const std::string & value)
{
  const double v = parse_scalar(key, value);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) { throw ConfigError(key + ": expected an integer"); }
  return static_cast<long>(v);
}

inline bool parse_bool(const std::string & key, const std::string & value)
{
  if (value == "true" || value == "1" || value == "yes") { return true; }
  if (value == "false" || value == "0" || value == "no") { return false; }
  throw ConfigError(key + ": expected true or false");
}

/// Scalar -> multiple of identity; otherwise must already be dim x dim.
inline Matrix expand_weight(const Matrix & W, Index dim)
{
  if (W.rows() == 1 && W.cols() == 1 && dim != 1) { return W(0, 0) * Matrix::Identity(dim, dim); }
  return W;
}

inline Vector expand_bound(const Vector & v, Index dim)
{
  if (v.size() == 1 && dim != 1) { return Vector::Constant(dim, v[0]); }
  return v;
}

inline const std::set<std::string> & known_keys()
{
  static const std::set<std::string> keys = {
      "plant.type", "plant.cstr_form", "plant.augment", "plant.Ts", "plant.theta", "plant.k_bar", "plant.M",
      "plant.x_f", "plant.x_c", "plant.alpha", "plant.A", "plant.B", "plant.e", "plant.C", "plant.D", "plant.r",
      "plant.x0",
      "mpc.Q", "mpc.R", "mpc.S", "mpc.L", "mpc.N", "mpc.n_apply", "mpc.u_lo", "mpc.u_hi", "mpc.us_lo", "mpc.us_hi",
      "mpc.lambda", "mpc.y_ref", "mpc.state_box", "mpc.stop_threshold",
      "qp.tol", "qp.max_iter", "qp.equilibrate", "qp.bland_after",
      "bootstrap.kind", "bootstrap.amplitude", "bootstrap.nominal",
      "run.T_end", "run.seed",
      "sweep.lambda", "sweep.N", "sweep.workers",
      "output.trace", "output.sweep",
  };
  return keys;
}

}  // namespace detail

/// The CSTR benchmark: augmented reactor, setpoint 0.6519, horizon 41, window 25.
inline RunConfig default_run_config()
{
  RunConfig c;
  c.x0 = Vector(3);
  c.x0 << 0.4, 0.6, 0.1;
  c.mpc.Q      = Matrix::Identity(3, 3);
  c.mpc.R      = Matrix::Constant(1, 1, 0.05);
  c.mpc.S      = Matrix::Constant(1, 1, 100.0);
  c.mpc.L      = 41;
  c.mpc.N      = 25;
  c.mpc.lambda = 1e-12;
  c.mpc.y_ref  = Vector::Constant(1, 0.6519);
  // the raw input is the increment; the physical input set lives on the stored-input state
  c.mpc.u_lo  = Vector::Constant(1, -10.0);
  c.mpc.u_hi  = Vector::Constant(1, 10.0);
  c.mpc.us_lo = Vector::Constant(1, -9.9);
  c.mpc.us_hi = Vector::Constant(1, 9.9);
  c.mpc.state_box      = {StateBound{2, 0.1, 2.0, 0.11, 1.99}};
  c.mpc.stop_threshold = 5e-6;
  c.sweep_lambda = {c.mpc.lambda};
  c.sweep_N      = {c.mpc.N};
  return c;
}

/**
 * @brief Parse a configuration; `source` is only used in error messages.
 *
 * Defaults depend on plant.type (and plant.augment for the reactor); every other key overrides a
 * default. Throws ConfigError with the offending line on malformed input.
 */
inline RunConfig parse_run_config(std::istream & is, const std::string & source = "<config>")
{
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) { line.erase(hash); }
    const std::string t = detail::trim(line);
    if (t.empty()) { continue; }
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) { throw ConfigError(where + ": expected 'key = value'"); }
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string val = detail::trim(std::string_view(t).substr(eq + 1));
    if (!detail::known_keys().count(key)) { throw ConfigError(where + ": unknown key '" + key + "'"); }
    if (!kv.emplace(key, val).second) { throw ConfigError(where + ": repeated key '" + key + "'"); }
  }

  auto take = [&](const std::string & key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) { return std::nullopt; }
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  RunConfig c = default_run_config();
  if (auto v = take("plant.type")) {
    if (*v == "affine") {
      c.plant_type = RunConfig::PlantType::affine;
    } else if (*v != "cstr") {
      throw ConfigError("plant.type must be cstr or affine");
    }
  }
  if (auto v = take("plant.augment")) { c.augment = detail::parse_bool("plant.augment", *v); }

  if (c.plant_type == RunConfig::PlantType::cstr && !c.augment) {
    c.x0 = c.x0.head(2).eval();
    c.mpc.Q     = Matrix::Identity(2, 2);
    c.mpc.u_lo  = Vector::Constant(1, 0.1);
    c.mpc.u_hi  = Vector::Constant(1, 2.0);
    c.mpc.us_lo = Vector::Constant(1, 0.11);
    c.mpc.us_hi = Vector::Constant(1, 1.99);
    c.mpc.state_box.clear();
  }

  if (c.plant_type == RunConfig::PlantType::affine) {
    for (const char * k : {"plant.cstr_form", "plant.Ts", "plant.theta", "plant.k_bar", "plant.M", "plant.x_f", "plant.x_c", "plant.alpha"}) {
      if (kv.count(k)) { throw ConfigError(std::string(k) + " only applies to plant.type = cstr"); }
    }
    for (const char * k : {"plant.A", "plant.B", "plant.C", "plant.x0", "mpc.y_ref"}) {
      if (!kv.count(k)) { throw ConfigError(std::string("plant.type = affine requires ") + k); }
    }
    AffineModel & a = c.affine;
    a.A = detail::parse_matrix("plant.A", *take("plant.A"));
    a.B = detail::parse_matrix("plant.B", *take("plant.B"));
    a.C = detail::parse_matrix("plant.C", *take("plant.C"));
    const Index n = a.A.rows(), m = a.B.cols(), p = a.C.rows();
    a.e = Vector::Zero(n);
    a.D = Matrix::Zero(p, m);
    a.r = Vector::Zero(p);
    if (auto v = take("plant.e")) { a.e = detail::parse_vector("plant.e", *v); }
    if (auto v = take("plant.D")) { a.D = detail::parse_matrix("plant.D", *v); }
    if (auto v = take("plant.r")) { a.r = detail::parse_vector("plant.r", *v); }
    try {
      a.validate();
    } catch (const Error & err) {
      throw ConfigError(std::string("affine plant: ") + err.what());
    }
    c.mpc.Q = Matrix::Identity(n, n);
    c.mpc.R = 0.05 * Matrix::Identity(m, m);
    c.mpc.S = 100.0 * Matrix::Identity(p, p);
    c.mpc.state_box.clear();
  } else {
    for (const char * k : {"plant.A", "plant.B", "plant.e", "plant.C", "plant.D", "plant.r"}) {
      if (kv.count(k)) { throw ConfigError(std::string(k) + " only applies to plant.type = affine"); }
    }
    if (auto v = take("plant.cstr_form")) {
      if (*v == "standard") {
        c.cstr.form = CstrForm::standard;
      } else if (*v == "printed") {
        c.cstr.form = CstrForm::printed;
      } else {
        throw ConfigError("plant.cstr_form must be standard or printed");
      }
    }
    const std::pair<const char *, double *> params[] = {
        {"plant.Ts", &c.cstr.Ts},   {"plant.theta", &c.cstr.theta}, {"plant.k_bar", &c.cstr.k_bar}, {"plant.M", &c.cstr.M},
        {"plant.x_f", &c.cstr.x_f}, {"plant.x_c", &c.cstr.x_c},     {"plant.alpha", &c.cstr.alpha},
    };
    for (const auto & [k, dst] : params) {
      if (auto v = take(k)) { *dst = detail::parse_scalar(k, *v); }
    }
  }

  const PlantPtr plant = c.make_plant();
  const Index n = plant->state_dim(), m = plant->input_dim(), p = plant->output_dim();

  if (auto v = take("plant.x0")) { c.x0 = detail::parse_vector("plant.x0", *v); }
  if (auto v = take("mpc.Q")) { c.mpc.Q = detail::expand_weight(detail::parse_matrix("mpc.Q", *v), n); }
  if (auto v = take("mpc.R")) { c.mpc.R = detail::expand_weight(detail::parse_matrix("mpc.R", *v), m); }
  if (auto v = take("mpc.S")) { c.mpc.S = detail::expand_weight(detail::parse_matrix("mpc.S", *v), p); }
  if (auto v = take("mpc.L")) { c.mpc.L = detail::parse_integer("mpc.L", *v); }
  if (auto v = take("mpc.N")) { c.mpc.N = detail::parse_integer("mpc.N", *v); }
  if (auto v = take("mpc.n_apply")) { c.mpc.n_apply = detail::parse_integer("mpc.n_apply", *v); }
  c.mpc.u_lo  = detail::expand_bound(c.mpc.u_lo, m);
  c.mpc.u_hi  = detail::expand_bound(c.mpc.u_hi, m);
  c.mpc.us_lo = detail::expand_bound(c.mpc.us_lo, m);
  c.mpc.us_hi = detail::expand_bound(c.mpc.us_hi, m);
  if (auto v = take("mpc.u_lo")) { c.mpc.u_lo = detail::expand_bound(detail::parse_vector("mpc.u_lo", *v), m); }
  if (auto v = take("mpc.u_hi")) { c.mpc.u_hi = detail::expand_bound(detail::parse_vector("mpc.u_hi", *v), m); }
  if (auto v = take("mpc.us_lo")) { c.mpc.us_lo = detail::expand_bound(detail::parse_vector("mpc.us_lo", *v), m); }
  if (auto v = take("mpc.us_hi")) { c.mpc.us_hi = detail::expand_bound(detail::parse_vector("mpc.us_hi", *v), m); }
  if (auto v = take("mpc.lambda")) { c.mpc.lambda = detail::parse_scalar("mpc.lambda", *v); }
  if (auto v = take("mpc.y_ref")) { c.mpc.y_ref = detail::parse_vector("mpc.y_ref", *v); }
  if (auto v = take("mpc.stop_threshold")) { c.mpc.stop_threshold = detail::parse_scalar("mpc.stop_threshold", *v); }
  if (auto v = take("mpc.state_box")) {
    const Matrix B = detail::parse_matrix("mpc.state_box", *v);
    c.mpc.state_box.clear();
    if (B.size() > 0 && B.cols() != 5) { throw ConfigError("mpc.state_box: rows are 'index, lo, hi, ss_lo, ss_hi'"); }
    for (Index i = 0; i < B.rows(); ++i) {
      const double idx = B(i, 0);
      if (idx != std::floor(idx) || idx < 0 || idx >= static_cast<double>(n)) {
        throw ConfigError("mpc.state_box: state index must be an integer in [0, n)");
      }
      c.mpc.state_box.push_back(StateBound{static_cast<Index>(idx), B(i, 1), B(i, 2), B(i, 3), B(i, 4)});
    }
  }

  if (auto v = take("qp.tol")) { c.mpc.qp.tol = detail::parse_scalar("qp.tol", *v); }
  if (auto v = take("qp.max_iter")) { c.mpc.qp.max_iter = static_cast<int>(detail::parse_integer("qp.max_iter", *v)); }
  if (auto v = take("qp.equilibrate")) { c.mpc.qp.equilibrate = detail::parse_bool("qp.equilibrate", *v); }
  if (auto v = take("qp.bland_after")) { c.mpc.qp.bland_after = static_cast<int>(detail::parse_integer("qp.bland_after", *v)); }

  if (auto v = take("bootstrap.kind")) {
    if (*v == "model_based_mpc") {
      c.bootstrap.kind = BootstrapKind::model_based_mpc;
    } else if (*v == "excited_rollout") {
      c.bootstrap.kind = BootstrapKind::excited_rollout;
    } else {
      throw ConfigError("bootstrap.kind must be model_based_mpc or excited_rollout");
    }
  }
  if (auto v = take("bootstrap.amplitude")) { c.bootstrap.amplitude = detail::parse_scalar("bootstrap.amplitude", *v); }
  if (auto v = take("bootstrap.nominal")) { c.bootstrap.nominal = detail::expand_bound(detail::parse_vector("bootstrap.nominal", *v), m); }

  if (auto v = take("run.T_end")) { c.T_end = detail::parse_integer("run.T_end", *v); }
  if (auto v = take("run.seed")) {
    const long s = detail::parse_integer("run.seed", *v);
    if (s < 0) { throw ConfigError("run.seed must be nonnegative"); }
    c.seed = static_cast<std::uint64_t>(s);
  }

  c.sweep_lambda = {c.mpc.lambda};
  c.sweep_N      = {c.mpc.N};
  if (auto v = take("sweep.lambda")) {
    const Vector l = detail::parse_vector("sweep.lambda", *v);
    c.sweep_lambda.assign(l.data(), l.data() + l.size());
  }
  if (auto v = take("sweep.N")) {
    const Vector l = detail::parse_vector("sweep.N", *v);
    c.sweep_N.clear();
    for (Index i = 0; i < l.size(); ++i) {
      if (l[i] != std::floor(l[i])) { throw ConfigError("sweep.N: expected integers"); }
      c.sweep_N.push_back(static_cast<Index>(l[i]));
    }
  }
  if (auto v = take("sweep.workers")) { c.workers = static_cast<int>(detail::parse_integer("sweep.workers", *v)); }
  if (auto v = take("output.trace")) { c.trace_path = *v; }
  if (auto v = take("output.sweep")) { c.sweep_path = *v; }

  if (!kv.empty()) { throw ConfigError("key '" + kv.begin()->first + "' does not apply to this plant"); }
  if (c.bootstrap.nominal.size() != 0 && c.bootstrap.nominal.size() != m) {
    throw ConfigError("bootstrap.nominal must have " + std::to_string(m) + " entries");
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string & path)
{
  std::ifstream f(path);
  if (!f) { throw ConfigError("cannot read config file '" + path + "'"); }
  return parse_run_config(f, path);
}

}  // namespace idmpc

#endif  // IDMPC__CONFIG_HPP_
