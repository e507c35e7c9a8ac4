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

#ifndef IDMPC__CLI_HPP_
#define IDMPC__CLI_HPP_

/**
 * @file
 * @brief Subcommand implementations behind the idmpc_cli tool.
 *
 * Exit codes: 0 success, 1 configuration or usage error, 2 run aborted (infeasible MPC, plant
 * domain error, rank-deficient data) or, for sweeps, no successful cell.
 */

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "analysis.hpp"
#include "config.hpp"
#include "trace_io.hpp"

namespace idmpc {

struct CliOptions
{
  std::string config_path;  ///< empty: built-in defaults
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> lambda_list;
  std::optional<std::string> window_list;
};

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_aborted = 2 };

namespace detail {

inline RunConfig load_for_cli(const CliOptions & opt)
{
  RunConfig cfg;
  if (opt.config_path.empty()) {
    std::istringstream empty;
    cfg = parse_run_config(empty);
  } else {
    cfg = load_run_config(opt.config_path);
  }
  if (opt.seed) { cfg.seed = *opt.seed; }
  if (opt.workers) {
    if (*opt.workers < 1) { throw ConfigError("--workers must be positive"); }
    cfg.workers = *opt.workers;
  }
  return cfg;
}

inline std::vector<double> parse_list(const std::string & flag, const std::string & text)
{
  std::vector<double> out;
  for (auto tok : split(text, ',')) {
    const std::string t = trim(tok);
    if (t.empty()) { continue; }
    try {
      out.push_back(parse_double(t));
    } catch (const ConfigError &) {
      throw ConfigError(flag + ": '" + t + "' is not a number");
    }
  }
  if (out.empty()) { throw ConfigError(flag + ": empty list"); }
  return out;
}

inline void write_file(const std::string & path, const std::string & content)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) { throw ConfigError("cannot write '" + path + "'"); }
  f << content;
  if (!f) { throw ConfigError("write to '" + path + "' failed"); }
}

}  // namespace detail

/// Closed-loop run; writes the trace CSV and prints the tracking error.
inline int cmd_simulate(const CliOptions & opt, std::ostream & out, std::ostream & err)
{
  RunConfig cfg;
  try {
    cfg = detail::load_for_cli(opt);
  } catch (const Error & e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }

  const PlantPtr plant = cfg.make_plant();
  ClosedLoopTrace trace;
  try {
    trace = run_closed_loop(*plant, cfg.x0, cfg.mpc, cfg.bootstrap_strategy(), cfg.T_end);
  } catch (const ConfigError & e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const Error & e) {
    err << "error: " << e.what() << '\n';
    return exit_aborted;
  }

  std::ostringstream csv;
  write_trace_csv(csv, trace);
  const std::string path = opt.out.value_or(cfg.trace_path);
  try {
    detail::write_file(path, csv.str());
  } catch (const Error & e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  const double e = tracking_error(trace, cfg.mpc.y_ref, trace.final_time());
  out << "status: " << to_string(trace.status) << '\n';
  out << "steps: " << trace.final_time() << '\n';
  out << "solves: " << trace.solves.size() << '\n';
  out << "tracking_error: " << format_double(e) << '\n';
  out << "trace: " << path << '\n';
  if (!trace.completed()) {
    err << "run aborted: " << trace.message << '\n';
    return exit_aborted;
  }
  return exit_ok;
}

/// Grid of closed-loop runs over (lambda, N); writes the sweep matrix CSV.
inline int cmd_sweep(const CliOptions & opt, std::ostream & out, std::ostream & err)
{
  RunConfig cfg;
  SweepSpec spec;
  try {
    cfg  = detail::load_for_cli(opt);
    spec = cfg.sweep_spec();
    if (opt.lambda_list) { spec.lambda_values = detail::parse_list("--lambda", *opt.lambda_list); }
    if (opt.window_list) {
      spec.N_values.clear();
      for (double v : detail::parse_list("--window", *opt.window_list)) {
        if (v != std::floor(v) || v < 1) { throw ConfigError("--window: entries must be positive integers"); }
        spec.N_values.push_back(static_cast<Index>(v));
      }
    }
    for (double l : spec.lambda_values) {
      if (!(l >= 0)) { throw ConfigError("--lambda: entries must be nonnegative"); }
    }
  } catch (const Error & e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }

  const PlantPtr plant = cfg.make_plant();
  const SweepGrid grid = run_sweep(*plant, cfg.x0, cfg.mpc, cfg.bootstrap_strategy(), spec);

  std::ostringstream csv;
  write_sweep_csv(csv, grid);
  const std::string path = opt.out.value_or(cfg.sweep_path);
  try {
    detail::write_file(path, csv.str());
  } catch (const Error & e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  std::size_t ok = 0;
  for (const auto & c : grid.cells) {
    out << "N=" << c.N << " lambda=" << format_double(c.lambda) << ": ";
    if (c.ok()) {
      ++ok;
      out << "tracking_error " << format_double(*c.tracking_error);
    } else {
      out << to_string(c.status) << " (" << c.message << ')';
    }
    out << '\n';
  }
  out << ok << '/' << grid.cells.size() << " cells completed; matrix written to " << path << '\n';
  return ok > 0 ? exit_ok : exit_aborted;
}

/// Bootstrap, identify once and report the excitation and model-structure singular values.
inline int cmd_diagnose(const CliOptions & opt, std::ostream & out, std::ostream & err)
{
  RunConfig cfg;
  try {
    cfg = detail::load_for_cli(opt);
  } catch (const Error & e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }
  const PlantPtr plant = cfg.make_plant();
  const bool affine    = cfg.plant_type == RunConfig::PlantType::affine;

  std::optional<DataWindow> window;
  try {
    window = collect_bootstrap(*plant, cfg.x0, cfg.mpc, cfg.bootstrap_strategy());
  } catch (const ConfigError & e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const Error & e) {
    err << "bootstrap failed: " << e.what() << '\n';
    return exit_aborted;
  }

  const Matrix Z     = window->Z();
  const double sigma = pe_metric(*window);
  const double rel   = sigma / std::max(1.0, sigma_max(Z));
  out << std::setprecision(6);
  out << "plant: " << (affine ? "affine" : (cfg.augment ? "cstr (input-rate augmented)" : "cstr")) << ", n=" << plant->state_dim()
      << " m=" << plant->input_dim() << " p=" << plant->output_dim() << '\n';
  out << "bootstrap: " << (cfg.bootstrap.kind == BootstrapKind::model_based_mpc ? "model_based_mpc" : "excited_rollout")
      << ", N=" << cfg.mpc.N << '\n';
  out << "pe_metric sigma_min(Z): " << format_double(sigma) << (rel > 1e-12 ? "" : "  [RANK DEFICIENT: no persistent excitation]") << '\n';

  const Vector x_last = window->states().back();
  try {
    const AffineModel mdl = identify(*window, cfg.mpc.lambda);
    const AssumptionReport rep = assumption_report(mdl);
    auto flag = [](bool ok) { return ok ? "ok" : "LOW"; };
    out << "steady_state_sigma: " << format_double(rep.steady_state_sigma) << "  " << flag(rep.steady_state_ok) << '\n';
    out << "controllability_sigma: " << format_double(rep.controllability_sigma) << "  " << flag(rep.controllability_ok) << '\n';
    out << "nonsingular_sigma: " << format_double(rep.nonsingular_sigma) << "  " << flag(rep.nonsingular_ok) << '\n';
    const double id_err = id_error_diagnostic(mdl, *plant, x_last);
    out << "id_error at x_N: " << format_double(id_err) << '\n';
    if (affine) {
      out << "note: the plant is affine, so exact recovery is expected when Z has full row rank ("
          << (id_err <= 1e-8 ? "recovered" : "not recovered") << ")\n";
    }
  } catch (const SingularError & e) {
    out << "identification: singular regressor (" << e.what() << ")\n";
  }
  return exit_ok;
}

}  // namespace idmpc

#endif  // IDMPC__CLI_HPP_
