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

#include <iostream>

#include "CLI11.hpp"
#include "idmpc/cli.hpp"

int main(int argc, char ** argv)
{
  CLI::App app{"Adaptive tracking MPC with online least-squares identification"};
  app.require_subcommand(1);

  idmpc::CliOptions opt;
  std::uint64_t seed = 0;
  int workers        = 1;
  std::string lambda, window, out;

  auto add_common = [&](CLI::App * cmd) {
    cmd->add_option("--config", opt.config_path, "configuration file (default: built-in CSTR setup)")->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "output CSV path");
    cmd->add_option("--seed", seed, "seed for randomized bootstrap");
  };

  CLI::App * simulate = app.add_subcommand("simulate", "closed-loop run, writes a trace CSV");
  add_common(simulate);
  CLI::App * sweep = app.add_subcommand("sweep", "grid of runs over regularization and window length");
  add_common(sweep);
  sweep->add_option("--workers", workers, "parallel runs");
  sweep->add_option("--lambda", lambda, "comma-separated regularization values");
  sweep->add_option("--window", window, "comma-separated window lengths N");
  CLI::App * diagnose = app.add_subcommand("diagnose", "bootstrap, identify once, report singular values");
  add_common(diagnose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : idmpc::exit_config;
  }

  auto given = [](CLI::App * cmd, const char * name) { return cmd->count(name) > 0; };
  CLI::App * cmd = app.get_subcommands().front();
  if (given(cmd, "--out")) { opt.out = out; }
  if (given(cmd, "--seed")) { opt.seed = seed; }
  if (cmd == sweep) {
    if (given(sweep, "--workers")) { opt.workers = workers; }
    if (given(sweep, "--lambda")) { opt.lambda_list = lambda; }
    if (given(sweep, "--window")) { opt.window_list = window; }
  }

  if (cmd == simulate) { return idmpc::cmd_simulate(opt, std::cout, std::cerr); }
  if (cmd == sweep) { return idmpc::cmd_sweep(opt, std::cout, std::cerr); }
  return idmpc::cmd_diagnose(opt, std::cout, std::cerr);
}
