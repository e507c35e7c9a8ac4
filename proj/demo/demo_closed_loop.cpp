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

// Closed-loop walkthrough: identify-and-control the reactor from its default configuration and
// print a decimated trajectory together with the per-solve diagnostics.
//
//   demo_closed_loop [config] [stride]

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include <idmpc/analysis.hpp>
#include <idmpc/config.hpp>

using namespace idmpc;

int main(int argc, char ** argv)
{
  try {
    const RunConfig cfg = argc > 1 ? load_run_config(argv[1]) : default_run_config();
    const long stride   = argc > 2 ? std::atol(argv[2]) : 100;
    const PlantPtr plant = cfg.make_plant();

    std::cout << "plant n=" << plant->state_dim() << " m=" << plant->input_dim() << " p=" << plant->output_dim()
              << ", L=" << cfg.mpc.L << " N=" << cfg.mpc.N << " lambda=" << cfg.mpc.lambda << ", y_ref=" << cfg.mpc.y_ref.transpose()
              << "\n\n";

    const ClosedLoopTrace tr = run_closed_loop(*plant, cfg.x0, cfg.mpc, cfg.bootstrap_strategy(), cfg.T_end);

    std::cout << std::setw(6) << "t" << std::setw(14) << "y1" << std::setw(14) << "V" << std::setw(14) << "id_error"
              << std::setw(8) << "frozen" << '\n';
    std::size_t s = 0;
    for (long t = 0; t < static_cast<long>(tr.y.size()); t += std::max(1L, stride)) {
      while (s + 1 < tr.solves.size() && tr.solves[s + 1].t <= t) { ++s; }
      std::cout << std::setw(6) << t << std::setw(14) << tr.y[static_cast<std::size_t>(t)][0];
      if (!tr.solves.empty() && tr.solves[s].t <= t) {
        const SolveRecord & r = tr.solves[s];
        std::cout << std::setw(14) << r.V << std::setw(14) << r.id_error << std::setw(8) << (r.frozen ? "yes" : "no");
      }
      std::cout << '\n';
    }

    std::cout << "\nstatus: " << to_string(tr.status) << (tr.message.empty() ? "" : " (" + tr.message + ")") << '\n'
              << "solves: " << tr.solves.size() << '\n'
              << "tracking error: " << tracking_error(tr, cfg.mpc.y_ref, tr.final_time()) << '\n';
    if (tr.completed() && !tr.solves.empty()) {
      const PlantEquilibrium eq = plant_equilibrium(*plant, cfg.mpc, tr.x.back());
      std::cout << "optimal reachable equilibrium: x=" << eq.x_sr.transpose() << " y=" << eq.y_sr.transpose()
                << "\nfinal distance |x_T - x_sr|: " << (tr.x.back() - eq.x_sr).norm() << '\n';
    }
    return tr.completed() ? 0 : 2;
  } catch (const ConfigError & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
}
