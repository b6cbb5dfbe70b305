// Demo: relaxation of the bipolar device toward local equilibrium.
//
// Runs the deterministic kinetic solver at two Knudsen numbers on a reduced
// grid and prints the L1 distance between each species' distribution and its
// local equilibrium rho_i(x) M_i(v) as time advances.  The saturated distance
// scales like the Knudsen number itself, which is the hallmark of the
// asymptotic-preserving discretization.

#include <cstdio>

#include "bkap/run_config.hpp"
#include "bkap/runner.hpp"

int main() {
  using namespace bkap;
  const double eps_values[2] = {1e-3, 1e-4};
  SpeciesPair<double> saturated[2];

  for (int run = 0; run < 2; ++run) {
    RunConfig cfg = preset_config(Experiment::kTest1a);
    cfg.epsilon = eps_values[run];
    cfg.n_cells = 50;
    cfg.n_v = 12;
    cfg.dt = 4e-6;
    cfg.t_final = 0.01;
    validate_config(cfg);

    const ProblemSetup setup = experiment_setup(cfg);
    KineticSolver solver(setup.mesh, setup.params, setup.inputs, /*z=*/0.0, setup.cfg,
                         setup.nv_electrons, setup.nv_holes);

    std::printf("epsilon = %.0e\n", cfg.epsilon);
    std::printf("  %-12s %-14s %-14s\n", "time", "electron dist", "hole dist");
    for (int step = 1; step <= setup.n_steps; ++step) {
      solver.step();
      if (step % 500 == 0) {
        const SpeciesPair<double> d = equilibrium_distance(solver);
        std::printf("  %-12.2e %-14.6e %-14.6e\n", solver.state().time, d[0], d[1]);
      }
    }
    saturated[run] = equilibrium_distance(solver);
  }

  std::printf("\nsaturated distance ratio (eps 1e-3 / 1e-4): electrons %.2f, holes %.2f\n",
              saturated[0][0] / saturated[1][0], saturated[0][1] / saturated[1][1]);
  std::printf("a ratio near 10 shows the O(epsilon) approach to the diffusive limit\n");
  return 0;
}
