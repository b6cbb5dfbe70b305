// Demo: density statistics under a random collision kernel.
//
// The collision kernels are sigma_i = 2 + z/2 with z uniform on [-1, 1].  The
// same problem is solved twice: intrusively with the chaos-expansion solver
// (coupled mode system) and non-intrusively by collocation (independent
// deterministic runs at quadrature nodes).  The two mean / standard-deviation
// profiles agree to high order in the expansion size.

#include <cstdio>

#include "bkap/run_config.hpp"
#include "bkap/runner.hpp"

int main() {
  using namespace bkap;
  RunConfig cfg = preset_config(Experiment::kTest2b);
  cfg.n_cells = 32;
  cfg.n_v = 8;
  cfg.dt = 2e-5;
  cfg.t_final = 5e-3;
  cfg.order = 4;
  cfg.n_colloc = 8;
  cfg.n_z_quad = 8;
  validate_config(cfg);

  const ProblemSetup setup = experiment_setup(cfg);
  std::printf("chaos expansion with %d modes vs %d-node collocation, %d steps\n\n", cfg.order,
              cfg.n_colloc, setup.n_steps);
  const StatsField sg = run_sg(setup, cfg.order, cfg.n_z_quad);
  const StatsField sc = run_collocation(setup, cfg.n_colloc);

  std::printf("%-8s %-13s %-13s %-13s %-13s\n", "x", "mean(rho_1)", "sd(rho_1)", "mean(rho_2)",
              "sd(rho_2)");
  for (int i = 3; i < setup.mesh.n_cells; i += 8) {
    const double x = setup.mesh.centers[i];
    std::printf("%-8.4f %-13.6e %-13.6e %-13.6e %-13.6e   (chaos)\n", x, sg.rho[0].mean[i],
                sg.rho[0].sd[i], sg.rho[1].mean[i], sg.rho[1].sd[i]);
    std::printf("%-8s %-13.6e %-13.6e %-13.6e %-13.6e   (colloc)\n", "", sc.rho[0].mean[i],
                sc.rho[0].sd[i], sc.rho[1].mean[i], sc.rho[1].sd[i]);
  }

  const StatsErrors errs = error_mean_sd(sg, sc, setup.mesh.dx);
  std::printf("\nL2(x) differences: rho_1 mean %.3e sd %.3e | rho_2 mean %.3e sd %.3e\n",
              errs.rho[0].e_mean, errs.rho[0].e_sd, errs.rho[1].e_mean, errs.rho[1].e_sd);
  return 0;
}
