// Two particles under the power kernel settle at the zero-force distance.
#include <cstdio>

#include "rswarm/dynamics.hpp"

int main() {
  using namespace rswarm;
  SimConfig cfg;
  cfg.kernel = {2.0, 1.0, 2, KernelVariant::Power};
  cfg.n_particles = 2;
  cfg.init = init::Explicit{{0.0, 0.0, 1.5, 0.0}};
  cfg.tol_velocity = 1e-10;
  const auto res = run(cfg);
  std::printf("converged=%d steps=%zu distance=%.10f expected=%.10f\n", res.converged, res.steps,
              res.final_diameter, zero_force_radius(cfg.kernel));
}
