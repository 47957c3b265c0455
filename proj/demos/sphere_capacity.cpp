// Capacity of a sampled sphere of radius 1/2 in R^3 versus the closed form.
#include <cstdio>

#include "rswarm/equilibrium.hpp"
#include "rswarm/shapes.hpp"

int main() {
  using namespace rswarm;
  const auto cloud = sample(ShapeSpec{shape::Sphere{3, 0.5}, 2000, 7});
  EquilibriumOptions opt;
  opt.restarts = 0;
  const auto res = solve_equilibrium(cloud, 1.0, opt);
  std::printf("capacity=%.6f oracle=%.6f kkt=%.2e iterations=%zu\n", res.capacity,
              1.0 / sphere_energy_oracle(3, 0.5, 1.0), res.kkt_residual, res.iterations);
}
