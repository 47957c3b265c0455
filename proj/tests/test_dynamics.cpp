#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rswarm/dynamics.hpp"
#include "rswarm/error.hpp"
#include "support.hpp"

using namespace rswarm;
using namespace rswarm::testing;

namespace {

SimConfig pair_config(KernelVariant v, double alpha, double lambda) {
  SimConfig cfg;
  cfg.kernel = {alpha, lambda, 2, v};
  cfg.n_particles = 2;
  cfg.init = init::Explicit{{-0.3, 0.1, 0.9, 0.4}};
  cfg.tol_velocity = 1e-9;
  return cfg;
}

std::vector<double> polygon(std::size_t k, double radius, double phase) {
  std::vector<double> x;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    x.push_back(radius * std::cos(t));
    x.push_back(radius * std::sin(t));
  }
  return x;
}

SimConfig small_swarm(std::uint64_t seed) {
  SimConfig cfg;
  cfg.kernel = {4.0, 1.0, 2, KernelVariant::Power};
  cfg.n_particles = 40;
  cfg.seed = seed;
  cfg.init = init::UniformBall{0.5};
  cfg.max_steps = 3000;
  cfg.history_stride = 1;
  return cfg;
}

} // namespace

TEST(Dynamics, TwoParticlesPowerKernel) {
  const auto res = run(pair_config(KernelVariant::Power, 2.0, 1.0));
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.final_diameter, std::cbrt(0.5), 1e-4);
}

TEST(Dynamics, TwoParticlesNormalizedKernel) {
  const auto res = run(pair_config(KernelVariant::Normalized, 3.0, 1.5));
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.final_diameter, 1.0, 1e-4);
}

TEST(Dynamics, StepPreservesPolygonSymmetry) {
  SimConfig cfg;
  cfg.kernel = {3.0, 1.0, 2, KernelVariant::Power};
  cfg.n_particles = 7;
  const auto x = polygon(7, 0.3, 0.2);
  const auto out = step(x, cfg, 1e-2);
  ASSERT_TRUE(out.accepted);
  // still a regular 7-gon centred at the origin with the same phase
  const double r = std::hypot(out.positions[0], out.positions[1]);
  const auto expect = polygon(7, r, 0.2);
  for (std::size_t q = 0; q < x.size(); ++q) EXPECT_NEAR(out.positions[q], expect[q], 1e-13);
  EXPECT_GT(r, 0.3);  // the 0.3-gon is inside the zero-force scale and expands
}

TEST(Dynamics, EnergyNonIncreasingAlongHistory) {
  const auto res = run(small_swarm(3));
  ASSERT_GT(res.energy_history.size(), 10u);
  for (std::size_t i = 1; i < res.energy_history.size(); ++i) {
    const auto& a = res.energy_history[i - 1];
    const auto& b = res.energy_history[i];
    EXPECT_LE(b.energy, a.energy + 1e-12 * std::abs(a.energy));
    EXPECT_GE(b.t, a.t);
  }
}

TEST(Dynamics, CentreOfMassConserved) {
  auto cfg = small_swarm(4);
  const auto x0 = initial_positions(cfg);
  const auto res = run(cfg);
  for (std::size_t a = 0; a < 2; ++a) {
    double c0 = 0.0, c1 = 0.0;
    for (std::size_t i = 0; i < cfg.n_particles; ++i) {
      c0 += x0[i * 2 + a];
      c1 += res.final.point(i)[a];
    }
    EXPECT_NEAR(c0 / cfg.n_particles, c1 / cfg.n_particles, 1e-8);
  }
}

TEST(Dynamics, VelocityIsScaledEnergyGradient) {
  Rng rng(41);
  for (auto v : {KernelVariant::Power, KernelVariant::Normalized, KernelVariant::LogRepulsion}) {
    const KernelParams k{3.5, 1.2, 3, v};
    const std::size_t n = 12;
    std::vector<double> x;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = random_vector(rng, 3, 0.1, 1.0);
      x.insert(x.end(), p.begin(), p.end());
    }
    const auto st = evaluate_flow(x, k);
    const double h = 1e-6;
    for (std::size_t q = 0; q < x.size(); ++q) {
      auto xp = x, xm = x;
      xp[q] += h;
      xm[q] -= h;
      const double de = (evaluate_flow(xp, k).energy - evaluate_flow(xm, k).energy) / (2.0 * h);
      // E = N^-2 sum_{i != j} K, v_i = -N^-1 sum_j grad K  =>  v = -(N / 2) dE/dx
      EXPECT_NEAR(st.velocity[q], -0.5 * static_cast<double>(n) * de, 1e-6 * (1.0 + std::abs(st.velocity[q])));
    }
    const auto mu = DiscreteMeasure::uniform(3, x);
    EXPECT_NEAR(st.energy, energy(mu, k), 1e-12 * std::abs(st.energy));
  }
}

TEST(Dynamics, BitIdenticalAcrossRunsAndThreads) {
  auto cfg = small_swarm(5);
  cfg.max_steps = 500;
  const auto a = run(cfg);
  const auto b = run(cfg);
  cfg.threads = 3;
  const auto c = run(cfg);
  EXPECT_EQ(a.final, b.final);
  EXPECT_EQ(a.final, c.final);
  EXPECT_EQ(a.final_energy, c.final_energy);
  EXPECT_EQ(a.steps, c.steps);
}

TEST(Dynamics, NonConvergenceIsReportedNotThrown) {
  auto cfg = small_swarm(6);
  cfg.max_steps = 5;
  const auto res = run(cfg);
  EXPECT_FALSE(res.converged);
  EXPECT_LE(res.steps + res.rejected, 5u);
}

TEST(Dynamics, CollisionAborts) {
  SimConfig cfg;
  cfg.n_particles = 3;
  cfg.init = init::Explicit{{0.0, 0.0, 0.5, 0.5, 0.5, 0.5}};
  EXPECT_THROW(run(cfg), CollisionError);
}

TEST(Dynamics, ConfigValidation) {
  SimConfig cfg;
  cfg.n_particles = 1;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = SimConfig{};
  cfg.dt0 = 0.0;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = SimConfig{};
  cfg.tol_velocity = -1.0;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = SimConfig{};
  cfg.init = init::Explicit{{0.0, 1.0}};
  EXPECT_THROW(run(cfg), std::invalid_argument);
}

TEST(Dynamics, InitialisersRespectTheirGeometry) {
  SimConfig cfg;
  cfg.kernel.dim = 3;
  cfg.n_particles = 500;
  cfg.init = init::UniformBall{0.7};
  auto x = initial_positions(cfg);
  for (std::size_t i = 0; i < 500; ++i) EXPECT_LE(std::sqrt(x[3 * i] * x[3 * i] + x[3 * i + 1] * x[3 * i + 1] + x[3 * i + 2] * x[3 * i + 2]), 0.7);
  cfg.init = init::UniformSphere{0.7};
  x = initial_positions(cfg);
  for (std::size_t i = 0; i < 500; ++i)
    EXPECT_NEAR(std::sqrt(x[3 * i] * x[3 * i] + x[3 * i + 1] * x[3 * i + 1] + x[3 * i + 2] * x[3 * i + 2]), 0.7, 1e-14);
  cfg.init = init::Gaussian{0.2};
  x = initial_positions(cfg);
  double s2 = 0.0;
  for (double c : x) s2 += c * c;
  EXPECT_NEAR(std::sqrt(s2 / static_cast<double>(x.size())), 0.2, 0.01);
}

TEST(Dynamics, SnapshotFrames) {
  std::ostringstream os;
  auto cfg = small_swarm(7);
  cfg.n_particles = 3;
  cfg.max_steps = 20;
  cfg.snapshot_every = 10;
  cfg.on_snapshot = csv_snapshot_writer(os, 2);
  const auto res = run(cfg);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x1,x2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3u * (1 + res.steps / 10));
}
