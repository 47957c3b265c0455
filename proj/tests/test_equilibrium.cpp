#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rswarm/equilibrium.hpp"
#include "rswarm/error.hpp"
#include "rswarm/shapes.hpp"
#include "support.hpp"

using namespace rswarm;
using namespace rswarm::testing;

namespace {

// bisection on the shift tau, independent of the breakpoint sweep
std::vector<double> project_by_bisection(const std::vector<double>& y, double cap) {
  auto mass = [&](double tau) {
    double s = 0.0;
    for (double v : y) s += std::clamp(v - tau, 0.0, cap);
    return s;
  };
  double lo = *std::min_element(y.begin(), y.end()) - 1.0, hi = *std::max_element(y.begin(), y.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::clamp(y[i] - 0.5 * (lo + hi), 0.0, cap);
  return out;
}

DiscreteMeasure regular_polygon(std::size_t k, double radius) {
  std::vector<double> coords;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    coords.push_back(radius * std::cos(t));
    coords.push_back(radius * std::sin(t));
  }
  return DiscreteMeasure::uniform(2, std::move(coords));
}

EquilibriumOptions symmetric_start() {
  EquilibriumOptions opt;
  opt.restarts = 0;
  return opt;
}

} // namespace

TEST(Projection, MatchesBisectionOracleProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 60;
    const double cap = rng.uniform(1.0 / static_cast<double>(n) + 1e-3, 1.0);
    std::vector<double> y(n);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const double offset = rng.uniform(-1e3, 1e3);
    for (double& v : y) v = offset + scale * rng.normal();
    if (trial % 7 == 0) std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n / 2), y[0]);  // ties
    std::vector<double> out(n);
    project_capped_simplex(y, cap, out);
    const auto ref = project_by_bisection(y, cap);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(out[i], ref[i], 1e-9 * std::max(1.0, cap));
      EXPECT_GE(out[i], 0.0);
      EXPECT_LE(out[i], cap);
      sum += out[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(Projection, InfeasibleCap) {
  std::vector<double> y{0.1, 0.2, 0.3}, out(3);
  EXPECT_THROW(project_capped_simplex(y, 0.3, out), std::invalid_argument);
  EXPECT_NO_THROW(project_capped_simplex(y, 1.0 / 3.0, out));
}

TEST(Equilibrium, TwoPoints) {
  for (double lambda : {0.3, 1.0, 2.5}) {
    const auto res = solve_equilibrium(DiscreteMeasure::uniform(3, {0, 0, 0, 0.7, 0.1, 0}), lambda, symmetric_start());
    EXPECT_NEAR(res.weights[0], 0.5, 1e-12);
    EXPECT_NEAR(res.weights[1], 0.5, 1e-12);
    EXPECT_LE(res.kkt_residual, 1e-8);
  }
}

TEST(Equilibrium, EquilateralTriangle) {
  const auto res = solve_equilibrium(regular_polygon(3, 1.0 / std::sqrt(3.0)), 1.0, symmetric_start());
  for (double w : res.weights) EXPECT_NEAR(w, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(res.energy, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(res.capacity, 1.5, 1e-12);
}

// brute force over the 1e-3 simplex grid
TEST(Equilibrium, CollinearTripleMatchesGridSearch) {
  const auto cloud = DiscreteMeasure::uniform(3, {0, 0, 0, 0.4, 0, 0, 1, 0, 0});
  auto f = [](double a, double b, double c) { return 2.0 * (a * b / 0.4 + a * c / 1.0 + b * c / 0.6); };
  for (double cap : {1.0, 0.5, 0.45}) {
    double best = kInfinity;
    std::vector<std::array<double, 3>> argmins;
    for (int i = 0; i <= 1000; ++i)
      for (int j = 0; i + j <= 1000; ++j) {
        const double a = i * 1e-3, b = j * 1e-3, c = (1000 - i - j) * 1e-3;
        if (a > cap + 1e-12 || b > cap + 1e-12 || c > cap + 1e-12) continue;
        const double v = f(a, b, c);
        if (v < best - 1e-12) {
          best = v;
          argmins.clear();
        }
        if (v <= best + 1e-12) argmins.push_back({a, b, c});
      }
    EquilibriumOptions opt;
    opt.cap = cap;
    const auto res = solve_equilibrium(cloud, 1.0, opt);
    EXPECT_NEAR(res.energy, best, 5e-3) << "cap " << cap;
    const bool near_some = std::any_of(argmins.begin(), argmins.end(), [&](const auto& g) {
      for (int k = 0; k < 3; ++k)
        if (std::abs(res.weights[k] - g[k]) > 2e-3) return false;
      return true;
    });
    EXPECT_TRUE(near_some) << "cap " << cap << ": " << res.weights[0] << ' ' << res.weights[1] << ' ' << res.weights[2];
  }
}

TEST(Equilibrium, SphereCapacityCloseToHalf) {
  const auto cloud = sample(ShapeSpec{shape::Sphere{3, 0.5}, 2000, 7});
  const auto res = solve_equilibrium(cloud, 1.0, symmetric_start());
  EXPECT_NEAR(res.capacity, 0.5, 0.02 * 0.5);
  EXPECT_LE(res.kkt_residual, 1e-6);
  EXPECT_LT(res.capacity, 1.0);
}

TEST(Equilibrium, ResultInvariants) {
  Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cloud = random_measure(rng, 2, 30 + 10 * trial, 0.5, true);
    EquilibriumOptions opt;
    opt.seed = rng.next();
    const auto res = solve_equilibrium(cloud, 0.8, opt);
    double sum = 0.0;
    for (std::size_t i = 0; i < res.weights.size(); ++i) {
      EXPECT_GE(res.weights[i], 0.0);
      EXPECT_LE(res.weights[i], res.cap);
      EXPECT_EQ(res.support_mask[i], res.weights[i] > 1e-10);
      sum += res.weights[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
    EXPECT_NEAR(res.capacity * res.energy, 1.0, 1e-12);
    EXPECT_LE(res.kkt_residual, 1e-6);
  }
}

TEST(Equilibrium, PermutationInvariance) {
  Rng rng(33);
  const auto cloud = random_measure(rng, 3, 120, 0.5, true);
  std::vector<std::size_t> perm(cloud.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
  std::vector<double> coords;
  for (auto i : perm) coords.insert(coords.end(), cloud.point(i).begin(), cloud.point(i).end());
  const auto permuted = DiscreteMeasure::uniform(3, coords);
  const auto a = solve_equilibrium(cloud, 1.0, symmetric_start());
  const auto b = solve_equilibrium(permuted, 1.0, symmetric_start());
  EXPECT_NEAR(a.energy, b.energy, 1e-9);
  // the objective at the permuted weights is the same
  std::vector<double> w(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) w[i] = a.weights[perm[i]];
  EXPECT_LE(rel_err(riesz_energy(equilibrium_measure(permuted, EquilibriumResult{w}), 1.0), a.energy), 1e-11);
}

TEST(Equilibrium, HomogeneityUnderScaling) {
  Rng rng(34);
  const auto cloud = random_measure(rng, 2, 150, 0.5, true);
  for (double s : {0.5, 2.0, 3.7}) {
    for (double lambda : {0.5, 1.3}) {
      EquilibriumOptions opt = symmetric_start();
      const auto a = solve_equilibrium(cloud, lambda, opt);
      opt.tol *= std::pow(s, -lambda);  // KKT slack scales with the potential
      const auto b = solve_equilibrium(dilate(cloud, 1.0 / s), lambda, opt);
      EXPECT_LE(rel_err(b.capacity, std::pow(s, lambda) * a.capacity), 1e-9) << "s=" << s << " lambda=" << lambda;
    }
  }
}

TEST(Equilibrium, UniformIsStationaryOnSymmetricClouds) {
  for (std::size_t k : {4u, 7u, 12u, 31u}) {
    const auto poly = regular_polygon(k, 0.5);
    const RieszMatrix m(poly, 1.0, true);
    std::vector<double> w(k, 1.0 / static_cast<double>(k)), phi(k);
    m.multiply(w, phi);
    EXPECT_LE(kkt_residual(w, phi, 1.25 / static_cast<double>(k), 1e-8).residual, 1e-8);
  }
}

TEST(Equilibrium, RefinementConsistency) {
  const auto cloud = sample(ShapeSpec{shape::Sphere{3, 0.5}, 4000, 1});
  const double oracle = 1.0 / sphere_energy_closed_form(3, 0.5, 1.0);
  double prev = kInfinity;
  for (std::size_t n : {500u, 1000u, 2000u, 4000u}) {
    std::vector<double> c(cloud.coords().begin(), cloud.coords().begin() + static_cast<std::ptrdiff_t>(3 * n));
    const auto res = solve_equilibrium(DiscreteMeasure::uniform(3, c), 1.0, symmetric_start());
    const double gap = std::abs(res.capacity - oracle);
    EXPECT_LT(gap, prev) << "N=" << n;
    prev = gap;
  }
}

TEST(Equilibrium, MonotoneUnderInclusionWithFixedCap) {
  Rng rng(35);
  const auto big = random_measure(rng, 3, 400, 0.5, true);
  const std::vector<double> small_coords(big.coords().begin(), big.coords().begin() + 3 * 200);
  EquilibriumOptions opt;
  opt.cap = 0.01;
  const auto small = solve_equilibrium(DiscreteMeasure::uniform(3, small_coords), 1.0, opt);
  auto warm = small.weights;
  warm.resize(400, 0.0);
  opt.initial_weights = warm;
  const auto grown = solve_equilibrium(big, 1.0, opt);
  EXPECT_GE(grown.capacity, small.capacity - 1e-8);
}

TEST(Equilibrium, DenseAndStreamedAgree) {
  Rng rng(36);
  const auto cloud = random_measure(rng, 3, 300, 0.5, true);
  EquilibriumOptions opt;
  opt.force_materialize = 1;
  const auto a = solve_equilibrium(cloud, 1.0, opt);
  opt.force_materialize = 0;
  const auto b = solve_equilibrium(cloud, 1.0, opt);
  opt.threads = 4;
  const auto c = solve_equilibrium(cloud, 1.0, opt);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(b.weights, c.weights);
  EXPECT_EQ(a.energy, c.energy);
}

TEST(Equilibrium, Errors) {
  const auto two = DiscreteMeasure::uniform(1, {0.0, 1.0});
  EquilibriumOptions opt;
  opt.cap = 0.4;
  EXPECT_THROW(solve_equilibrium(two, 1.0, opt), std::invalid_argument);
  EXPECT_THROW(solve_equilibrium(DiscreteMeasure::uniform(1, {0.0}), 1.0), std::invalid_argument);
  EXPECT_THROW(solve_equilibrium(DiscreteMeasure::uniform(1, {0.0, 0.0}), 1.0), DomainError);
  EXPECT_THROW(solve_equilibrium(two, 0.0), std::invalid_argument);
}

TEST(SphereOracle, MatchesClosedFormProperty) {
  for (unsigned n = 2; n <= 40; ++n) {
    for (double lambda : {0.05, 0.3, 0.5, 1.0, 1.7, 2.9, 5.5}) {
      if (lambda >= n - 1.0) continue;
      for (double r : {0.5, 1.3}) {
        EXPECT_LE(rel_err(sphere_energy_oracle(n, r, lambda), sphere_energy_closed_form(n, r, lambda)), 1e-9)
            << "n=" << n << " lambda=" << lambda;
      }
    }
  }
}

TEST(SphereOracle, Examples) {
  EXPECT_NEAR(sphere_energy_oracle(3, 0.5, 1.0), 2.0, 1e-12);
  EXPECT_NEAR(sphere_energy_oracle(5, 0.7, 1e-6), 1.0, 1e-5);
  // high dimension approaches 2^(lambda/2)
  EXPECT_NEAR(sphere_energy_oracle(400, 0.5, 1.0), std::sqrt(2.0), 2e-3);
  EXPECT_THROW(sphere_energy_oracle(3, 0.5, 2.0), DomainError);
  EXPECT_THROW(ball_capacity_oracle(3, 0.5, 1.5), DomainError);
  EXPECT_NEAR(ball_capacity_oracle(3, 0.5, 1.0), 0.5, 1e-12);
}

TEST(SphereOracle, CapacitiesIncreaseBelowLimit) {
  double prev = 0.0;
  for (unsigned n = 3; n <= 40; ++n) {
    const double c = ball_capacity_oracle(n, 0.5, 1.0);
    EXPECT_GT(c, prev);
    EXPECT_LT(c, 1.0 / std::sqrt(2.0));
    prev = c;
  }
}

TEST(PotentialBound, Examples) {
  const auto cloud = sample(ShapeSpec{shape::Sphere{3, 0.5}, 1500, 8});
  const auto res = solve_equilibrium(cloud, 1.0, symmetric_start());
  std::vector<std::vector<double>> shell;
  Rng rng(37);
  for (int i = 0; i < 50; ++i) shell.push_back(random_vector(rng, 3, 5.0, 5.0));
  EXPECT_LE(potential_bound_check(res, cloud, 1.0, shell), 1e-3);
  const auto mu = equilibrium_measure(cloud, res);
  // every point of the sphere sits at distance 0.5 from the centre
  EXPECT_NEAR(potential_at(mu, 1.0, std::vector<double>{0, 0, 0}), 2.0, 1e-12);
  EXPECT_NEAR(res.energy, 2.0, 0.03 * 2.0);

  const auto pair = DiscreteMeasure::uniform(3, {0, 0, 0, 1, 0, 0});
  const auto pr = solve_equilibrium(pair, 1.0, symmetric_start());
  const std::vector<std::vector<double>> far{{1e3, 0, 0}};
  EXPECT_LE(potential_bound_check(pr, pair, 1.0, far), 0.0);
  EXPECT_THROW(potential_bound_check(res, cloud, 0.5, shell), std::invalid_argument);
}

TEST(EquilibriumJson, Keys) {
  const auto res = solve_equilibrium(DiscreteMeasure::uniform(1, {0.0, 1.0}), 1.0, symmetric_start());
  const auto j = to_json(res);
  for (const char* key : {"lambda", "energy", "capacity", "kkt_residual", "weights"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j.size(), 5u);
}

TEST(Equilibrium, Deterministic) {
  Rng rng(38);
  const auto cloud = random_measure(rng, 2, 200, 0.5, true);
  EquilibriumOptions opt;
  opt.seed = 5;
  const auto a = solve_equilibrium(cloud, 1.0, opt);
  const auto b = solve_equilibrium(cloud, 1.0, opt);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.energy, b.energy);
}
