#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rswarm/error.hpp"
#include "rswarm/kernel.hpp"
#include "rswarm/measure.hpp"
#include "rswarm/measure_io.hpp"
#include "rswarm/parallel.hpp"
#include "rswarm/rng.hpp"

namespace rswarm {

namespace init {
struct UniformBall {
  double radius = 1.0;
};
struct UniformSphere {
  double radius = 1.0;
};
struct Gaussian {
  double sigma = 1.0;
};
/// Row-major N x dim coordinates.
struct Explicit {
  std::vector<double> coords;
};
} // namespace init

using InitSpec = std::variant<init::UniformBall, init::UniformSphere, init::Gaussian, init::Explicit>;

using SnapshotFn = std::function<void(double t, std::span<const double> positions)>;

struct SimConfig {
  KernelParams kernel;
  std::size_t n_particles = 400;
  double dt0 = 1e-3;
  double tol_velocity = 1e-7;
  /// Cap on step attempts, accepted or not.
  std::size_t max_steps = 5'000'000;
  std::uint64_t seed = 0;
  InitSpec init = init::UniformBall{1.0};
  double dt_min = 1e-12;
  double dt_max = 1e-1;
  /// dt doubles after this many consecutive accepted steps.
  std::size_t grow_after = 50;
  /// Energy history keeps every k-th accepted step plus the endpoints.
  std::size_t history_stride = 100;
  unsigned threads = 1;
  std::size_t snapshot_every = 0;
  SnapshotFn on_snapshot;

  void validate() const {
    kernel.validate();
    if (n_particles < 2) throw std::invalid_argument("simulation: need at least two particles");
    if (!(dt0 > 0.0)) throw std::invalid_argument("simulation: dt0 must be positive");
    if (!(tol_velocity > 0.0)) throw std::invalid_argument("simulation: tol_velocity must be positive");
    if (!(dt_min > 0.0) || !(dt_max >= dt_min)) throw std::invalid_argument("simulation: bad dt clamp");
    if (const auto* e = std::get_if<init::Explicit>(&init)) {
      if (e->coords.size() != n_particles * kernel.dim)
        throw std::invalid_argument("simulation: explicit initial coordinates must be N x dim");
    }
  }
};

struct EnergySample {
  double t;
  double energy;
};

struct SimResult {
  DiscreteMeasure final;
  std::vector<EnergySample> energy_history;
  bool converged = false;
  std::size_t steps = 0;  ///< accepted steps
  std::size_t rejected = 0;
  double final_diameter = 0.0;
  double final_time = 0.0;
  double final_energy = 0.0;
  double max_speed = 0.0;
};

/// Energy and particle velocities of an equal-weight configuration.
struct FlowState {
  double energy = 0.0;
  std::vector<double> velocity;  ///< -(1/N) sum_j grad K(X_i - X_j), row-major
};

/// One O(N^2) sweep: equal-weight off-diagonal energy and velocities, summed
/// per fixed chunk and reduced in chunk order.
inline FlowState evaluate_flow(std::span<const double> x, const KernelParams& k, unsigned threads = 1) {
  const std::size_t dim = k.dim;
  const std::size_t n = x.size() / dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto ranges = triangular_chunks(n);
  const PairKernel kernel(k);
  std::vector<std::vector<double>> vel(ranges.size());
  std::vector<double> part(ranges.size(), 0.0);
  for_each_chunk(std::span<const ChunkRange>(ranges), threads, [&](std::size_t c, ChunkRange r) {
    auto& v = vel[c];
    v.assign(n * dim, 0.0);
    double e = 0.0;
    double disp[16];
    std::vector<double> disp_heap(dim > 16 ? dim : 0);
    double* dv = dim > 16 ? disp_heap.data() : disp;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      const double* xi = x.data() + i * dim;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double* xj = x.data() + j * dim;
        double r2 = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
          dv[a] = xi[a] - xj[a];
          r2 += dv[a] * dv[a];
        }
        if (!(r2 >= k.min_radius * k.min_radius))
          throw CollisionError("particles " + std::to_string(i) + " and " + std::to_string(j) +
                               " collided (distance " + std::to_string(std::sqrt(r2)) + ")");
        const PairTerms pt = kernel(r2);
        e += pt.value;
        const double s = pt.radial * inv_n;
        for (std::size_t a = 0; a < dim; ++a) {
          v[i * dim + a] -= s * dv[a];
          v[j * dim + a] += s * dv[a];
        }
      }
    }
    part[c] = e;
  });
  FlowState out;
  out.velocity.assign(n * dim, 0.0);
  double e = 0.0;
  for (std::size_t c = 0; c < ranges.size(); ++c) {
    e += part[c];
    for (std::size_t q = 0; q < n * dim; ++q) out.velocity[q] += vel[c][q];
  }
  out.energy = 2.0 * e * inv_n * inv_n;
  return out;
}

inline double max_speed(std::span<const double> velocity, std::size_t dim) {
  double best = 0.0;
  for (std::size_t i = 0; i < velocity.size(); i += dim) {
    double s = 0.0;
    for (std::size_t a = 0; a < dim; ++a) s += velocity[i + a] * velocity[i + a];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

/// Seeded initial positions for a configuration.
inline std::vector<double> initial_positions(const SimConfig& cfg) {
  const std::size_t n = cfg.n_particles, dim = cfg.kernel.dim;
  if (const auto* e = std::get_if<init::Explicit>(&cfg.init)) return e->coords;
  Rng rng(mix_seed(cfg.seed, 0xD1));
  std::vector<double> x(n * dim);
  auto direction = [&](double* p) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (std::size_t a = 0; a < dim; ++a) {
        p[a] = rng.normal();
        norm2 += p[a] * p[a];
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t a = 0; a < dim; ++a) p[a] *= inv;
  };
  for (std::size_t i = 0; i < n; ++i) {
    double* p = x.data() + i * dim;
    if (const auto* b = std::get_if<init::UniformBall>(&cfg.init)) {
      direction(p);
      const double r = b->radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
      for (std::size_t a = 0; a < dim; ++a) p[a] *= r;
    } else if (const auto* s = std::get_if<init::UniformSphere>(&cfg.init)) {
      direction(p);
      for (std::size_t a = 0; a < dim; ++a) p[a] *= s->radius;
    } else if (const auto* g = std::get_if<init::Gaussian>(&cfg.init)) {
      for (std::size_t a = 0; a < dim; ++a) p[a] = g->sigma * rng.normal();
    }
  }
  return x;
}

struct StepOutcome {
  std::vector<double> positions;
  bool accepted = false;
  double d_energy = 0.0;
};

inline bool energy_accepts(double before, double after) { return after <= before + 1e-12 * std::abs(before); }

/// One forward-Euler step X_i <- X_i + dt v_i. On rejection the positions are
/// returned unchanged and the caller is expected to halve dt.
inline StepOutcome step(std::span<const double> positions, const SimConfig& cfg, double dt) {
  const FlowState now = evaluate_flow(positions, cfg.kernel, cfg.threads);
  std::vector<double> next(positions.begin(), positions.end());
  for (std::size_t q = 0; q < next.size(); ++q) next[q] += dt * now.velocity[q];
  const FlowState after = evaluate_flow(next, cfg.kernel, cfg.threads);
  const double de = after.energy - now.energy;
  if (energy_accepts(now.energy, after.energy)) return {std::move(next), true, de};
  return {std::vector<double>(positions.begin(), positions.end()), false, de};
}

/// Adaptive explicit Euler on the particle gradient flow until the fastest
/// particle is slower than tol_velocity or the attempt budget runs out.
inline SimResult run(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.kernel.dim;
  std::vector<double> x = initial_positions(cfg);
  FlowState state = evaluate_flow(x, cfg.kernel, cfg.threads);

  SimResult res{DiscreteMeasure::uniform(dim, x), {}};
  res.energy_history.push_back({0.0, state.energy});
  double dt = std::clamp(cfg.dt0, cfg.dt_min, cfg.dt_max);
  double t = 0.0;
  std::size_t streak = 0;
  std::vector<double> trial(x.size());
  if (cfg.snapshot_every && cfg.on_snapshot) cfg.on_snapshot(t, x);

  for (std::size_t attempt = 0; attempt < cfg.max_steps; ++attempt) {
    if (max_speed(state.velocity, dim) < cfg.tol_velocity) {
      res.converged = true;
      break;
    }
    for (std::size_t q = 0; q < x.size(); ++q) trial[q] = x[q] + dt * state.velocity[q];
    FlowState next = evaluate_flow(trial, cfg.kernel, cfg.threads);
    if (energy_accepts(state.energy, next.energy)) {
      x.swap(trial);
      state = std::move(next);
      t += dt;
      ++res.steps;
      if (res.steps % cfg.history_stride == 0) res.energy_history.push_back({t, state.energy});
      if (cfg.snapshot_every && cfg.on_snapshot && res.steps % cfg.snapshot_every == 0) cfg.on_snapshot(t, x);
      if (++streak >= cfg.grow_after) {
        dt = std::min(2.0 * dt, cfg.dt_max);
        streak = 0;
      }
    } else {
      ++res.rejected;
      streak = 0;
      if (dt <= cfg.dt_min) break;  // stalled: no admissible step left
      dt = std::max(0.5 * dt, cfg.dt_min);
    }
  }

  if (res.energy_history.back().t != t) res.energy_history.push_back({t, state.energy});
  res.max_speed = max_speed(state.velocity, dim);
  if (!res.converged && res.max_speed < cfg.tol_velocity) res.converged = true;
  res.final = DiscreteMeasure::uniform(dim, std::move(x));
  res.final_diameter = diameter(res.final);
  res.final_time = t;
  res.final_energy = state.energy;
  return res;
}

/// Snapshot sink writing CSV frames: one row "t,x1,...,xn" per particle.
inline SnapshotFn csv_snapshot_writer(std::ostream& os, std::size_t dim) {
  os << 't';
  for (std::size_t a = 0; a < dim; ++a) os << ",x" << (a + 1);
  os << '\n';
  return [&os, dim](double t, std::span<const double> x) {
    const std::string ts = format_double(t);
    for (std::size_t i = 0; i < x.size(); i += dim) {
      os << ts;
      for (std::size_t a = 0; a < dim; ++a) os << ',' << format_double(x[i + a]);
      os << '\n';
    }
  };
}

} // namespace rswarm
