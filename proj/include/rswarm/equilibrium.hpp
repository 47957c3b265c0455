#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "json.hpp"
#include "rswarm/error.hpp"
#include "rswarm/measure.hpp"
#include "rswarm/parallel.hpp"
#include "rswarm/rng.hpp"

namespace rswarm {

/// Euclidean projection of y onto {0 <= w <= cap, sum w = 1}.
///
/// The projection is clip(y - tau, 0, cap) for the unique tau making the sum
/// one; tau is located exactly by sweeping the sorted breakpoints y_i and
/// y_i - cap from above.
inline void project_capped_simplex(std::span<const double> y, double cap, std::span<double> out) {
  const std::size_t n = y.size();
  if (out.size() != n) throw std::invalid_argument("projection: size mismatch");
  if (!(cap > 0.0) || cap * static_cast<double>(n) < 1.0)
    throw std::invalid_argument("projection: capped simplex is empty (cap * N < 1)");

  // (breakpoint, +1 entering the linear regime / -1 saturating at cap)
  // the projection commutes with shifts of y; centring keeps the breakpoints
  // small next to cap when y carries a large common offset
  double shift = 0.0;
  for (double v : y) shift += v;
  shift /= static_cast<double>(n);
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * n);
  for (double v : y) {
    events.emplace_back(v - shift, +1);
    events.emplace_back(v - shift - cap, -1);
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  double tau = events.front().first;
  double mass = 0.0;
  long slope = 0;
  bool found = false;
  for (const auto& [at, kind] : events) {
    const double next = mass + static_cast<double>(slope) * (tau - at);
    if (next >= 1.0 && slope > 0) {
      tau -= (1.0 - mass) / static_cast<double>(slope);
      found = true;
      break;
    }
    mass = next;
    tau = at;
    slope += kind;
  }
  if (!found) tau -= (1.0 - mass) / static_cast<double>(std::max<long>(slope, 1));
  for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp((y[i] - shift) - tau, 0.0, cap);
}

/// Off-diagonal Riesz interaction matrix M_ij = |x_i - x_j|^-lambda, M_ii = 0,
/// either stored densely or regenerated row by row on every product.
class RieszMatrix {
public:
  RieszMatrix(const DiscreteMeasure& cloud, double lambda, bool materialize, unsigned threads = 1)
      : cloud_(cloud), lambda_(lambda), threads_(threads), n_(cloud.size()) {
    if (!(lambda > 0.0)) throw std::invalid_argument("riesz matrix: lambda must be positive");
    if (materialize) {
      dense_.assign(n_ * n_, 0.0);
      const HalfPower power(-0.5 * lambda_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double r2 = squared_distance(cloud_.point(i), cloud_.point(j));
          if (r2 == 0.0) throw DomainError("equilibrium: cloud points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
          const double v = power(r2);
          dense_[i * n_ + j] = v;
          dense_[j * n_ + i] = v;
        }
      }
    } else {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j)
          if (squared_distance(cloud_.point(i), cloud_.point(j)) == 0.0)
            throw DomainError("equilibrium: cloud points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    }
  }

  std::size_t size() const { return n_; }
  bool materialized() const { return !dense_.empty(); }

  /// out = M w; each row is a fixed-order dot product.
  void multiply(std::span<const double> w, std::span<double> out) const {
    const auto ranges = even_chunks(n_);
    const HalfPower power(-0.5 * lambda_);
    for_each_chunk(std::span<const ChunkRange>(ranges), threads_, [&](std::size_t, ChunkRange r) {
      for (std::size_t i = r.begin; i < r.end; ++i) {
        double acc = 0.0;
        if (materialized()) {
          const double* row = dense_.data() + i * n_;
          for (std::size_t j = 0; j < n_; ++j) acc += row[j] * w[j];
        } else {
          const auto xi = cloud_.point(i);
          for (std::size_t j = 0; j < n_; ++j)
            if (j != i && w[j] != 0.0) acc += w[j] * power(squared_distance(xi, cloud_.point(j)));
        }
        out[i] = acc;
      }
    });
  }

  /// Largest row sum, an upper bound on the spectral radius.
  double max_row_sum() const {
    std::vector<double> ones(n_, 1.0), rows(n_);
    multiply(ones, rows);
    return *std::max_element(rows.begin(), rows.end());
  }

private:
  const DiscreteMeasure& cloud_;
  double lambda_;
  unsigned threads_;
  std::size_t n_;
  std::vector<double> dense_;
};

struct EquilibriumOptions {
  /// Per-coordinate upper bound; 0 selects cap_factor / N.
  double cap = 0.0;
  double cap_factor = 1.25;
  /// KKT slack and stopping tolerance.
  double tol = 1e-8;
  /// Random simplex starts in addition to the uniform start.
  int restarts = 3;
  std::size_t max_iterations = 20000;
  std::uint64_t seed = 0;
  double weight_floor = 1e-10;
  /// Dense storage up to this many points unless forced below.
  std::size_t materialize_limit = 8192;
  int force_materialize = -1;  ///< -1 automatic, 0 never, 1 always
  unsigned threads = 1;
  /// Optional warm start, tried before the uniform start.
  std::vector<double> initial_weights;
};

struct EquilibriumResult {
  std::vector<double> weights;
  double energy = 0.0;
  double capacity = 0.0;
  double kkt_residual = 0.0;
  std::vector<bool> support_mask;
  std::size_t iterations = 0;
  int restarts_used = 0;
  double cap = 0.0;
  double lambda = 0.0;
};

struct KktReport {
  double residual;
  double multiplier;  ///< the common potential level mu*
};

/// Violation of the capped-simplex optimality conditions for potentials phi = M w:
/// phi_i = mu* on interior coordinates, phi_i >= mu* - tol where w_i = 0 and
/// phi_i <= mu* + tol where w_i = cap. mu* is the w-weighted mean of phi over the
/// interior; without interior coordinates it is the midpoint of the gap between
/// capped and zero potentials.
inline KktReport kkt_residual(std::span<const double> w, std::span<const double> phi, double cap, double tol,
                              double weight_floor = 1e-10) {
  double wsum = 0.0, wphi = 0.0;
  double cap_max = -std::numeric_limits<double>::infinity();
  double zero_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= weight_floor) {
      zero_min = std::min(zero_min, phi[i]);
    } else if (w[i] >= cap - weight_floor) {
      cap_max = std::max(cap_max, phi[i]);
    } else {
      wsum += w[i];
      wphi += w[i] * phi[i];
    }
  }
  double mu = 0.0;
  if (wsum > 0.0) {
    mu = wphi / wsum;
  } else if (std::isfinite(cap_max) && std::isfinite(zero_min)) {
    mu = 0.5 * (cap_max + zero_min);
  } else {
    mu = std::isfinite(cap_max) ? cap_max : zero_min;
  }
  double res = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= weight_floor) {
      res = std::max(res, mu - tol - phi[i]);
    } else if (w[i] >= cap - weight_floor) {
      res = std::max(res, phi[i] - mu - tol);
    } else {
      res = std::max(res, std::abs(phi[i] - mu));
    }
  }
  return {res, mu};
}

namespace detail {

struct DescentOutcome {
  std::vector<double> weights;
  std::vector<double> phi;
  double energy;
  double kkt;
  std::size_t iterations;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Spectral projected gradient on f(w) = w' M w with exact line search along
/// each projected direction (f is quadratic, so the minimizing step is closed-form).
inline DescentOutcome projected_descent(const RieszMatrix& m, std::vector<double> start, double cap,
                                        const EquilibriumOptions& opt, double step0) {
  const std::size_t n = m.size();
  std::vector<double> w(n), phi(n), trial(n), d(n), md(n);
  project_capped_simplex(start, cap, w);
  m.multiply(w, phi);

  double step = step0;
  const double step_min = step0 * 1e-8, step_max = step0 * 1e6;
  std::size_t it = 0;
  double kkt = kkt_residual(w, phi, cap, opt.tol, opt.weight_floor).residual;
  const double target = 0.01 * opt.tol;
  for (; it < opt.max_iterations && kkt > target; ++it) {
    for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] - step * 2.0 * phi[i];
    project_capped_simplex(trial, cap, d);
    for (std::size_t i = 0; i < n; ++i) d[i] -= w[i];
    const double gd = 2.0 * dot(phi, d);
    if (!(gd < 0.0)) {
      // no descent at this step length: either stationary or the step is too long
      if (step <= step_min) break;
      step = std::max(step_min, 0.1 * step);
      continue;
    }
    m.multiply(d, md);
    const double dmd = dot(d, md);
    const double t = dmd > 0.0 ? std::min(1.0, -gd / (2.0 * dmd)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) w[i] = std::clamp(w[i] + t * d[i], 0.0, cap);
    if ((it + 1) % 50 == 0) {
      m.multiply(w, phi);  // refresh against drift in the incremental update
    } else {
      for (std::size_t i = 0; i < n; ++i) phi[i] += t * md[i];
    }
    const double dd = dot(d, d);
    step = dmd > 0.0 ? std::clamp(dd / (2.0 * dmd), step_min, step_max) : step_max;
    kkt = kkt_residual(w, phi, cap, opt.tol, opt.weight_floor).residual;
  }
  m.multiply(w, phi);
  const double f = dot(w, phi);
  kkt = kkt_residual(w, phi, cap, opt.tol, opt.weight_floor).residual;
  return {std::move(w), std::move(phi), f, kkt, it};
}

} // namespace detail

inline double resolve_cap(std::size_t n, const EquilibriumOptions& opt) {
  return opt.cap > 0.0 ? opt.cap : std::min(1.0, opt.cap_factor / static_cast<double>(n));
}

/// Equilibrium weights of a point cloud: minimizes the off-diagonal Riesz
/// energy over the capped simplex from several starts and keeps the best
/// stationary point. The cloud's own weights are ignored.
inline EquilibriumResult solve_equilibrium(const DiscreteMeasure& cloud, double lambda, const EquilibriumOptions& opt = {}) {
  const std::size_t n = cloud.size();
  if (n < 2) throw std::invalid_argument("equilibrium: need at least two points");
  if (!(lambda > 0.0)) throw std::invalid_argument("equilibrium: lambda must be positive");
  const double cap = resolve_cap(n, opt);
  if (!(cap <= 1.0) || !(cap * static_cast<double>(n) > 1.0))
    throw std::invalid_argument("equilibrium: infeasible cap (need 1/N < cap <= 1)");
  if (opt.restarts < 0) throw std::invalid_argument("equilibrium: restarts must be >= 0");

  const bool dense = opt.force_materialize >= 0 ? opt.force_materialize == 1 : n <= opt.materialize_limit;
  const RieszMatrix m(cloud, lambda, dense, opt.threads);
  const double step0 = 1.0 / (2.0 * m.max_row_sum());

  std::vector<std::vector<double>> starts;
  if (!opt.initial_weights.empty()) {
    if (opt.initial_weights.size() != n) throw std::invalid_argument("equilibrium: warm start has wrong length");
    starts.push_back(opt.initial_weights);
  }
  starts.emplace_back(n, 1.0 / static_cast<double>(n));
  Rng rng(mix_seed(opt.seed, 0xE0));
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<double> s(n);
    double total = 0.0;
    for (double& v : s) total += (v = rng.exponential());
    for (double& v : s) v /= total;
    starts.push_back(std::move(s));
  }

  EquilibriumResult best;
  bool have = false;
  std::size_t iterations = 0;
  for (const auto& start : starts) {
    auto out = detail::projected_descent(m, start, cap, opt, step0);
    iterations += out.iterations;
    const bool degenerate = !(out.energy > 0.0);
    const bool better = !have || (!degenerate && (best.energy <= 0.0 || out.energy < best.energy));
    if (better) {
      best.weights = std::move(out.weights);
      best.energy = out.energy;
      best.kkt_residual = out.kkt;
      have = true;
    }
  }

  best.capacity = best.energy > 0.0 ? 1.0 / best.energy : kInfinity;
  best.iterations = iterations;
  best.restarts_used = opt.restarts;
  best.cap = cap;
  best.lambda = lambda;
  best.support_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) best.support_mask[i] = best.weights[i] > opt.weight_floor;
  return best;
}

/// The equilibrium weights attached to the cloud as a probability measure.
inline DiscreteMeasure equilibrium_measure(const DiscreteMeasure& cloud, const EquilibriumResult& res) {
  return DiscreteMeasure::normalized(cloud.dim(), std::vector<double>(cloud.coords().begin(), cloud.coords().end()),
                                     res.weights);
}

/// Riesz energy of the uniform measure on the sphere of radius r in R^n, from
/// the chord-length law of two independent uniform points:
///   r^-l * int_0^pi (2 sin(t/2))^-l sin^(n-2) t dt / int_0^pi sin^(n-2) t dt.
/// Finite only for lambda < n - 1.
inline double sphere_energy_oracle(std::size_t n, double r, double lambda) {
  if (n < 2) throw std::invalid_argument("sphere oracle: n must be >= 2");
  if (!(r > 0.0)) throw std::invalid_argument("sphere oracle: radius must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("sphere oracle: lambda must be positive");
  if (!(lambda < static_cast<double>(n) - 1.0)) throw DomainError("sphere oracle: divergent for lambda >= n - 1");
  const double p = static_cast<double>(n) - 2.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  const auto numerator = integrator.integrate(
      // with h = t/2 the integrand is 2^(p - lambda) sin(h)^(p - lambda) cos(h)^p;
      // tc, the signed distance to the nearer endpoint, resolves both ends
      [&](double, double tc) {
        const double sh = tc < 0.0 ? std::sin(-0.5 * tc) : std::cos(0.5 * tc);
        const double ch = tc < 0.0 ? std::cos(-0.5 * tc) : std::sin(0.5 * tc);
        return std::pow(2.0, p - lambda) * std::pow(sh, p - lambda) * (p == 0.0 ? 1.0 : std::pow(ch, p));
      },
      0.0, std::numbers::pi);
  const auto denominator =
      p == 0.0 ? std::numbers::pi
               : integrator.integrate([&](double t) { return std::pow(std::sin(t), p); }, 0.0, std::numbers::pi);
  return std::pow(r, -lambda) * numerator / denominator;
}

/// Capacity of the ball of radius r in R^n, valid where its equilibrium
/// measure is the uniform law on the sphere (lambda <= n - 2).
inline double ball_capacity_oracle(std::size_t n, double r, double lambda) {
  if (lambda > static_cast<double>(n) - 2.0)
    throw DomainError("ball capacity oracle: sphere carries the equilibrium only for lambda <= n - 2");
  return 1.0 / sphere_energy_oracle(n, r, lambda);
}

/// Largest value of phi(probe) - I over the probes, for lambda >= n - 2 where
/// the equilibrium potential never exceeds the energy.
inline double potential_bound_check(const EquilibriumResult& res, const DiscreteMeasure& cloud, double lambda,
                                    std::span<const std::vector<double>> probes) {
  if (lambda < static_cast<double>(cloud.dim()) - 2.0)
    throw std::invalid_argument("potential bound: requires lambda >= n - 2");
  const auto mu = equilibrium_measure(cloud, res);
  double worst = -kInfinity;
  for (const auto& x : probes) worst = std::max(worst, potential_at(mu, lambda, x) - res.energy);
  return worst;
}

inline nlohmann::json to_json(const EquilibriumResult& r) {
  return {{"lambda", r.lambda},
          {"energy", r.energy},
          {"capacity", r.capacity},
          {"kkt_residual", r.kkt_residual},
          {"weights", r.weights}};
}

} // namespace rswarm
