#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rswarm/error.hpp"
#include "rswarm/kernel.hpp"
#include "rswarm/parallel.hpp"

namespace rswarm {

/// Sentinel returned by the limit functional and the potential when infinite.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// N weighted atoms in R^dim with total mass one. Immutable once built.
class DiscreteMeasure {
public:
  static constexpr double kMassTolerance = 1e-12;

  DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
      : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
    if (dim_ == 0) throw std::invalid_argument("measure: dim must be positive");
    if (coords_.empty() || coords_.size() % dim_ != 0)
      throw std::invalid_argument("measure: coordinate count must be a positive multiple of dim");
    if (weights_.size() != coords_.size() / dim_)
      throw std::invalid_argument("measure: one weight per atom required");
    for (double c : coords_)
      if (!std::isfinite(c)) throw std::invalid_argument("measure: non-finite coordinate");
    double mass = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("measure: weights must be finite and >= 0");
      mass += w;
    }
    // summation error grows with the atom count
    if (std::abs(mass - 1.0) > kMassTolerance * std::max<double>(1.0, static_cast<double>(weights_.size()) * 1e-3))
      throw std::invalid_argument("measure: weights must sum to 1 (got " + std::to_string(mass) + ")");
  }

  /// Equal weights 1/N.
  static DiscreteMeasure uniform(std::size_t dim, std::vector<double> coords) {
    const std::size_t n = dim == 0 ? 0 : coords.size() / dim;
    return DiscreteMeasure(dim, std::move(coords), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
  }

  /// Rescales nonnegative weights to unit mass before validating.
  static DiscreteMeasure normalized(std::size_t dim, std::vector<double> coords, std::vector<double> weights) {
    const double mass = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(mass > 0.0)) throw std::invalid_argument("measure: total weight must be positive");
    for (double& w : weights) w /= mass;
    return DiscreteMeasure(dim, std::move(coords), std::move(weights));
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> coords() const { return coords_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double weight(std::size_t i) const { return weights_[i]; }
  bool in_support(std::size_t i) const { return weights_[i] > 0.0; }

  DiscreteMeasure with_weights(std::vector<double> weights) const {
    return DiscreteMeasure(dim_, coords_, std::move(weights));
  }

  bool operator==(const DiscreteMeasure&) const = default;

private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

/// Off-diagonal pair sum  sum_{i != j} w_i w_j f(|x_i - x_j|^2), accumulated
/// row-major inside fixed chunks and reduced in chunk order.
template <class PairFn>
double off_diagonal_sum(const DiscreteMeasure& mu, PairFn&& f, unsigned threads = 1) {
  const std::size_t n = mu.size();
  const auto ranges = triangular_chunks(n);
  std::vector<double> partial(ranges.size(), 0.0);
  for_each_chunk(std::span<const ChunkRange>(ranges), threads, [&](std::size_t c, ChunkRange r) {
    double acc = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      const double wi = mu.weight(i);
      if (wi == 0.0) continue;
      const auto xi = mu.point(i);
      double row = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double wj = mu.weight(j);
        if (wj == 0.0) continue;
        const double r2 = squared_distance(xi, mu.point(j));
        if (r2 == 0.0)
          throw DomainError("energy undefined: atoms " + std::to_string(i) + " and " + std::to_string(j) +
                            " coincide");
        row += wj * f(r2);
      }
      acc += wi * row;
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return 2.0 * total;
}

/// Interaction energy with the off-diagonal convention (no self-interaction).
inline double energy(const DiscreteMeasure& mu, const KernelParams& k, unsigned threads = 1) {
  k.validate();
  if (mu.dim() != k.dim) throw std::invalid_argument("energy: measure and kernel dimensions differ");
  const PairKernel kernel(k);
  return off_diagonal_sum(mu, [&](double r2) { return kernel(r2).value; }, threads);
}

/// Riesz energy sum_{i != j} w_i w_j |x_i - x_j|^-lambda.
inline double riesz_energy(const DiscreteMeasure& mu, double lambda, unsigned threads = 1) {
  if (!(lambda > 0.0)) throw std::invalid_argument("riesz_energy: lambda must be positive");
  const HalfPower power(-0.5 * lambda);
  return off_diagonal_sum(mu, [&](double r2) { return power(r2); }, threads);
}

/// Largest distance between two atoms of positive weight; exact O(N^2) scan.
inline double diameter(const DiscreteMeasure& mu) {
  double best = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu.in_support(i)) continue;
    for (std::size_t j = i + 1; j < mu.size(); ++j) {
      if (!mu.in_support(j)) continue;
      best = std::max(best, squared_distance(mu.point(i), mu.point(j)));
    }
  }
  return std::sqrt(best);
}

inline constexpr double kDiameterTolerance = 1e-9;

/// Strong-attraction limit functional: Riesz energy when the support has
/// diameter at most one, kInfinity otherwise.
inline double limit_energy(const DiscreteMeasure& mu, double lambda, double diam_tol = kDiameterTolerance,
                           unsigned threads = 1) {
  if (diameter(mu) > 1.0 + diam_tol) return kInfinity;
  return riesz_energy(mu, lambda, threads);
}

/// The measure A -> mu(beta A): atoms move to x / beta, weights unchanged.
inline DiscreteMeasure dilate(const DiscreteMeasure& mu, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("dilate: beta must be positive and finite");
  std::vector<double> coords(mu.coords().begin(), mu.coords().end());
  for (double& c : coords) c /= beta;
  return DiscreteMeasure(mu.dim(), std::move(coords), std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

/// Riesz potential sum_i w_i |x - x_i|^-lambda; kInfinity on a support atom.
inline double potential_at(const DiscreteMeasure& mu, double lambda, std::span<const double> x) {
  if (x.size() != mu.dim()) throw std::invalid_argument("potential_at: point dimension mismatch");
  const double e = -0.5 * lambda;
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu.in_support(i)) continue;
    const double r2 = squared_distance(x, mu.point(i));
    if (r2 == 0.0) return kInfinity;
    acc += mu.weight(i) * std::pow(r2, e);
  }
  return acc;
}

/// Distance from x to the nearest support atom.
inline double distance_to_support(const DiscreteMeasure& mu, std::span<const double> x) {
  double best = kInfinity;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_support(i)) best = std::min(best, squared_distance(x, mu.point(i)));
  return std::sqrt(best);
}

struct LaplacianProbe {
  double fd;        ///< centered second differences of potential_at
  double analytic;  ///< lambda (lambda + 2 - n) sum_i w_i |x - x_i|^(-lambda-2)
};

inline LaplacianProbe laplacian_probe(const DiscreteMeasure& mu, double lambda, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("laplacian_probe: step must be positive");
  if (x.size() != mu.dim()) throw std::invalid_argument("laplacian_probe: point dimension mismatch");
  if (distance_to_support(mu, x) < 10.0 * h) throw DomainError("laplacian_probe: probe closer than 10h to the support");

  const double center = potential_at(mu, lambda, x);
  std::vector<double> y(x.begin(), x.end());
  double fd = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = x[k] + h;
    const double plus = potential_at(mu, lambda, y);
    y[k] = x[k] - h;
    const double minus = potential_at(mu, lambda, y);
    y[k] = x[k];
    fd += (plus - 2.0 * center + minus) / (h * h);
  }

  const double n = static_cast<double>(mu.dim());
  const double e = -0.5 * lambda - 1.0;
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_support(i)) s += mu.weight(i) * std::pow(squared_distance(x, mu.point(i)), e);
  return {fd, lambda * (lambda + 2.0 - n) * s};
}

/// Weighted center of mass.
inline std::vector<double> centroid(const DiscreteMeasure& mu) {
  std::vector<double> c(mu.dim(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t k = 0; k < mu.dim(); ++k) c[k] += mu.weight(i) * mu.point(i)[k];
  return c;
}

} // namespace rswarm
