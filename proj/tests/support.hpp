#pragma once

// Test-side generators and independent oracles.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "rswarm/kernel.hpp"
#include "rswarm/measure.hpp"
#include "rswarm/rng.hpp"

namespace rswarm::testing {

/// Riesz energy of the uniform measure on the radius-r sphere in R^n in closed
/// form, from the chord-length density and the Beta function.
inline double sphere_energy_closed_form(unsigned n, double r, double lambda) {
  const double a = 0.5 * (n - 1.0);
  return std::pow(r, -lambda) * std::pow(2.0, n - 2.0 - lambda) * std::beta(a - 0.5 * lambda, a) / std::beta(0.5, a);
}

inline constexpr double kReuleauxArea = 0.5 * (std::numbers::pi - std::numbers::sqrt3);

/// Random kernel parameters inside the valid ranges of each variant.
inline KernelParams random_params(Rng& rng) {
  KernelParams k;
  k.dim = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
  const double v = rng.uniform();
  k.variant = v < 0.4 ? KernelVariant::Power : (v < 0.8 ? KernelVariant::Normalized : KernelVariant::LogRepulsion);
  k.alpha = rng.uniform(0.5, 8.0);
  k.lambda = rng.uniform(0.05, 0.95) * static_cast<double>(k.dim);
  return k;
}

/// Random vector with norm in [lo, hi].
inline std::vector<double> random_vector(Rng& rng, std::size_t dim, double lo, double hi) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& c : v) {
      c = rng.normal();
      n2 += c * c;
    }
  } while (n2 < 1e-12);
  const double s = rng.uniform(lo, hi) / std::sqrt(n2);
  for (double& c : v) c *= s;
  return v;
}

/// Random measure with N atoms in a ball of the given radius, random weights.
inline DiscreteMeasure random_measure(Rng& rng, std::size_t dim, std::size_t n, double radius, bool uniform_weights) {
  std::vector<double> coords;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = random_vector(rng, dim, 0.0, radius);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  if (uniform_weights) return DiscreteMeasure::uniform(dim, std::move(coords));
  std::vector<double> w(n);
  for (double& x : w) x = rng.uniform(0.05, 1.0);
  return DiscreteMeasure::normalized(dim, std::move(coords), std::move(w));
}

/// Random orthogonal matrix (row-major) by Gram-Schmidt on Gaussian columns.
inline std::vector<double> random_rotation(Rng& rng, std::size_t dim) {
  std::vector<double> q(dim * dim);
  for (std::size_t c = 0; c < dim; ++c) {
    for (;;) {
      std::vector<double> v(dim);
      for (double& x : v) x = rng.normal();
      for (std::size_t p = 0; p < c; ++p) {
        double d = 0.0;
        for (std::size_t k = 0; k < dim; ++k) d += v[k] * q[k * dim + p];
        for (std::size_t k = 0; k < dim; ++k) v[k] -= d * q[k * dim + p];
      }
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 < 1e-8) continue;
      for (std::size_t k = 0; k < dim; ++k) q[k * dim + c] = v[k] / std::sqrt(n2);
      break;
    }
  }
  return q;
}

/// Applies x -> Q x + shift to every atom.
inline DiscreteMeasure rigid_motion(const DiscreteMeasure& mu, const std::vector<double>& q,
                                    const std::vector<double>& shift) {
  const std::size_t d = mu.dim();
  std::vector<double> out(mu.coords().size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    for (std::size_t r = 0; r < d; ++r) {
      double s = shift[r];
      for (std::size_t c = 0; c < d; ++c) s += q[r * d + c] * x[c];
      out[i * d + r] = s;
    }
  }
  return DiscreteMeasure(d, std::move(out), std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace rswarm::testing
