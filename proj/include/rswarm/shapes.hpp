#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rswarm/measure.hpp"
#include "rswarm/rng.hpp"

namespace rswarm {

struct ShapeSpec;

namespace shape {

/// Solid ball of the given radius centred at the origin.
struct Ball {
  std::size_t dim = 3;
  double radius = 0.5;
};

/// Sphere (boundary of the ball) of the given radius.
struct Sphere {
  std::size_t dim = 3;
  double radius = 0.5;
};

/// Planar body of constant width 1, centred at the centre of its triangle.
struct ReuleauxTriangle {};

/// The dim + 1 vertices of a regular simplex with unit edges.
struct SimplexVertices {
  std::size_t dim = 2;
};

/// Cap of the sphere of radius sqrt(2)/2 around e_dim with chord diameter 1.
struct SphericalCap {
  std::size_t dim = 3;
};

/// (1 - t) (left x {0}) + t ({0} x right) in R^(m + k).
struct ProductUnion {
  std::shared_ptr<const ShapeSpec> left;
  std::shared_ptr<const ShapeSpec> right;
  double t = 0.5;
};

} // namespace shape

using ShapeKind = std::variant<shape::Ball, shape::Sphere, shape::ReuleauxTriangle, shape::SimplexVertices,
                               shape::SphericalCap, shape::ProductUnion>;

struct ShapeSpec {
  ShapeKind kind = shape::Sphere{};
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kMaxRejectionTrials = 10'000'000;
inline constexpr double kCapSphereRadius = std::numbers::sqrt2 / 2.0;
inline constexpr double kCapHalfAngle = std::numbers::pi / 4.0;

/// Ambient dimension of the samples a spec produces.
inline std::size_t ambient_dim(const ShapeSpec& spec) {
  struct Visitor {
    std::size_t operator()(const shape::Ball& s) const { return s.dim; }
    std::size_t operator()(const shape::Sphere& s) const { return s.dim; }
    std::size_t operator()(const shape::ReuleauxTriangle&) const { return 2; }
    std::size_t operator()(const shape::SimplexVertices& s) const { return s.dim; }
    std::size_t operator()(const shape::SphericalCap& s) const { return s.dim; }
    std::size_t operator()(const shape::ProductUnion& s) const {
      if (!s.left || !s.right) throw std::invalid_argument("product union: missing factor");
      return ambient_dim(*s.left) + ambient_dim(*s.right);
    }
  };
  return std::visit(Visitor{}, spec.kind);
}

/// Membership in the Reuleaux triangle, in the centred frame used by the sampler.
inline bool in_reuleaux_triangle(double x, double y) {
  constexpr double h = std::numbers::sqrt3 / 2.0;
  constexpr double cx = 0.5, cy = std::numbers::sqrt3 / 6.0;
  const double px = x + cx, py = y + cy;
  auto inside = [&](double ax, double ay) { return (px - ax) * (px - ax) + (py - ay) * (py - ay) <= 1.0; };
  return inside(0.0, 0.0) && inside(1.0, 0.0) && inside(0.5, h);
}

/// The sampler's proposal box [-1/2, 1/2] x [sqrt3/2 - 1 - sqrt3/6, sqrt3/2 - sqrt3/6] has unit area.
inline constexpr double kReuleauxBoxArea = 1.0;

struct SampleStats {
  DiscreteMeasure measure;
  std::uint64_t proposals = 0;  ///< rejection-sampler proposals (0 for direct samplers)
  std::uint64_t accepted = 0;
};

namespace detail {

inline void unit_direction(Rng& rng, std::size_t dim, double* out) {
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      out[k] = rng.normal();
      norm2 += out[k] * out[k];
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t k = 0; k < dim; ++k) out[k] *= inv;
}

inline void require_dim(std::size_t dim, std::size_t min, const char* what) {
  if (dim < min) throw std::invalid_argument(std::string(what) + ": dimension too small");
}

inline std::vector<double> simplex_vertices(std::size_t n) {
  // e_i / sqrt2 for i < n plus c (1, ..., 1); c solves |c 1 - e_i / sqrt2| = 1.
  std::vector<double> coords((n + 1) * n, 0.0);
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) coords[i * n + i] = 1.0 / std::numbers::sqrt2;
  const double c = (1.0 + std::sqrt(1.0 + nn)) / (nn * std::numbers::sqrt2);
  for (std::size_t k = 0; k < n; ++k) coords[n * n + k] = c;
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t k = 0; k < n; ++k) mean[k] += coords[i * n + k] / (nn + 1.0);
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t k = 0; k < n; ++k) coords[i * n + k] -= mean[k];
  return coords;
}

} // namespace detail

/// Block-embeds two measures and mixes them: weights (1 - t) w_left, t w_right.
inline DiscreteMeasure product_union(const DiscreteMeasure& left, const DiscreteMeasure& right, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("product union: t must lie in [0, 1]");
  const std::size_t m = left.dim(), k = right.dim(), n = m + k;
  std::vector<double> coords((left.size() + right.size()) * n, 0.0);
  std::vector<double> weights;
  weights.reserve(left.size() + right.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    const auto p = left.point(i);
    std::copy(p.begin(), p.end(), coords.begin() + static_cast<std::ptrdiff_t>(i * n));
    weights.push_back((1.0 - t) * left.weight(i));
  }
  for (std::size_t i = 0; i < right.size(); ++i) {
    const auto p = right.point(i);
    std::copy(p.begin(), p.end(), coords.begin() + static_cast<std::ptrdiff_t>((left.size() + i) * n + m));
    weights.push_back(t * right.weight(i));
  }
  return DiscreteMeasure::normalized(n, std::move(coords), std::move(weights));
}

inline SampleStats sample_with_stats(const ShapeSpec& spec) {
  if (spec.n_samples == 0) throw std::invalid_argument("shape: n_samples must be >= 1");
  Rng rng(spec.seed);
  const std::size_t count = spec.n_samples;

  struct Visitor {
    Rng& rng;
    std::size_t count;
    const ShapeSpec& spec;

    SampleStats operator()(const shape::Sphere& s) const {
      detail::require_dim(s.dim, 1, "sphere");
      if (!(s.radius > 0.0)) throw std::invalid_argument("sphere: radius must be positive");
      std::vector<double> coords(count * s.dim);
      for (std::size_t i = 0; i < count; ++i) {
        double* p = coords.data() + i * s.dim;
        detail::unit_direction(rng, s.dim, p);
        for (std::size_t k = 0; k < s.dim; ++k) p[k] *= s.radius;
      }
      return {DiscreteMeasure::uniform(s.dim, std::move(coords))};
    }

    SampleStats operator()(const shape::Ball& s) const {
      detail::require_dim(s.dim, 1, "ball");
      if (!(s.radius > 0.0)) throw std::invalid_argument("ball: radius must be positive");
      std::vector<double> coords(count * s.dim);
      const double inv_dim = 1.0 / static_cast<double>(s.dim);
      for (std::size_t i = 0; i < count; ++i) {
        double* p = coords.data() + i * s.dim;
        detail::unit_direction(rng, s.dim, p);
        const double r = s.radius * std::pow(rng.uniform(), inv_dim);
        for (std::size_t k = 0; k < s.dim; ++k) p[k] *= r;
      }
      return {DiscreteMeasure::uniform(s.dim, std::move(coords))};
    }

    SampleStats operator()(const shape::ReuleauxTriangle&) const {
      constexpr double y_lo = std::numbers::sqrt3 / 2.0 - 1.0 - std::numbers::sqrt3 / 6.0;
      std::vector<double> coords;
      coords.reserve(2 * count);
      std::uint64_t proposals = 0;
      while (coords.size() < 2 * count) {
        if (++proposals > kMaxRejectionTrials) throw std::runtime_error("reuleaux: rejection sampler exceeded trial budget");
        const double x = rng.uniform() - 0.5;
        const double y = y_lo + rng.uniform();
        if (in_reuleaux_triangle(x, y)) {
          coords.push_back(x);
          coords.push_back(y);
        }
      }
      return {DiscreteMeasure::uniform(2, std::move(coords)), proposals, count};
    }

    SampleStats operator()(const shape::SimplexVertices& s) const {
      detail::require_dim(s.dim, 1, "simplex");
      return {DiscreteMeasure::uniform(s.dim, detail::simplex_vertices(s.dim))};
    }

    SampleStats operator()(const shape::SphericalCap& s) const {
      detail::require_dim(s.dim, 2, "spherical cap");
      const std::size_t n = s.dim;
      const double sin_max = std::sin(kCapHalfAngle);
      std::vector<double> coords(count * n);
      std::uint64_t proposals = 0;
      for (std::size_t i = 0; i < count; ++i) {
        // polar angle density ~ sin^(n-2), by rejection against the uniform law on [0, pi/4]
        double theta = 0.0;
        while (true) {
          if (++proposals > kMaxRejectionTrials)
            throw std::runtime_error("spherical cap: rejection sampler exceeded trial budget");
          theta = kCapHalfAngle * rng.uniform();
          const double ratio = std::sin(theta) / sin_max;
          if (rng.uniform() < std::pow(ratio, static_cast<double>(n - 2))) break;
        }
        double* p = coords.data() + i * n;
        detail::unit_direction(rng, n - 1, p);
        const double ring = kCapSphereRadius * std::sin(theta);
        for (std::size_t k = 0; k + 1 < n; ++k) p[k] *= ring;
        p[n - 1] = kCapSphereRadius * std::cos(theta);
      }
      return {DiscreteMeasure::uniform(n, std::move(coords)), proposals, count};
    }

    SampleStats operator()(const shape::ProductUnion& s) const {
      if (!s.left || !s.right) throw std::invalid_argument("product union: missing factor");
      auto left = sample_with_stats(*s.left);
      auto right = sample_with_stats(*s.right);
      return {product_union(left.measure, right.measure, s.t), left.proposals + right.proposals,
              left.accepted + right.accepted};
    }
  };
  return std::visit(Visitor{rng, count, spec}, spec.kind);
}

/// Seeded sample of a shape; equal weights except for product unions.
inline DiscreteMeasure sample(const ShapeSpec& spec) { return sample_with_stats(spec).measure; }

struct MixResult {
  double t_star;
  double value;
};

/// Minimizes (1 - t)^2 a + t^2 b over t.
inline MixResult optimal_mix(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("optimal_mix: a and b must be positive");
  return {a / (a + b), a * b / (a + b)};
}

// --- JSON ----------------------------------------------------------------

inline nlohmann::json to_json(const ShapeSpec& spec) {
  struct Visitor {
    nlohmann::json operator()(const shape::Ball& s) const { return {{"kind", "ball"}, {"dim", s.dim}, {"radius", s.radius}}; }
    nlohmann::json operator()(const shape::Sphere& s) const {
      return {{"kind", "sphere"}, {"dim", s.dim}, {"radius", s.radius}};
    }
    nlohmann::json operator()(const shape::ReuleauxTriangle&) const { return {{"kind", "reuleaux"}, {"dim", 2}}; }
    nlohmann::json operator()(const shape::SimplexVertices& s) const { return {{"kind", "simplex"}, {"dim", s.dim}}; }
    nlohmann::json operator()(const shape::SphericalCap& s) const { return {{"kind", "cap"}, {"dim", s.dim}}; }
    nlohmann::json operator()(const shape::ProductUnion& s) const {
      return {{"kind", "product_union"}, {"left", to_json(*s.left)}, {"right", to_json(*s.right)}, {"t", s.t}};
    }
  };
  auto j = std::visit(Visitor{}, spec.kind);
  j["n_samples"] = spec.n_samples;
  j["seed"] = spec.seed;
  return j;
}

inline ShapeSpec shape_from_json(const nlohmann::json& j) {
  ShapeSpec spec;
  spec.n_samples = j.value("n_samples", std::size_t{1000});
  spec.seed = j.value("seed", std::uint64_t{0});
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ball") {
    spec.kind = shape::Ball{j.at("dim").get<std::size_t>(), j.value("radius", 0.5)};
  } else if (kind == "sphere") {
    spec.kind = shape::Sphere{j.at("dim").get<std::size_t>(), j.value("radius", 0.5)};
  } else if (kind == "reuleaux") {
    spec.kind = shape::ReuleauxTriangle{};
  } else if (kind == "simplex") {
    spec.kind = shape::SimplexVertices{j.at("dim").get<std::size_t>()};
  } else if (kind == "cap") {
    spec.kind = shape::SphericalCap{j.at("dim").get<std::size_t>()};
  } else if (kind == "product_union") {
    spec.kind = shape::ProductUnion{std::make_shared<const ShapeSpec>(shape_from_json(j.at("left"))),
                                    std::make_shared<const ShapeSpec>(shape_from_json(j.at("right"))),
                                    j.value("t", 0.5)};
  } else {
    throw std::invalid_argument("unknown shape kind '" + kind + "'");
  }
  return spec;
}

} // namespace rswarm
