#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rswarm/measure.hpp"

namespace rswarm {

struct SphereFit {
  std::vector<double> center;
  double radius = 0.0;
};

/// Algebraic least-squares sphere |x - c| = R through the support atoms,
/// from the linear system 2 c.x + k = |x|^2 with k = R^2 - |c|^2.
inline SphereFit best_fit_sphere(const DiscreteMeasure& mu) {
  const std::size_t n = mu.dim();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_support(i)) idx.push_back(i);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(n + 1));
  Eigen::VectorXd b(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto p = mu.point(idx[r]);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = 2.0 * p[k];
      s += p[k] * p[k];
    }
    a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)) = 1.0;
    b(static_cast<Eigen::Index>(r)) = s;
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
  SphereFit fit;
  fit.center.resize(n);
  double c2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    fit.center[k] = sol(static_cast<Eigen::Index>(k));
    c2 += fit.center[k] * fit.center[k];
  }
  fit.radius = std::sqrt(std::max(0.0, sol(static_cast<Eigen::Index>(n)) + c2));
  return fit;
}

/// Mass within delta of the fitted sphere.
inline double mass_near_sphere(const DiscreteMeasure& mu, const SphereFit& fit, double delta) {
  double m = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = std::sqrt(squared_distance(mu.point(i), fit.center));
    if (std::abs(d - fit.radius) <= delta) m += mu.weight(i);
  }
  return m;
}

/// Counter-clockwise convex hull of planar points (monotone chain).
inline std::vector<std::array<double, 2>> convex_hull_2d(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const auto& o, const auto& a, const auto& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double segment_distance(const std::array<double, 2>& p, const std::array<double, 2>& a,
                               const std::array<double, 2>& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p[0] - (a[0] + t * vx), dy = p[1] - (a[1] + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

struct BoundaryMass {
  double fraction = 0.0;
  std::string statistic;  ///< "hull-2d" or "best-fit-sphere"
};

/// Share of mass within delta of the support's boundary: the convex hull in
/// the plane, the best-fit sphere in higher dimensions.
inline BoundaryMass boundary_mass_fraction(const DiscreteMeasure& mu, double delta) {
  if (mu.dim() != 2) return {mass_near_sphere(mu, best_fit_sphere(mu), delta), "best-fit-sphere"};
  std::vector<std::array<double, 2>> pts;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_support(i)) pts.push_back({mu.point(i)[0], mu.point(i)[1]});
  const auto hull = convex_hull_2d(pts);
  double m = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu.in_support(i)) continue;
    const std::array<double, 2> p{mu.point(i)[0], mu.point(i)[1]};
    double d = kInfinity;
    for (std::size_t e = 0; e < hull.size(); ++e) d = std::min(d, segment_distance(p, hull[e], hull[(e + 1) % hull.size()]));
    if (hull.size() == 1) d = 0.0;
    if (d <= delta) m += mu.weight(i);
  }
  return {m, "hull-2d"};
}

/// Counts of atoms by distance from the weighted centroid, bins [k w, (k+1) w).
inline std::vector<std::size_t> radial_histogram(const DiscreteMeasure& mu, double bin_width) {
  const auto c = centroid(mu);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu.in_support(i)) continue;
    const auto bin = static_cast<std::size_t>(std::sqrt(squared_distance(mu.point(i), c)) / bin_width);
    if (bin >= counts.size()) counts.resize(bin + 1, 0);
    ++counts[bin];
  }
  return counts;
}

inline double min_distance_from_centroid(const DiscreteMeasure& mu) {
  const auto c = centroid(mu);
  double best = kInfinity;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_support(i)) best = std::min(best, squared_distance(mu.point(i), c));
  return std::sqrt(best);
}

inline double max_distance_from_centroid(const DiscreteMeasure& mu) {
  const auto c = centroid(mu);
  double best = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_support(i)) best = std::max(best, squared_distance(mu.point(i), c));
  return std::sqrt(best);
}

/// Ascending eigenvalues of the weighted covariance matrix.
inline std::vector<double> covariance_eigenvalues(const DiscreteMeasure& mu) {
  const auto n = static_cast<Eigen::Index>(mu.dim());
  const auto c = centroid(mu);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    Eigen::VectorXd d(n);
    for (Eigen::Index k = 0; k < n; ++k) d(k) = mu.point(i)[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k)];
    cov += mu.weight(i) * d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().data(), eig.eigenvalues().data() + n};
}

/// (s_max - s_min) / s_max over covariance eigenvalues; 0 for isotropic clouds.
inline double asymmetry_statistic(const DiscreteMeasure& mu) {
  const auto ev = covariance_eigenvalues(mu);
  const double hi = ev.back(), lo = ev.front();
  return hi > 0.0 ? (hi - lo) / hi : 0.0;
}

} // namespace rswarm
