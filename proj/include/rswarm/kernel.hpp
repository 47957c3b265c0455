#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rswarm/error.hpp"

namespace rswarm {

enum class KernelVariant {
  Power,        ///< r^a + r^-l
  Normalized,   ///< r^a / a + r^-l / l, minimum at r = 1
  LogRepulsion  ///< r^a - ln r, the planar Newtonian case
};

inline std::string_view to_string(KernelVariant v) {
  switch (v) {
  case KernelVariant::Power: return "power";
  case KernelVariant::Normalized: return "normalized";
  case KernelVariant::LogRepulsion: return "log";
  }
  return "unknown";
}

inline KernelVariant parse_kernel_variant(std::string_view s) {
  if (s == "power") return KernelVariant::Power;
  if (s == "normalized") return KernelVariant::Normalized;
  if (s == "log") return KernelVariant::LogRepulsion;
  throw std::invalid_argument("unknown kernel variant '" + std::string(s) + "'");
}

/// Interaction kernel K(x - y) = attraction(|x - y|) + repulsion(|x - y|).
struct KernelParams {
  double alpha = 2.0;   ///< attraction exponent
  double lambda = 1.0;  ///< repulsion exponent, ignored by LogRepulsion
  std::size_t dim = 2;
  KernelVariant variant = KernelVariant::Power;
  /// Distances below this are treated as collisions instead of returning inf.
  double min_radius = 1e-12;

  void validate() const {
    if (dim == 0) throw std::invalid_argument("kernel: dim must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("kernel: alpha must be positive");
    if (variant != KernelVariant::LogRepulsion) {
      if (!(lambda > 0.0) || !(lambda < static_cast<double>(dim)))
        throw std::invalid_argument("kernel: lambda must lie in (0, dim)");
    }
    if (!(min_radius > 0.0)) throw std::invalid_argument("kernel: min_radius must be positive");
  }

  /// Non-fatal configuration notes (the log kernel outside the plane).
  std::optional<std::string> warning() const {
    if (variant == KernelVariant::LogRepulsion && dim != 2)
      return "log repulsion is the Newtonian kernel only for dim = 2 (dim = " +
             std::to_string(dim) + ")";
    return std::nullopt;
  }
};

/// Value K(r) and radial factor K'(r)/r of a pair at squared distance r2.
/// grad K(v) = radial * v.
struct PairTerms {
  double value;
  double radial;
};

/// x -> x^e for x > 0. Exponents on the quarter-integer grid (|e| <= 512)
/// use repeated squaring plus square roots instead of exp/log.
class HalfPower {
public:
  explicit HalfPower(double e) : e_(e) {
    const double q = 4.0 * e;
    if (std::abs(q) <= 2048.0 && q == std::round(q)) {
      const long qi = static_cast<long>(std::lround(std::abs(q)));
      whole_ = qi / 4;
      quarters_ = static_cast<int>(qi % 4);
      negative_ = e < 0.0;
      fast_ = true;
    }
  }

  double operator()(double x) const {
    if (!fast_) return std::exp(e_ * std::log(x));
    double v = 1.0;
    double base = x;
    for (long k = whole_; k > 0; k >>= 1) {
      if (k & 1) v *= base;
      base *= base;
    }
    if (quarters_ == 2) {
      v *= std::sqrt(x);
    } else if (quarters_ != 0) {
      const double s = std::sqrt(x);
      const double q = std::sqrt(s);
      v *= quarters_ == 1 ? q : s * q;
    }
    return negative_ ? 1.0 / v : v;
  }

  bool fast() const { return fast_; }

private:
  double e_;
  long whole_ = 0;
  int quarters_ = 0;
  bool negative_ = false;
  bool fast_ = false;
};

/// Pair evaluator with the exponents of a kernel prepared once; the hot loops
/// of the energy and the flow go through this.
class PairKernel {
public:
  explicit PairKernel(const KernelParams& k)
      : k_(k), att_(0.5 * k.alpha - 1.0), rep_(-0.5 * k.lambda - 1.0), min_r2_(k.min_radius * k.min_radius) {}

  PairTerms operator()(double r2) const {
    if (!(r2 >= min_r2_))
      throw DomainError("kernel evaluated below min_radius (r = " + std::to_string(std::sqrt(r2)) + ")");
    const double att = att_(r2);  // r^(a-2)
    switch (k_.variant) {
    case KernelVariant::Power: {
      const double rep = rep_(r2);  // r^(-l-2)
      return {(att + rep) * r2, k_.alpha * att - k_.lambda * rep};
    }
    case KernelVariant::Normalized: {
      const double rep = rep_(r2);
      return {att * r2 / k_.alpha + rep * r2 / k_.lambda, att - rep};
    }
    case KernelVariant::LogRepulsion:
      return {att * r2 - 0.5 * std::log(r2), k_.alpha * att - 1.0 / r2};
    }
    return {0.0, 0.0};
  }

  const KernelParams& params() const { return k_; }

private:
  KernelParams k_;
  HalfPower att_;
  HalfPower rep_;
  double min_r2_;
};

/// Value and radial factor at squared distance r2.
inline PairTerms pair_terms(const KernelParams& k, double r2) { return PairKernel(k)(r2); }

/// Kernel value at distance r > 0.
inline double eval(const KernelParams& k, double r) {
  if (!(r > 0.0)) throw DomainError("kernel is singular at r <= 0");
  if (r < k.min_radius) throw DomainError("kernel evaluated below min_radius");
  switch (k.variant) {
  case KernelVariant::Power: return std::pow(r, k.alpha) + std::pow(r, -k.lambda);
  case KernelVariant::Normalized:
    return std::pow(r, k.alpha) / k.alpha + std::pow(r, -k.lambda) / k.lambda;
  case KernelVariant::LogRepulsion: return std::pow(r, k.alpha) - std::log(r);
  }
  return 0.0;
}

/// Gradient of x -> K(x) at the displacement v; written into out.
inline void grad(const KernelParams& k, std::span<const double> v, std::span<double> out) {
  if (out.size() != v.size()) throw std::invalid_argument("grad: output size mismatch");
  double r2 = 0.0;
  for (double c : v) r2 += c * c;
  if (!(r2 > 0.0)) throw DomainError("kernel gradient undefined at v = 0");
  const double radial = pair_terms(k, r2).radial;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = radial * v[i];
}

inline std::vector<double> grad(const KernelParams& k, std::span<const double> v) {
  std::vector<double> out(v.size());
  grad(k, v, out);
  return out;
}

/// Distance at which the pair force vanishes.
inline double zero_force_radius(const KernelParams& k) {
  switch (k.variant) {
  case KernelVariant::Power: return std::pow(k.lambda / k.alpha, 1.0 / (k.alpha + k.lambda));
  case KernelVariant::Normalized: return 1.0;
  case KernelVariant::LogRepulsion: return std::pow(1.0 / k.alpha, 1.0 / k.alpha);
  }
  return 1.0;
}

/// Pure Riesz kernel r^-l, used by capacity computations.
inline double riesz(double r, double lambda) { return std::pow(r, -lambda); }

} // namespace rswarm
