#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rswarm/dynamics.hpp"
#include "rswarm/equilibrium.hpp"
#include "rswarm/measure.hpp"
#include "rswarm/measure_io.hpp"
#include "rswarm/shapes.hpp"
#include "rswarm/statistics.hpp"

namespace rswarm {

inline constexpr const char* kToolVersion = "0.1.0";

/// Verdict thresholds. Every report echoes the table and its version so a
/// changed threshold is visible in the output.
struct VerdictThresholds {
  static constexpr const char* kVersion = "1";
  double recovery_slack = 1e-9;          ///< additive slack in the recovery inequality
  double recovery_gap_ratio = 1e-2;      ///< inequality gap at the largest alpha, relative to E_inf
  double identity_tol = 1e-10;           ///< product-union energy identity
  double superadditivity_tol = 1e-9;
  double kkt_tol = 1e-6;
  double potential_excess_tol = 1e-3;
  double laplacian_tol = 1e-4;
  double laplacian_step = 1e-3;
  double boundary_delta = 0.05;          ///< boundary-mass band in the alpha sweep
  double ring_delta = 0.05;              ///< log-kernel ring band
  double ring_fraction = 0.90;
  double ring_radius_tol = 0.05;         ///< |ring radius - 1/2|
  double spread_central_gap = 0.15;      ///< min distance from the centroid for a 2-D spread
  std::size_t spread_min_bins = 5;
  double radial_bin = 0.05;
  double shell_delta = 0.07;             ///< sub-Newtonian shell band (n >= 3)
  double shell_fraction = 0.85;
  double limit_energy_rel_gap = 0.10;    ///< sweep: final Riesz energy vs ball equilibrium
};

inline nlohmann::json to_json(const VerdictThresholds& t) {
  return {{"version", VerdictThresholds::kVersion},
          {"recovery_slack", t.recovery_slack},
          {"recovery_gap_ratio", t.recovery_gap_ratio},
          {"identity_tol", t.identity_tol},
          {"superadditivity_tol", t.superadditivity_tol},
          {"kkt_tol", t.kkt_tol},
          {"potential_excess_tol", t.potential_excess_tol},
          {"laplacian_tol", t.laplacian_tol},
          {"laplacian_step", t.laplacian_step},
          {"boundary_delta", t.boundary_delta},
          {"ring_delta", t.ring_delta},
          {"ring_fraction", t.ring_fraction},
          {"ring_radius_tol", t.ring_radius_tol},
          {"spread_central_gap", t.spread_central_gap},
          {"spread_min_bins", t.spread_min_bins},
          {"radial_bin", t.radial_bin},
          {"shell_delta", t.shell_delta},
          {"shell_fraction", t.shell_fraction},
          {"limit_energy_rel_gap", t.limit_energy_rel_gap}};
}

enum class VerdictStatus { Pass, Fail, Inconclusive };

inline const char* to_string(VerdictStatus s) {
  switch (s) {
  case VerdictStatus::Pass: return "pass";
  case VerdictStatus::Fail: return "fail";
  case VerdictStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct Verdict {
  std::string id;
  VerdictStatus status = VerdictStatus::Inconclusive;
  double measured = 0.0;
  double threshold = 0.0;
  std::string note;
};

/// Finite doubles as numbers, infinities as the sentinel strings "inf"/"-inf".
inline nlohmann::json number(double v) {
  if (std::isnan(v)) throw std::logic_error("NaN reached a report");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::json number_array(std::span<const double> v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

struct ExperimentReport {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  /// Named tables: series[table][column] = array, columns of equal length.
  nlohmann::json series = nlohmann::json::object();
  std::vector<Verdict> verdicts;
  std::string timestamp;  ///< stamped by the CLI at write time; empty otherwise
  std::string tool_version = kToolVersion;
  VerdictThresholds thresholds;

  void add(std::string id, bool pass, double measured, double threshold, std::string note = {}) {
    verdicts.push_back({std::move(id), pass ? VerdictStatus::Pass : VerdictStatus::Fail, measured, threshold,
                        std::move(note)});
  }

  void inconclusive(std::string id, double measured, double threshold, std::string note) {
    verdicts.push_back({std::move(id), VerdictStatus::Inconclusive, measured, threshold, std::move(note)});
  }

  /// 0 all pass, 2 any failure, 3 inconclusive without failures.
  int exit_code() const {
    bool inconc = false;
    for (const auto& v : verdicts) {
      if (v.status == VerdictStatus::Fail) return 2;
      if (v.status == VerdictStatus::Inconclusive) inconc = true;
    }
    return inconc ? 3 : 0;
  }

  const Verdict* find(const std::string& id) const {
    for (const auto& v : verdicts)
      if (v.id == id) return &v;
    return nullptr;
  }
};

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"id", v.id},
                        {"status", to_string(v.status)},
                        {"measured", number(v.measured)},
                        {"threshold", number(v.threshold)},
                        {"note", v.note}});
  }
  return {{"name", r.name},         {"params", r.params},
          {"outputs", r.outputs},   {"series", r.series},
          {"verdicts", verdicts},   {"timestamp", r.timestamp},
          {"tool_version", r.tool_version}, {"thresholds", to_json(r.thresholds)}};
}

/// The series tables as CSV blocks, each preceded by "# <table>".
inline void write_series_csv(std::ostream& os, const ExperimentReport& r) {
  for (const auto& [table, columns] : r.series.items()) {
    os << "# " << table << '\n';
    std::vector<std::string> names;
    std::size_t rows = 0;
    for (const auto& [col, values] : columns.items()) {
      names.push_back(col);
      rows = std::max(rows, values.size());
    }
    for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
    os << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t c = 0; c < names.size(); ++c) {
        const auto& col = columns.at(names[c]);
        if (c) os << ',';
        if (i < col.size()) {
          const auto& v = col.at(i);
          if (v.is_number_float()) os << format_double(v.get<double>());
          else if (v.is_string()) os << v.get<std::string>();
          else os << v.dump();
        }
      }
      os << '\n';
    }
  }
}

// --- strong-attraction sweep ----------------------------------------------

/// Runs the particle flow at each alpha on matched seeds and tracks how the
/// final configuration approaches the diameter-one limit.
inline ExperimentReport alpha_sweep(double lambda, std::size_t dim, const std::vector<double>& alphas,
                                    const SimConfig& base, const VerdictThresholds& th = {}) {
  if (alphas.empty()) throw std::invalid_argument("alpha_sweep: no alphas");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i - 1])) throw std::invalid_argument("alpha_sweep: alphas must increase");

  ExperimentReport rep;
  rep.name = "alpha-sweep";
  rep.thresholds = th;
  const KernelVariant variant = base.kernel.variant;
  rep.params = {{"lambda", lambda},       {"dim", dim},
                {"alphas", alphas},       {"kernel", to_string(variant)},
                {"particles", base.n_particles}, {"seed", base.seed},
                {"tol_velocity", base.tol_velocity}, {"max_steps", base.max_steps},
                {"dt0", base.dt0},        {"threads", base.threads}};

  std::vector<double> energy, riesz, diam, boundary, ring_frac, ring_radius, asym, min_r, time;
  std::vector<std::size_t> steps, bins;
  std::vector<bool> converged;
  nlohmann::json histograms = nlohmann::json::array();
  bool failed_run = false;
  std::string boundary_stat;
  std::vector<DiscreteMeasure> finals;

  for (double a : alphas) {
    SimConfig cfg = base;
    cfg.kernel.alpha = a;
    cfg.kernel.lambda = lambda;
    cfg.kernel.dim = dim;
    SimResult res{DiscreteMeasure::uniform(dim, std::vector<double>(dim, 0.0)), {}};
    try {
      res = run(cfg);
    } catch (const CollisionError& e) {
      rep.inconclusive("run_alpha_" + format_double(a), a, 0.0, e.what());
      failed_run = true;
      continue;
    }
    const auto& mu = res.final;
    energy.push_back(res.final_energy);
    riesz.push_back(variant == KernelVariant::LogRepulsion ? kInfinity : riesz_energy(mu, lambda, cfg.threads));
    diam.push_back(res.final_diameter);
    const auto bm = boundary_mass_fraction(mu, th.boundary_delta);
    boundary_stat = bm.statistic;
    boundary.push_back(bm.fraction);
    const auto fit = best_fit_sphere(mu);
    ring_radius.push_back(fit.radius);
    ring_frac.push_back(mass_near_sphere(mu, fit, dim == 2 ? th.ring_delta : th.shell_delta));
    asym.push_back(asymmetry_statistic(mu));
    min_r.push_back(min_distance_from_centroid(mu));
    const auto hist = radial_histogram(mu, th.radial_bin);
    bins.push_back(static_cast<std::size_t>(std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; })));
    histograms.push_back(hist);
    steps.push_back(res.steps);
    time.push_back(res.final_time);
    converged.push_back(res.converged);
    finals.push_back(mu);
  }

  rep.series["sweep"] = {{"alpha", alphas},
                         {"final_energy", number_array(energy)},
                         {"riesz_energy", number_array(riesz)},
                         {"diameter", diam},
                         {"boundary_fraction", boundary},
                         {"fit_radius", ring_radius},
                         {"fit_band_fraction", ring_frac},
                         {"asymmetry", asym},
                         {"min_centroid_distance", min_r},
                         {"occupied_bins", bins},
                         {"steps", steps},
                         {"final_time", time},
                         {"converged", converged}};
  rep.outputs["radial_histograms"] = histograms;
  rep.outputs["boundary_statistic"] = boundary_stat;
  rep.outputs["asymmetry_statistic"] = "(s_max - s_min) / s_max of covariance eigenvalues";
  if (failed_run || finals.empty()) return rep;

  const bool all_converged = std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
  auto record = [&](std::string id, bool pass, double measured, double threshold, std::string note) {
    if (!all_converged && !pass) {
      rep.inconclusive(std::move(id), measured, threshold, note + " (not all runs converged)");
    } else {
      rep.add(std::move(id), pass, measured, threshold, std::move(note));
    }
  };

  bool shrinking = true;
  for (std::size_t i = 1; i < diam.size(); ++i)
    shrinking = shrinking && std::abs(diam[i] - 1.0) < std::abs(diam[i - 1] - 1.0);
  record("diameter_trend", shrinking, std::abs(diam.back() - 1.0), std::abs(diam.front() - 1.0),
         "|diameter - 1| strictly decreasing in alpha");

  const std::size_t last = finals.size() - 1;
  if (variant == KernelVariant::LogRepulsion) {
    bool growing = true;
    for (std::size_t i = 1; i < boundary.size(); ++i) growing = growing && boundary[i] >= boundary[i - 1];
    record("boundary_mass_trend", growing, boundary.back(), boundary.front(), "boundary-mass fraction non-decreasing");
    record("ring_concentration", ring_frac[last] >= th.ring_fraction, ring_frac[last], th.ring_fraction,
           "share within ring_delta of the best-fit circle at the largest alpha");
    record("ring_radius", std::abs(ring_radius[last] - 0.5) <= th.ring_radius_tol, ring_radius[last], 0.5,
           "best-fit radius at the largest alpha");
    return rep;
  }

  const double nd = static_cast<double>(dim);
  if (dim == 2 || lambda > nd - 2.0) {
    const bool spread = bins[last] >= th.spread_min_bins && min_r[last] < th.spread_central_gap;
    record("support_spread", spread, static_cast<double>(bins[last]), static_cast<double>(th.spread_min_bins),
           "occupied radial bins and central gap at the largest alpha");
  } else if (lambda < nd - 2.0 && lambda >= 0.1) {
    record("shell_concentration", ring_frac[last] >= th.shell_fraction, ring_frac[last], th.shell_fraction,
           "share within shell_delta of the best-fit sphere at the largest alpha");
  }

  if (dim == 2) {
    // reference: equilibrium of the disk of diameter one on a matched sample
    ShapeSpec disk{shape::Ball{2, 0.5}, base.n_particles, base.seed};
    EquilibriumOptions opt;
    opt.seed = base.seed;
    opt.threads = base.threads;
    const auto eq = solve_equilibrium(sample(disk), lambda, opt);
    const double scaled = riesz[last] * std::pow(diam[last], lambda);
    const double gap = std::abs(scaled - eq.energy) / eq.energy;
    rep.outputs["disk_equilibrium_energy"] = eq.energy;
    rep.outputs["final_limit_energy_scaled"] = scaled;
    record("limit_energy_gap", gap <= th.limit_energy_rel_gap, gap, th.limit_energy_rel_gap,
           "relative gap between diameter-scaled final Riesz energy and the disk equilibrium");
  }
  return rep;
}

// --- ball capacities ---------------------------------------------------------

struct CapacityRow {
  std::size_t dim;
  std::vector<std::size_t> sizes;
  std::vector<double> capacities;
  std::vector<double> kkt;
  double oracle_capacity;
};

/// Sphere-sample capacities against the quadrature oracle under refinement
/// N/4, N/2, N (nested samples).
inline ExperimentReport capacity_table(double lambda, const std::vector<std::size_t>& dims, std::size_t n_points,
                                       std::uint64_t seed, const EquilibriumOptions& base = {},
                                       const VerdictThresholds& th = {}) {
  ExperimentReport rep;
  rep.name = "capacity-table";
  rep.thresholds = th;
  rep.params = {{"lambda", lambda}, {"dims", dims}, {"particles", n_points}, {"seed", seed},
                {"cap_factor", base.cap_factor}, {"restarts", base.restarts}, {"tol", base.tol}};
  if (n_points < 8) throw std::invalid_argument("capacity_table: need at least 8 points");

  const std::vector<std::size_t> levels{n_points / 4, n_points / 2, n_points};
  std::vector<double> oracle, cap_fine, gap_fine, gap_coarse, kkt_worst;
  bool bound_ok = true, refine_ok = true, kkt_ok = true;
  double worst_capacity = 0.0;
  for (std::size_t n : dims) {
    if (!(static_cast<double>(n) > lambda + 1.0)) throw std::invalid_argument("capacity_table: need dim > lambda + 1");
    const auto cloud = sample(ShapeSpec{shape::Sphere{n, 0.5}, n_points, seed});
    const double oc = 1.0 / sphere_energy_oracle(n, 0.5, lambda);
    std::vector<double> gaps;
    double kw = 0.0, cf = 0.0;
    for (std::size_t m : levels) {
      std::vector<double> coords(cloud.coords().begin(), cloud.coords().begin() + static_cast<std::ptrdiff_t>(m * n));
      auto opt = base;
      opt.seed = mix_seed(seed, n);
      const auto res = solve_equilibrium(DiscreteMeasure::uniform(n, std::move(coords)), lambda, opt);
      gaps.push_back(std::abs(res.capacity - oc));
      kw = std::max(kw, res.kkt_residual);
      cf = res.capacity;
      worst_capacity = std::max(worst_capacity, res.capacity);
      if (!(res.capacity < 1.0)) bound_ok = false;
    }
    if (!(gaps.back() < gaps.front())) refine_ok = false;
    if (kw > th.kkt_tol) kkt_ok = false;
    oracle.push_back(oc);
    cap_fine.push_back(cf);
    gap_fine.push_back(gaps.back());
    gap_coarse.push_back(gaps.front());
    kkt_worst.push_back(kw);
  }
  rep.series["capacity"] = {{"dim", dims},
                            {"oracle_capacity", oracle},
                            {"sample_capacity", cap_fine},
                            {"gap", gap_fine},
                            {"gap_coarse", gap_coarse},
                            {"kkt_residual", kkt_worst}};
  const double limit = std::pow(2.0, -0.5 * lambda);
  rep.outputs["limit_capacity"] = limit;
  rep.outputs["levels"] = levels;
  rep.outputs["note"] = "sphere energy equals the ball equilibrium energy only for lambda <= n - 2";

  bool trend = true;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    trend = trend && oracle[i] < limit;
    if (i > 0) trend = trend && oracle[i] > oracle[i - 1];
  }
  rep.add("oracle_trend", trend, oracle.empty() ? 0.0 : oracle.back(), limit,
          "oracle capacities increasing in n and below 2^(-lambda/2)");
  rep.add("refinement", refine_ok, gap_fine.empty() ? 0.0 : gap_fine.back(),
          gap_coarse.empty() ? 0.0 : gap_coarse.back(), "|capacity - oracle| smaller at N than at N/4");
  rep.add("capacity_bound", bound_ok, worst_capacity, 1.0, "every capacity of a diameter-one cloud below 1");
  rep.add("kkt", kkt_ok, *std::max_element(kkt_worst.begin(), kkt_worst.end()), th.kkt_tol, "worst KKT residual");
  return rep;
}

// --- high-dimensional symmetry breaking ----------------------------------------

struct CapEquilibrium {
  DiscreteMeasure measure;
  double energy;
  double kkt;
};

inline CapEquilibrium solve_cap(std::size_t dim, double lambda, std::size_t n_points, std::uint64_t seed,
                                const EquilibriumOptions& base) {
  const auto cloud = sample(ShapeSpec{shape::SphericalCap{dim}, n_points, mix_seed(seed, dim)});
  auto opt = base;
  opt.seed = mix_seed(seed, 1000 + dim);
  const auto res = solve_equilibrium(cloud, lambda, opt);
  return {equilibrium_measure(cloud, res), res.energy, res.kkt_residual};
}

/// Product-union construction on spherical caps versus the ball of the same
/// dimension.
inline ExperimentReport symmetry_break(double lambda, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                       std::size_t n_per_factor, std::uint64_t seed,
                                       const EquilibriumOptions& base = {}, const VerdictThresholds& th = {}) {
  ExperimentReport rep;
  rep.name = "symmetry-break";
  rep.thresholds = th;
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& [m, k] : pairs) pj.push_back({m, k});
  rep.params = {{"lambda", lambda}, {"pairs", pj}, {"particles_per_factor", n_per_factor}, {"seed", seed},
                {"cap_factor", base.cap_factor}, {"restarts", base.restarts}, {"tol", base.tol}};

  std::map<std::size_t, CapEquilibrium> caps;
  auto cap_for = [&](std::size_t d) -> const CapEquilibrium& {
    if (!(static_cast<double>(d) > lambda + 1.0)) throw std::invalid_argument("symmetry_break: need dim > lambda + 1");
    auto it = caps.find(d);
    if (it == caps.end()) it = caps.emplace(d, solve_cap(d, lambda, n_per_factor, seed, base)).first;
    return it->second;
  };

  std::vector<std::size_t> col_m, col_k;
  std::vector<double> col_a, col_b, col_t, col_e, col_ident, col_recip, col_sum, col_opt, col_cap, col_ball;
  double worst_identity = 0.0, worst_super = -kInfinity, worst_kkt = 0.0;
  bool positive = true;
  std::vector<std::size_t> witnesses;
  for (const auto& [m, k] : pairs) {
    const auto& left = cap_for(m);
    const auto& right = cap_for(k);
    worst_kkt = std::max({worst_kkt, left.kkt, right.kkt});
    const double a = left.energy - 1.0, b = right.energy - 1.0;
    if (!(a > 0.0) || !(b > 0.0)) {
      positive = false;
      continue;
    }
    const auto mix = optimal_mix(a, b);
    const auto combined = product_union(left.measure, right.measure, mix.t_star);
    const double e = limit_energy(combined, lambda, kDiameterTolerance, base.threads);
    const double ident = std::abs((e - 1.0) - mix.value);
    worst_identity = std::max(worst_identity, ident);
    const double recip = 1.0 / (e - 1.0), additive = 1.0 / a + 1.0 / b;

    // re-optimize on the union cloud, starting from the constructed weights
    auto opt = base;
    opt.initial_weights.assign(combined.weights().begin(), combined.weights().end());
    const double wmax = *std::max_element(opt.initial_weights.begin(), opt.initial_weights.end());
    opt.cap = std::min(1.0, std::max(base.cap_factor / static_cast<double>(combined.size()), wmax));
    opt.restarts = 0;
    opt.seed = mix_seed(seed, 7000 + m * 131 + k);
    const auto union_eq = solve_equilibrium(combined, lambda, opt);
    worst_kkt = std::max(worst_kkt, union_eq.kkt_residual);
    const double recip_opt = 1.0 / (union_eq.energy - 1.0);
    worst_super = std::max(worst_super, additive - std::min(recip, recip_opt));

    const std::size_t n = m + k;
    const double ball = static_cast<double>(n) - 2.0 >= lambda ? ball_capacity_oracle(n, 0.5, lambda)
                                                               : 1.0 / sphere_energy_oracle(n, 0.5, lambda);
    const double capacity = 1.0 / std::min(e, union_eq.energy);
    if (capacity > ball) witnesses.push_back(n);

    col_m.push_back(m);
    col_k.push_back(k);
    col_a.push_back(a);
    col_b.push_back(b);
    col_t.push_back(mix.t_star);
    col_e.push_back(e);
    col_ident.push_back(ident);
    col_recip.push_back(recip);
    col_sum.push_back(additive);
    col_opt.push_back(union_eq.energy);
    col_cap.push_back(capacity);
    col_ball.push_back(ball);
  }

  rep.series["pairs"] = {{"m", col_m},
                         {"k", col_k},
                         {"a", col_a},
                         {"b", col_b},
                         {"t_star", col_t},
                         {"combined_energy", col_e},
                         {"identity_error", col_ident},
                         {"reciprocal_excess", col_recip},
                         {"additive_bound", col_sum},
                         {"union_optimized_energy", col_opt},
                         {"combined_capacity", col_cap},
                         {"ball_capacity", col_ball}};
  nlohmann::json capj = nlohmann::json::object();
  for (const auto& [d, c] : caps) capj[std::to_string(d)] = {{"energy", c.energy}, {"kkt_residual", c.kkt}};
  rep.outputs["caps"] = capj;
  rep.outputs["witness_dims"] = witnesses;
  rep.outputs["witness"] = witnesses.empty() ? "not reached at explored dims" : "combined capacity exceeds ball";

  rep.add("cap_energy_above_one", positive, 0.0, 1.0, "every cap energy exceeds 1");
  rep.add("energy_identity", positive && worst_identity <= th.identity_tol, worst_identity, th.identity_tol,
          "|(E - 1) - ab/(a+b)| for the constructed measure");
  rep.add("superadditivity", positive && worst_super <= th.superadditivity_tol, worst_super, th.superadditivity_tol,
          "1/a + 1/b - 1/(E - 1), worst over pairs (constructed and re-optimized)");
  rep.add("kkt", worst_kkt <= th.kkt_tol, worst_kkt, th.kkt_tol, "worst KKT residual of the solved equilibria");
  return rep;
}

// --- recovery sequence ---------------------------------------------------------

/// The dilations A -> mu(e^(1/sqrt a) A) against the upper bound
/// e^(-sqrt a) + e^(lambda / sqrt a) E_inf(mu).
inline ExperimentReport recovery_check(double lambda, const std::vector<double>& alphas, const DiscreteMeasure& mu,
                                       const VerdictThresholds& th = {}) {
  if (alphas.empty()) throw std::invalid_argument("recovery_check: no alphas");
  const double d = diameter(mu);
  if (d > 1.0 + kDiameterTolerance) throw DomainError("recovery_check: measure diameter exceeds 1");

  ExperimentReport rep;
  rep.name = "recovery-check";
  rep.thresholds = th;
  rep.params = {{"lambda", lambda}, {"alphas", alphas}, {"atoms", mu.size()}, {"dim", mu.dim()}};
  const double e_inf = limit_energy(mu, lambda);
  rep.outputs["limit_energy"] = number(e_inf);
  rep.outputs["diameter"] = d;

  std::vector<double> betas, lhs, rhs, slack, conv;
  double worst_violation = -kInfinity;
  for (double a : alphas) {
    const double beta = std::exp(1.0 / std::sqrt(a));
    KernelParams k{a, lambda, mu.dim(), KernelVariant::Power};
    const double l = energy(dilate(mu, beta), k);
    const double r = std::exp(-std::sqrt(a)) + std::exp(lambda / std::sqrt(a)) * e_inf;
    betas.push_back(beta);
    lhs.push_back(l);
    rhs.push_back(r);
    slack.push_back(r - l);
    conv.push_back(l - e_inf);
    worst_violation = std::max(worst_violation, l - r);
  }
  rep.series["recovery"] = {{"alpha", alphas}, {"beta", betas},  {"dilated_energy", lhs},
                            {"upper_bound", rhs}, {"slack", slack}, {"convergence_gap", conv}};

  rep.add("upper_bound", worst_violation <= th.recovery_slack, worst_violation, th.recovery_slack,
          "max over alpha of E_alpha(dilated) - bound");
  const double last_slack = slack.back();
  const double allowed = e_inf > 0.0 ? th.recovery_gap_ratio * e_inf : std::exp(-std::sqrt(alphas.back()));
  rep.add("gap_at_max_alpha", last_slack <= allowed, last_slack, allowed,
          "bound minus dilated energy at the largest alpha");
  bool decreasing = true;
  for (std::size_t i = 1; i < conv.size(); ++i) decreasing = decreasing && std::abs(conv[i]) <= std::abs(conv[i - 1]);
  rep.add("convergence", decreasing, std::abs(conv.back()), std::abs(conv.front()),
          "|E_alpha(dilated) - E_inf| non-increasing in alpha");
  return rep;
}

// --- potential-theoretic checks ------------------------------------------------

/// Evenly spread unit directions (seeded Gaussian normalisation).
inline std::vector<std::vector<double>> shell_probes(std::size_t dim, std::size_t count, std::span<const double> center,
                                                     double radius, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xB0));
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> p(dim);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& c : p) {
        c = rng.normal();
        n2 += c * c;
      }
    } while (n2 == 0.0);
    const double s = radius / std::sqrt(n2);
    for (std::size_t k = 0; k < dim; ++k) p[k] = center[k] + s * p[k];
    out.push_back(std::move(p));
  }
  return out;
}

struct LaplacianSummary {
  double worst_error = 0.0;
  bool sign_ok = true;
  std::size_t probes = 0;
};

/// Finite-difference against analytic Laplacian of the potential, with the sign
/// expected from lambda versus n - 2.
inline LaplacianSummary laplacian_survey(const DiscreteMeasure& mu, double lambda,
                                         const std::vector<std::vector<double>>& probes, double h, double tol) {
  LaplacianSummary s;
  const double regime = lambda + 2.0 - static_cast<double>(mu.dim());
  for (const auto& x : probes) {
    const auto p = laplacian_probe(mu, lambda, x, h);
    s.worst_error = std::max(s.worst_error, std::abs(p.fd - p.analytic));
    if (regime < 0.0) s.sign_ok = s.sign_ok && p.analytic < 0.0 && p.fd < 0.0;
    else if (regime > 0.0) s.sign_ok = s.sign_ok && p.analytic > 0.0 && p.fd > 0.0;
    else s.sign_ok = s.sign_ok && p.analytic == 0.0 && std::abs(p.fd) <= tol;
    ++s.probes;
  }
  return s;
}

/// Equilibrium on a sampled shape with its optimality, exterior-potential and
/// Laplacian diagnostics.
inline ExperimentReport frostman_check(const ShapeSpec& spec, double lambda, const EquilibriumOptions& base = {},
                                       const VerdictThresholds& th = {}) {
  ExperimentReport rep;
  rep.name = "frostman-check";
  rep.thresholds = th;
  rep.params = {{"shape", to_json(spec)}, {"lambda", lambda}, {"cap_factor", base.cap_factor},
                {"restarts", base.restarts}, {"tol", base.tol}};
  const auto cloud = sample(spec);
  const std::size_t n = cloud.dim();
  const auto res = solve_equilibrium(cloud, lambda, base);
  const auto mu = equilibrium_measure(cloud, res);
  const auto c = centroid(mu);
  const double reach = max_distance_from_centroid(mu);

  rep.outputs["energy"] = res.energy;
  rep.outputs["capacity"] = res.capacity;
  rep.outputs["kkt_residual"] = res.kkt_residual;
  rep.outputs["diameter"] = diameter(mu);
  rep.outputs["centroid_potential"] = number(potential_at(mu, lambda, c));
  rep.add("kkt", res.kkt_residual <= th.kkt_tol, res.kkt_residual, th.kkt_tol, "equilibrium KKT residual");

  if (lambda >= static_cast<double>(n) - 2.0) {
    const auto far = shell_probes(n, 64, c, 10.0 * reach, spec.seed);
    const double excess = potential_bound_check(res, cloud, lambda, far);
    rep.outputs["exterior_excess"] = excess;
    rep.add("exterior_potential", excess <= th.potential_excess_tol, excess, th.potential_excess_tol,
            "max phi(probe) - I over probes at 10x the cloud radius");
  }

  const auto near = shell_probes(n, 100, c, 2.0 * reach + 1.0, mix_seed(spec.seed, 1));
  const auto lap = laplacian_survey(mu, lambda, near, th.laplacian_step, th.laplacian_tol);
  rep.outputs["laplacian_worst_error"] = lap.worst_error;
  rep.add("laplacian_agreement", lap.worst_error <= th.laplacian_tol, lap.worst_error, th.laplacian_tol,
          "|fd - analytic| over 100 exterior probes");
  const double regime = lambda + 2.0 - static_cast<double>(n);
  rep.outputs["regime"] = regime < 0.0 ? "sub-newtonian" : (regime > 0.0 ? "super-newtonian" : "newtonian");
  rep.add("laplacian_sign", lap.sign_ok, regime, 0.0, "sign of the Laplacian matches lambda versus n - 2");
  return rep;
}

} // namespace rswarm
