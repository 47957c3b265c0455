// riesz-swarm: command-line front end for simulations, equilibria and the
// experiment reports.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rswarm/dynamics.hpp"
#include "rswarm/equilibrium.hpp"
#include "rswarm/experiments.hpp"
#include "rswarm/measure_io.hpp"
#include "rswarm/shapes.hpp"

using namespace rswarm;

namespace {

struct Globals {
  double lambda = 1.0;
  double alpha = 2.0;
  std::size_t dim = 2;
  std::string kernel = "power";
  std::size_t particles = 400;
  std::uint64_t seed = 0;
  double tol = -1.0;  // per-subcommand default when negative
  std::size_t max_steps = 0;
  double cap = 0.0;
  std::string output;
  std::string format = "json";
  unsigned threads = 1;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Sink {
public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
  std::ofstream file_;
};

unsigned threads_of(const Globals& g) { return g.threads == 0 ? resolve_threads(0) : g.threads; }

KernelParams kernel_of(const Globals& g) {
  KernelParams k{g.alpha, g.lambda, g.dim, parse_kernel_variant(g.kernel)};
  k.validate();
  if (auto w = k.warning()) std::cerr << "warning: " << *w << '\n';
  return k;
}

EquilibriumOptions equilibrium_options(const Globals& g, int restarts) {
  EquilibriumOptions opt;
  opt.cap = g.cap;
  if (g.tol > 0.0) opt.tol = g.tol;
  opt.seed = g.seed;
  opt.threads = threads_of(g);
  opt.restarts = restarts;
  return opt;
}

SimConfig sim_config(const Globals& g, double init_radius) {
  SimConfig cfg;
  cfg.kernel = kernel_of(g);
  cfg.n_particles = g.particles;
  cfg.seed = g.seed;
  cfg.threads = threads_of(g);
  cfg.init = init::UniformBall{init_radius};
  if (g.tol > 0.0) cfg.tol_velocity = g.tol;
  if (g.max_steps > 0) cfg.max_steps = g.max_steps;
  return cfg;
}

struct ShapeArgs {
  std::string kind = "sphere";
  double radius = 0.5;
  double t = 0.5;
  std::size_t left_dim = 0, right_dim = 0;
};

ShapeSpec shape_of(const Globals& g, const ShapeArgs& s) {
  ShapeSpec spec;
  spec.n_samples = g.particles;
  spec.seed = g.seed;
  if (s.kind == "ball") spec.kind = shape::Ball{g.dim, s.radius};
  else if (s.kind == "sphere") spec.kind = shape::Sphere{g.dim, s.radius};
  else if (s.kind == "reuleaux") spec.kind = shape::ReuleauxTriangle{};
  else if (s.kind == "simplex") spec.kind = shape::SimplexVertices{g.dim};
  else if (s.kind == "cap") spec.kind = shape::SphericalCap{g.dim};
  else if (s.kind == "product_union") {
    if (s.left_dim == 0 || s.right_dim == 0) throw std::invalid_argument("product_union needs --left-dim and --right-dim");
    spec.kind = shape::ProductUnion{
        std::make_shared<const ShapeSpec>(ShapeSpec{shape::SphericalCap{s.left_dim}, g.particles, mix_seed(g.seed, 1)}),
        std::make_shared<const ShapeSpec>(ShapeSpec{shape::SphericalCap{s.right_dim}, g.particles, mix_seed(g.seed, 2)}),
        s.t};
  } else throw std::invalid_argument("unknown shape '" + s.kind + "'");
  return spec;
}

void add_shape_options(CLI::App* sub, ShapeArgs& s) {
  sub->add_option("--shape", s.kind, "ball|sphere|reuleaux|simplex|cap|product_union")->capture_default_str();
  sub->add_option("--radius", s.radius, "ball/sphere radius")->capture_default_str();
  sub->add_option("--mix", s.t, "product_union weight t")->capture_default_str();
  sub->add_option("--left-dim", s.left_dim, "product_union left cap dimension");
  sub->add_option("--right-dim", s.right_dim, "product_union right cap dimension");
}

DiscreteMeasure read_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return measure_from_json(nlohmann::json::parse(in));
  return read_csv(in);
}

void write_measure(const Globals& g, const DiscreteMeasure& mu, const nlohmann::json& extra) {
  Sink sink(g.output);
  if (g.format == "csv") {
    write_csv(sink.os(), mu);
    return;
  }
  auto j = extra;
  j["measure"] = to_json(mu);
  sink.os() << j.dump(2) << '\n';
}

int emit(const Globals& g, ExperimentReport rep) {
  rep.timestamp = utc_now();
  rep.params["threads"] = g.threads;
  rep.outputs["bit_reproducible"] = g.threads == 1;
  Sink sink(g.output);
  if (g.format == "csv") write_series_csv(sink.os(), rep);
  else sink.os() << to_json(rep).dump(2) << '\n';
  for (const auto& v : rep.verdicts)
    std::cerr << to_string(v.status) << "  " << v.id << "  measured=" << format_double(v.measured) << '\n';
  return rep.exit_code();
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(const std::vector<std::string>& raw) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : raw) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw std::invalid_argument("pair '" + s + "' must look like MxK");
    out.emplace_back(std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1)));
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attractive-repulsive swarms, Riesz equilibria and their strong-attraction limit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--lambda", g.lambda, "repulsion exponent")->capture_default_str();
  app.add_option("--alpha", g.alpha, "attraction exponent")->capture_default_str();
  app.add_option("--dim", g.dim, "ambient dimension")->capture_default_str();
  app.add_option("--kernel", g.kernel, "power|log|normalized")->capture_default_str();
  app.add_option("--particles", g.particles, "particles or sample points")->capture_default_str();
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--tol", g.tol, "velocity tolerance (simulate) or KKT tolerance (equilibrium)");
  app.add_option("--max-steps", g.max_steps, "step-attempt cap for simulations");
  app.add_option("--cap", g.cap, "per-atom weight cap; 0 picks cap_factor/N")->capture_default_str();
  app.add_option("--output", g.output, "output path, stdout when omitted");
  app.add_option("--format", g.format, "json|csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads, 0 = auto")->capture_default_str();

  double init_radius = 0.45;
  std::size_t snapshot_every = 0;
  std::string snapshot_path;
  auto* simulate = app.add_subcommand("simulate", "run the particle gradient flow");
  simulate->add_option("--init-radius", init_radius, "radius of the uniform initial ball")->capture_default_str();
  simulate->add_option("--snapshot-every", snapshot_every, "write positions every k accepted steps");
  simulate->add_option("--snapshots", snapshot_path, "CSV file for snapshots");

  ShapeArgs eq_shape, sh_shape, fr_shape, rc_shape;
  std::string eq_input, rc_input;
  int restarts = 3;
  auto* equilibrium = app.add_subcommand("equilibrium", "equilibrium measure on a sampled shape or a point file");
  add_shape_options(equilibrium, eq_shape);
  equilibrium->add_option("--input", eq_input, "support cloud (.csv or .json) instead of --shape");
  equilibrium->add_option("--restarts", restarts, "random restarts")->capture_default_str();

  auto* shape_cmd = app.add_subcommand("shape", "sample a shape");
  add_shape_options(shape_cmd, sh_shape);

  std::vector<double> sweep_alphas{2, 20, 200};
  auto* sweep = app.add_subcommand("alpha-sweep", "flow minimizers across alpha");
  sweep->add_option("--alphas", sweep_alphas, "increasing alphas")->delimiter(',');
  sweep->add_option("--init-radius", init_radius, "radius of the uniform initial ball")->capture_default_str();

  std::vector<std::size_t> dims{3, 4, 5, 6, 7, 8, 9, 10};
  auto* table = app.add_subcommand("capacity-table", "sphere capacities against the quadrature oracle");
  table->add_option("--dims", dims, "dimensions")->delimiter(',');

  std::vector<std::string> pairs_raw{"4x4", "4x8", "8x8"};
  auto* sym = app.add_subcommand("symmetry-break", "product-union construction on spherical caps");
  sym->add_option("--pairs", pairs_raw, "factor dimensions MxK")->delimiter(',');

  std::vector<double> rc_alphas{10, 100, 1000};
  auto* recovery = app.add_subcommand("recovery-check", "dilation recovery sequence against its bound");
  recovery->add_option("--alphas", rc_alphas, "alphas")->delimiter(',');
  recovery->add_option("--input", rc_input, "measure (.csv or .json) instead of --shape");
  add_shape_options(recovery, rc_shape);

  auto* frostman = app.add_subcommand("frostman-check", "equilibrium optimality and Laplacian probes");
  add_shape_options(frostman, fr_shape);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      auto cfg = sim_config(g, init_radius);
      std::ofstream snaps;
      if (snapshot_every > 0) {
        if (snapshot_path.empty()) throw std::invalid_argument("--snapshot-every needs --snapshots");
        snaps.open(snapshot_path);
        if (!snaps) throw std::runtime_error("cannot open '" + snapshot_path + "'");
        cfg.snapshot_every = snapshot_every;
        cfg.on_snapshot = csv_snapshot_writer(snaps, cfg.kernel.dim);
      }
      const auto res = run(cfg);
      nlohmann::json history = nlohmann::json::array();
      for (const auto& s : res.energy_history) history.push_back({s.t, s.energy});
      write_measure(g, res.final,
                    {{"converged", res.converged}, {"steps", res.steps}, {"rejected", res.rejected},
                     {"final_time", res.final_time}, {"final_energy", res.final_energy},
                     {"final_diameter", res.final_diameter}, {"max_speed", res.max_speed},
                     {"energy_history", history}});
      return res.converged ? 0 : 3;
    }
    if (*equilibrium) {
      const auto cloud = eq_input.empty() ? sample(shape_of(g, eq_shape)) : read_measure(eq_input);
      const auto res = solve_equilibrium(cloud, g.lambda, equilibrium_options(g, restarts));
      if (g.format == "csv") write_measure(g, equilibrium_measure(cloud, res), {});
      else {
        Sink sink(g.output);
        sink.os() << to_json(res).dump(2) << '\n';
      }
      return 0;
    }
    if (*shape_cmd) {
      const auto spec = shape_of(g, sh_shape);
      write_measure(g, sample(spec), {{"shape", to_json(spec)}});
      return 0;
    }
    if (*sweep) {
      auto cfg = sim_config(g, init_radius);
      return emit(g, alpha_sweep(g.lambda, g.dim, sweep_alphas, cfg));
    }
    if (*table) return emit(g, capacity_table(g.lambda, dims, g.particles, g.seed, equilibrium_options(g, 0)));
    if (*sym) return emit(g, symmetry_break(g.lambda, parse_pairs(pairs_raw), g.particles, g.seed, equilibrium_options(g, 0)));
    if (*recovery) {
      const auto mu = rc_input.empty() ? sample(shape_of(g, rc_shape)) : read_measure(rc_input);
      return emit(g, recovery_check(g.lambda, rc_alphas, mu));
    }
    if (*frostman) return emit(g, frostman_check(shape_of(g, fr_shape), g.lambda, equilibrium_options(g, restarts)));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
