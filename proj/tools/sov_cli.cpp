// sov: batch driver for the spin-orbit NLS toolkit.
//
//   sov <command> [--config FILE] [--set key=value]... [flags] [--out DIR] [--workers N]
//
// Every flag is a shorthand for one config key; flags win over the file.
// Exit codes: 0 ok, 1 failed check, 2 bad configuration, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>

#include "CLI11.hpp"

#include "sov/bessel.hpp"
#include "sov/dynamics.hpp"
#include "sov/field.hpp"
#include "sov/functional.hpp"
#include "sov/groundstate.hpp"
#include "sov/io.hpp"
#include "sov/mixedmode.hpp"
#include "sov/parallel.hpp"
#include "sov/radial.hpp"
#include "sov/reference.hpp"
#include "sov/spectral.hpp"

namespace {

using namespace sov;

enum Exit { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumerical = 3 };

// ---------------------------------------------------------------------------
// Flag -> config key plumbing.

struct Flag {
  std::string name, key;
  std::string value;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::vector<std::unique_ptr<Flag>> flags;
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;
  std::string workers;

  void flag(const std::string& name, const std::string& key, const std::string& help) {
    auto f = std::make_unique<Flag>();
    f->name = name;
    f->key = key;
    app->add_option("--" + name, f->value, help + " (key: " + key + ")");
    flags.push_back(std::move(f));
  }

  Config build() const {
    Config c = config_file.empty() ? Config{} : Config::load(config_file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      c.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& f : flags)
      if (app->count("--" + f->name)) c.set(f->key, f->value);
    return c;
  }
};

void reject_unused(const Config& c) {
  const auto left = c.unused();
  if (left.empty()) return;
  std::string msg = "unknown configuration key(s):";
  for (const auto& k : left) msg += " " + k;
  throw ConfigError(msg);
}

unsigned worker_count(const Command& cmd) {
  std::string s = cmd.workers;
  if (s.empty())
    if (const char* e = std::getenv("SOV_WORKERS")) s = e;
  if (s.empty()) return 1;
  const long n = Config::to_int("workers", s);
  if (n < 1 || n > 1024) throw ConfigError("workers: must be in [1, 1024], got " + s);
  return static_cast<unsigned>(n);
}

std::filesystem::path out_dir(const Command& cmd) {
  if (!cmd.out.empty()) return cmd.out;
  if (const char* e = std::getenv("SOV_OUTPUT_DIR"); e && *e) return std::filesystem::path(e) / cmd.name;
  return std::filesystem::path("sov_out") / cmd.name;
}

template <typename T>
T positive(const std::string& key, T v) {
  if (!(v > T{})) throw ConfigError(key + ": must be positive");
  return v;
}

Grid2D grid_from(const Config& c, double L, long n) {
  const double l = positive("L", c.get_double("L", L));
  const long pts = c.get_int("n", n);
  if (pts < 4 || (pts & (pts - 1)) != 0) throw ConfigError("n: must be a power of two >= 4");
  return Grid2D(l, static_cast<std::size_t>(pts));
}

RadialGrid radial_grid_from(const Config& c, double nu) {
  const double r_max = positive("r_max", c.get_double("r_max", 16.0));
  const double h = positive("h", c.get_double("h", 0.02));
  if (h > 0.1 / nu) throw ConfigError("h: radial spacing must be <= 1/(10 nu)");
  return RadialGrid(r_max, h);
}

FlowOptions flow_from(const Config& c) {
  FlowOptions f;
  f.tol = positive("tol", c.get_double("tol", f.tol));
  f.max_iterations = static_cast<int>(positive("max_iterations", c.get_int("max_iterations", f.max_iterations)));
  f.shift = positive("shift", c.get_double("shift", f.shift));
  f.keep_trace = false;
  return f;
}

Scheme scheme_from(const std::string& s) {
  if (s == "strang") return Scheme::strang;
  if (s == "lie") return Scheme::lie;
  throw ConfigError("scheme: expected strang or lie, got '" + s + "'");
}

Perturbation perturbation_from(const std::string& s) {
  if (s == "phase") return Perturbation::phase;
  if (s == "amplitude") return Perturbation::amplitude;
  if (s == "noise") return Perturbation::noise;
  throw ConfigError("kinds: unknown perturbation '" + s + "'");
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename F>
void write_file(RunOutput& run, const std::string& name, F&& body) {
  std::ofstream f(run.path(name));
  if (!f) throw ConfigError("cannot write " + (run.dir() / name).string());
  body(f);
}

void save_state(RunOutput& run, const std::string& name, const FieldPair2D& u) {
  save_binary(run.path(name).string(), u);
}

// ---------------------------------------------------------------------------

int run_semivortex(const Config& c, RunOutput& run, unsigned workers) {
  const Parameters par = parameters_from(c);
  const int m = static_cast<int>(c.get_int("m", 0));
  const auto rhos = c.get_list("rho", {0.05});
  const RadialGrid grid = radial_grid_from(c, par.nu);
  SemivortexOptions opt;
  opt.flow = flow_from(c);
  for (double r : rhos) positive("rho", r);
  reject_unused(c);

  const auto sols = parallel_map<SolveResult<RadialPair>>(
      rhos.size(), workers, [&](std::size_t i) { return solve_semivortex(m, rhos[i], par, grid, opt); });

  for (std::size_t i = 0; i < sols.size(); ++i) {
    const auto& s = sols[i];
    const std::string file = rhos.size() == 1 ? "profile.csv" : "profile_" + std::to_string(i) + ".csv";
    write_file(run, file, [&](std::ostream& os) { write_profile_csv(os, s.pair); });
    const double h1 = hdot1_m(s.pair);
    run.record(Record("semivortex")
                   .add("m", m)
                   .add("rho", rhos[i])
                   .add("", s.energy)
                   .add("omega", s.omega)
                   .add("residual", s.residual)
                   .add("iterations", s.iterations)
                   .add("hdot1", h1)
                   .add("hdot1_over_rho", h1 / rhos[i])
                   .add("deficit", s.energy.total + 0.25 * par.nu * par.nu * rhos[i])
                   .add("tail_ratio", radial_tail_ratio(s.pair))
                   .add("omega_positive", s.omega > 0.0)
                   .add("profile", file));
  }
  write_file(run, "energy_curve.csv", [&](std::ostream& os) {
    os << "rho,energy,omega,hdot1,deficit\n" << std::setprecision(17);
    for (std::size_t i = 0; i < sols.size(); ++i)
      os << rhos[i] << ',' << sols[i].energy.total << ',' << sols[i].omega << ',' << hdot1_m(sols[i].pair)
         << ',' << sols[i].energy.total + 0.25 * par.nu * par.nu * rhos[i] << '\n';
  });
  return kOk;
}

// ---------------------------------------------------------------------------

Seed seed_from(const std::string& kind, const Config& c) {
  if (kind == "semivortex") return seed::SemiVortex{static_cast<int>(c.get_int("m", 0)), {}};
  if (kind == "mixedmode")
    return seed::MixedMode{static_cast<int>(c.get_int("m", 0)), c.get_double("eta", kPi / 4.0), {}};
  if (kind == "gaussian") return seed::Gaussian{positive("width", c.get_double("width", 2.0))};
  if (kind == "random") return seed::Random{static_cast<std::uint64_t>(c.get_int("random_seed", 1))};
  throw ConfigError("seed: expected semivortex, mixedmode, gaussian, random or protocol, got '" + kind + "'");
}

Record entry_record(const ProtocolEntry& e, bool best) {
  Record r("groundstate");
  r.add("seed", e.seed).add("converged", e.converged);
  if (e.converged) {
    r.add("energy", e.energy)
        .add("omega", e.omega)
        .add("residual", e.residual)
        .add("iterations", e.iterations)
        .add("label", e.label.to_string())
        .add("label_fraction", e.label.fraction);
  } else {
    r.add("failure", e.failure);
  }
  return r.add("best", best);
}

int run_groundstate(const Config& c, RunOutput& run, unsigned workers) {
  const Parameters par = parameters_from(c);
  const double rho = positive("rho", c.get_double("rho", 0.05));
  const Grid2D g = grid_from(c, 16.0, 128);
  GroundstateOptions opt;
  opt.flow = flow_from(c);
  opt.radial_h = positive("radial_h", c.get_double("radial_h", 0.02));
  const std::string kind = c.get_string("seed", "protocol");

  std::vector<Seed> seeds;
  if (kind == "protocol") {
    seeds = {seed::SemiVortex{0, {}}, seed::SemiVortex{-1, {}}, seed::MixedMode{0, kPi / 4.0, {}},
             seed::Gaussian{}};
    if (!par.lambdas_equal()) seeds.push_back(seed::MixedMode{-1, kPi / 4.0, {}});
  } else {
    seeds = {seed_from(kind, c)};
  }
  reject_unused(c);

  // one protocol per seed, merged in seed order
  const auto parts = parallel_map<ProtocolReport>(seeds.size(), workers, [&](std::size_t i) {
    return groundstate_protocol(rho, par, g, opt, {seeds[i]});
  });
  std::optional<std::size_t> best;
  double best_sv = INFINITY, best_mx = INFINITY;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& e = parts[i].entries.front();
    if (!e.converged) continue;
    if (!best || e.energy < parts[*best].entries.front().energy) best = i;
    if (std::holds_alternative<seed::SemiVortex>(seeds[i])) best_sv = std::min(best_sv, e.energy);
    if (std::holds_alternative<seed::MixedMode>(seeds[i])) best_mx = std::min(best_mx, e.energy);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) run.record(entry_record(parts[i].entries.front(), best == i));
  if (!best) throw NumericalFailure("no seed converged");

  const FieldPair2D& state = *parts[*best].best_state;
  const double bnd = boundary_ratio(state);
  save_state(run, "groundstate.sov2", state);
  Record sum("groundstate_summary");
  sum.add("rho", rho)
      .add("lambda_zero", par.lambda_zero)
      .add("best_seed", parts[*best].entries.front().seed)
      .add("label", parts[*best].entries.front().label.to_string())
      .add("energy", parts[*best].entries.front().energy)
      .add("boundary_ratio", bnd)
      .add("truncation_warning", bnd > 1e-10);
  if (std::isfinite(best_sv) && std::isfinite(best_mx)) sum.add("semivortex_minus_mixed", best_sv - best_mx);
  run.record(sum);
  if (bnd > 1e-10)
    std::cerr << "warning: ground state reaches the box edge (boundary ratio " << bnd
              << "); enlarge L or the result is a torus state\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run_witness(const Config& c, RunOutput& run, unsigned) {
  const Parameters par = parameters_from(c);
  WitnessConfig w;
  w.m = static_cast<int>(c.get_int("m", 0));
  w.rho = positive("rho", c.get_double("rho", 0.05));
  w.nu = par.nu;
  const auto R = c.get_list("R", {50, 100, 200, 400, 800});
  reject_unused(c);

  const WitnessReport rep = witness_report(w, R, par);
  write_file(run, "witness.csv", [&](std::ostream& os) { write_witness_csv(os, rep); });
  for (const auto& row : rep.rows)
    run.record(Record("witness_row")
                   .add("R", row.R)
                   .add("a", row.a)
                   .add("window", row.a * row.a * row.R / w.rho)
                   .add("first_square", row.first_square)
                   .add("elin_gap", row.elin_gap)
                   .add("nonlinear", row.nonlinear)
                   .add("total_deficit", row.total_deficit));
  const bool negative = rep.r_star.has_value();
  Record s("witness_summary");
  s.add("m", w.m)
      .add("rho", w.rho)
      .add("nu", w.nu)
      .add("gap_slope", rep.gap_slope)
      .add("nonlinear_slope", rep.nonlinear_slope)
      .add("window_lo", rep.window_lo)
      .add("window_hi", rep.window_hi)
      .add("n_scaled_min", rep.n_scaled_min)
      .add("deficit_negative", negative);
  if (rep.r_star) s.add("r_star", *rep.r_star);
  if (rep.r_star_extrapolated) s.add("r_star_extrapolated", *rep.r_star_extrapolated);
  run.record(s);
  if (!negative) std::cerr << "witness: total deficit is not negative at the largest R\n";
  return negative ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

int run_spectrum(const Config& c, RunOutput& run, unsigned) {
  const Parameters par = parameters_from(c);
  const Grid2D g = grid_from(c, 4.0 * kPi, 64);
  const double phi = c.get_double("phi", 0.3);
  const double r_max = positive("r_max", c.get_double("r_max", 10.0));
  const int terms = static_cast<int>(c.get_int("terms", 40));
  reject_unused(c);
  const double nu = par.nu;

  const auto bottom = spectrum_bottom(nu);
  run.record(Record("spectrum_bottom")
                 .add("value", bottom.value)
                 .add("scan_min", bottom.scan_min)
                 .add("scan_argmin", bottom.scan_argmin)
                 .add("target_argmin", nu));

  // lattice frequency closest to the resonant circle |k| = nu along x
  const double unit = kPi / g.L;
  const double kx = std::max(1.0, std::round(nu / unit)) * unit;
  bool ok = std::abs(bottom.scan_min - bottom.value) <= 1e-12;
  for (Sign s : {Sign::plus, Sign::minus}) {
    const double lam = 0.5 * kx * kx + (s == Sign::plus ? nu : -nu) * kx;
    const double res = eigen_residual(resonance_wave(kx, 0.0, s, g), lam, nu);
    ok = ok && res < 1e-12;
    run.record(Record("resonance")
                   .add("branch", s == Sign::plus ? "plus" : "minus")
                   .add("kx", kx)
                   .add("eigenvalue", lam)
                   .add("residual", res));
  }
  const auto ja = jacobi_anger_check(nu, phi, r_max, terms);
  ok = ok && ja.plane_error < 1e-12 && ja.regrouped_error < 1e-12;
  run.record(Record("jacobi_anger")
                 .add("r_max", r_max)
                 .add("terms", terms)
                 .add("plane_error", ja.plane_error)
                 .add("regrouped_error", ja.regrouped_error));
  write_file(run, "dispersion.csv", [&](std::ostream& os) { write_dispersion_csv(os, g, nu); });
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

FieldPair2D gaussian_state(const Grid2D& g, double rho, double width) {
  FieldPair2D u = make_seed(seed::Gaussian{width}, rho, Parameters{}, g, {});
  detail::normalize_mass(u, rho);
  return u;
}

EvolutionConfig evolution_from(const Config& c, double t_final) {
  EvolutionConfig e;
  e.dt = positive("dt", c.get_double("dt", e.dt));
  e.t_final = c.get_double("t_final", t_final);
  if (!(e.t_final >= 0.0)) throw ConfigError("t_final: must be >= 0");
  e.record_every = static_cast<int>(positive("record_every", c.get_int("record_every", e.record_every)));
  e.scheme = scheme_from(c.get_string("scheme", "strang"));
  e.backward = c.get_bool("backward", false);
  e.blowup_hdot1 = positive("blowup_hdot1", c.get_double("blowup_hdot1", e.blowup_hdot1));
  return e;
}

int run_evolve(const Config& c, RunOutput& run, unsigned) {
  const Parameters par = parameters_from(c);
  const std::string input = c.get_string("input", "");
  FieldPair2D u0;
  if (input.empty()) {
    const Grid2D g = grid_from(c, 16.0, 128);
    u0 = gaussian_state(g, positive("rho", c.get_double("rho", 0.05)), positive("width", c.get_double("width", 2.0)));
  } else {
    u0 = load_binary(input);
  }
  const EvolutionConfig ec = evolution_from(c, 1.0);
  reject_unused(c);

  const auto ev = evolve(u0, par, ec);
  write_file(run, "diagnostics.csv", [&](std::ostream& os) { write_diagnostics_csv(os, ev.diagnostics); });
  save_state(run, "final.sov2", ev.final_state);
  const auto& d0 = ev.diagnostics.front();
  const auto& d1 = ev.diagnostics.back();
  run.record(Record("evolve")
                 .add("steps", ev.steps)
                 .add("t_final", d1.t)
                 .add("mass", d1.mass)
                 .add("energy", d1.energy)
                 .add("mass_drift", std::abs(d1.mass - d0.mass) / d0.mass)
                 .add("energy_drift", std::abs(d1.energy - d0.energy) / std::max(std::abs(d0.energy), 1e-300)));
  return kOk;
}

// ---------------------------------------------------------------------------

int run_stability(const Config& c, RunOutput& run, unsigned workers) {
  const Parameters par = parameters_from(c);
  const std::string input = c.get_string("input", "");
  const double delta = positive("delta", c.get_double("delta", 1e-3));
  std::vector<Perturbation> kinds;
  for (const auto& k : split_words(c.get_string("kinds", "phase,amplitude,noise")))
    kinds.push_back(perturbation_from(k));
  if (kinds.empty()) throw ConfigError("kinds: empty list");
  EvolutionConfig ec = evolution_from(c, 20.0);

  FieldPair2D Q;
  if (input.empty()) {
    const double rho = positive("rho", c.get_double("rho", 0.05));
    const Grid2D g = grid_from(c, 16.0, 128);
    GroundstateOptions opt;
    opt.flow = flow_from(c);
    const int m = static_cast<int>(c.get_int("m", 0));
    reject_unused(c);
    const auto gs = solve_groundstate(rho, par, g, seed::SemiVortex{m, {}}, opt);
    Q = gs.solve.pair;
    save_state(run, "groundstate.sov2", Q);
    run.record(Record("stability_groundstate")
                   .add("rho", rho)
                   .add("energy", gs.solve.energy.total)
                   .add("omega", gs.solve.omega)
                   .add("residual", gs.solve.residual));
  } else {
    reject_unused(c);
    Q = load_binary(input);
  }

  const auto runs = parallel_map<StabilityReport>(kinds.size(), workers, [&](std::size_t i) {
    return stability_experiment(Q, par, delta, ec, {kinds[i]});
  });
  double sup = 0.0;
  for (const auto& rep : runs) {
    const auto& r = rep.runs.front();
    const std::string file = std::string("stability_") + perturbation_name(r.kind) + ".csv";
    write_file(run, file, [&](std::ostream& os) { write_diagnostics_csv(os, r.diagnostics); });
    run.record(Record("stability_run")
                   .add("kind", perturbation_name(r.kind))
                   .add("delta", r.delta)
                   .add("initial_distance", r.initial_distance)
                   .add("sup_distance", r.sup_distance)
                   .add("diagnostics", file));
    sup = std::max(sup, r.sup_distance);
  }
  run.record(Record("stability_summary").add("t_final", ec.t_final).add("sup_distance", sup));
  return kOk;
}

// ---------------------------------------------------------------------------

std::vector<double> default_etas() {
  std::vector<double> out;
  for (int k = 0; k < 8; ++k) out.push_back(k * kPi / 8.0);
  return out;
}

int run_mixedmode(const Config& c, RunOutput& run, unsigned workers) {
  const Parameters par = parameters_from(c);
  if (!par.lambdas_equal()) throw ConfigError("lambda_*: mixed modes need lambda_plus = lambda_minus = lambda_zero");
  const int m = static_cast<int>(c.get_int("m", 0));
  const double rho = positive("rho", c.get_double("rho", 0.05));
  const RadialGrid rg = radial_grid_from(c, par.nu);
  const Grid2D g = grid_from(c, 16.0, 128);
  const auto etas = c.get_list("eta", default_etas());
  SemivortexOptions opt;
  opt.flow = flow_from(c);
  reject_unused(c);

  const auto sv = solve_semivortex(m, rho, par, rg, opt);
  const auto reps = parallel_map<MixedReport>(etas.size(), workers, [&](std::size_t i) {
    return verify_mixed(build_mixed(sv.pair, etas[i], g, par), sv.pair, sv.omega, par, etas[i]);
  });
  bool ok = true;
  double e_lo = INFINITY, e_hi = -INFINITY;
  for (const auto& r : reps) {
    ok = ok && r.passed;
    e_lo = std::min(e_lo, r.energy.total);
    e_hi = std::max(e_hi, r.energy.total);
    run.record(Record("mixedmode")
                   .add("eta", r.eta)
                   .add("density_error", r.density_error)
                   .add("rel_total", r.rel_total)
                   .add("rel_mass", r.rel_mass)
                   .add("rel_kinetic", r.rel_kinetic)
                   .add("rel_vso", r.rel_vso)
                   .add("rel_nonlinear", r.rel_nonlinear)
                   .add("residual_mixed", r.residual_mixed)
                   .add("residual_lifted", r.residual_lifted)
                   .add("energy", r.energy.total)
                   .add("mass", r.mass)
                   .add("passed", r.passed));
  }
  const double eta_out = std::find(etas.begin(), etas.end(), kPi / 4.0) != etas.end() ? kPi / 4.0 : etas.front();
  save_state(run, "mixed.sov2", build_mixed(sv.pair, eta_out, g, par));
  run.record(Record("mixedmode_summary")
                 .add("m", m)
                 .add("rho", rho)
                 .add("omega", sv.omega)
                 .add("energy_spread", (e_hi - e_lo) / std::abs(e_lo))
                 .add("saved_eta", eta_out)
                 .add("passed", ok));
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

int run_cgn(const Config& c, RunOutput& run, unsigned) {
  const Parameters par = parameters_from(c);
  const Grid2D g = grid_from(c, 12.0, 64);
  CgnOptions opt;
  opt.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long>(opt.seed)));
  opt.max_iterations = static_cast<int>(positive("max_iterations", c.get_int("max_iterations", opt.max_iterations)));
  opt.gain_tol = positive("gain_tol", c.get_double("gain_tol", opt.gain_tol));
  reject_unused(c);

  const auto res = estimate_cgn_detailed(par, g, opt);
  for (std::size_t i = 0; i < res.per_start.size(); ++i)
    run.record(Record("cgn_start")
                   .add("index", static_cast<int>(i))
                   .add("quotient", res.per_start[i])
                   .add("converged", static_cast<bool>(res.converged[i])));
  run.record(Record("cgn").add("L", g.L).add("n", static_cast<long>(g.n)).add("value", res.value));
  save_state(run, "cgn_maximizer.sov2", res.best);
  return kOk;
}

// ---------------------------------------------------------------------------
// Self-test: a fast pass over the invariants of every module.

struct Check {
  std::string name;
  double value;
  double bound;
};

FieldPair2D random_pair(const Grid2D& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  FieldPair2D u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    u.plus[i] = {nd(rng), nd(rng)};
    u.minus[i] = {nd(rng), nd(rng)};
  }
  u = detail::smooth_pair(u, 2.0);
  detail::normalize_mass(u, 1.0);
  return u;
}

std::vector<Check> selftest_checks() {
  std::vector<Check> out;
  std::mt19937_64 rng(20240611);
  const Parameters par;
  const Grid2D g(6.0, 32);

  double sq = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto u = random_pair(g, rng);
    const auto parts = elin_square(u, par);
    const double el = energy(u, par).elin;
    sq = std::max(sq, std::abs(parts[0] + parts[1] + parts[2] - el) / (1.0 + std::abs(el)));
  }
  out.push_back({"completed_square", sq, 1e-10});

  double gr = 0.0;
  {
    const auto u = random_pair(g, rng);
    const auto G = energy_gradient(u, par);
    for (int t = 0; t < 5; ++t) {
      const auto v = random_pair(g, rng);
      const double h = 1e-4;
      FieldPair2D a = u, b = u;
      a.axpy(h, v);
      b.axpy(-h, v);
      const double fd = (energy(a, par).total - energy(b, par).total) / (2.0 * h);
      const double an = real_inner(G, v);
      gr = std::max(gr, std::abs(fd - an) / std::max(std::abs(an), 1e-12));
    }
  }
  out.push_back({"gradient_fd", gr, 1e-6});

  double bj = 0.0, rec = 0.0;
  for (int l = 0; l <= 8; ++l)
    for (double x = 0.25; x <= 50.0; x += 0.75) {
      const double ref = reference::bessel_j_series(l, x);
      bj = std::max(bj, std::abs(bessel_j(l, x) - ref) / std::abs(ref));
      if (l >= 1)
        rec = std::max(rec, std::abs(bessel_jn(l - 1, x) + bessel_jn(l + 1, x) - 2.0 * l / x * bessel_jn(l, x)));
    }
  out.push_back({"bessel_series", bj, 1e-12});
  out.push_back({"bessel_recurrence", rec, 1e-12});

  const auto bottom = spectrum_bottom(1.0);
  out.push_back({"spectrum_bottom", std::abs(bottom.scan_min + 0.5), 1e-12});
  const Grid2D gs(4.0 * kPi, 32);
  out.push_back({"resonance", eigen_residual(resonance_wave(1.0, 0.0, Sign::minus, gs), -0.5, 1.0), 1e-12});
  const auto ja = jacobi_anger_check(1.0, 0.3, 10.0, 40);
  out.push_back({"jacobi_anger", std::max(ja.plane_error, ja.regrouped_error), 1e-12});

  const RadialGrid rg(8.0, 0.04);
  FlowOptions fo;
  fo.keep_trace = false;
  const auto sv = solve_semivortex(0, 0.5, par, rg, {fo, {}});
  out.push_back({"semivortex_residual", sv.residual, 1e-8});
  const auto mirrored = energy_m(mirror(sv.pair), par).total;
  out.push_back({"mirror_energy", std::abs(mirrored - sv.energy.total) / std::abs(sv.energy.total), 1e-12});
  out.push_back({"omega_positive", sv.omega > 0.0 ? 0.0 : 1.0, 0.5});

  const Grid2D gm(8.0, 64);
  const auto mr = verify_mixed(build_mixed(sv.pair, kPi / 3.0, gm, par), sv.pair, sv.omega, par, kPi / 3.0);
  out.push_back({"mixed_density", mr.density_error, 1e-12});
  out.push_back({"mixed_energy", std::max(mr.rel_total, mr.rel_mass), 1e-10});

  {
    const Grid2D ge(8.0, 64);
    const auto u0 = gaussian_state(ge, 1.0, 1.5);
    EvolutionConfig ec;
    ec.dt = 1e-3;
    ec.t_final = 0.2;
    ec.record_every = 50;
    const auto ev = evolve(u0, par, ec);
    const auto& a = ev.diagnostics.front();
    const auto& b = ev.diagnostics.back();
    out.push_back({"mass_conservation", std::abs(b.mass - a.mass) / a.mass, 1e-10});
    out.push_back({"energy_conservation", std::abs(b.energy - a.energy) / std::abs(a.energy), 1e-6});

    FieldPair2D shifted(ge);
    for (std::size_t iy = 0; iy < ge.n; ++iy)
      for (std::size_t ix = 0; ix < ge.n; ++ix) {
        const std::size_t src = ge.index((ix + ge.n - 5) % ge.n, (iy + 3) % ge.n);
        shifted.plus[ge.index(ix, iy)] = std::polar(1.0, 0.7) * ev.final_state.plus[src];
        shifted.minus[ge.index(ix, iy)] = std::polar(1.0, 0.7) * ev.final_state.minus[src];
      }
    out.push_back({"orbit_distance_symmetry", orbit_distance(shifted, ev.final_state).value, 1e-10});

    std::stringstream ss;
    write_binary(ss, ev.final_state);
    const auto back = read_binary(ss);
    FieldPair2D d = back;
    d.axpy(-1.0, ev.final_state);
    out.push_back({"sov2_roundtrip", l2_norm(d) / l2_norm(ev.final_state), 1e-6});
  }

  {
    Record r("probe");
    r.add("x", 0.1 + 0.2).add("k", 3);
    const auto [name, kv] = parse_record(r.line());
    const double back = Config::to_double("x", kv.at("x"));
    out.push_back({"record_roundtrip", (name == "probe" && back == 0.1 + 0.2) ? 0.0 : 1.0, 0.5});
  }
  return out;
}

int run_selftest(const Config& c, RunOutput& run, unsigned) {
  reject_unused(c);
  bool ok = true;
  for (const auto& ch : selftest_checks()) {
    const bool pass = ch.value <= ch.bound;
    ok = ok && pass;
    run.record(Record("check").add("name", ch.name).add("value", ch.value).add("bound", ch.bound).add("pass", pass));
    std::cout << (pass ? "PASS " : "FAIL ") << ch.name << " value=" << ch.value << " bound=" << ch.bound << '\n';
  }
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

using Runner = int (*)(const Config&, RunOutput&, unsigned);

struct Spec {
  const char* name;
  const char* help;
  Runner run;
  std::vector<std::array<const char*, 3>> flags;  // flag, key, help
};

const std::vector<std::array<const char*, 3>> kPhysics = {
    {"nu", "nu", "spin-orbit strength (default 1)"},
    {"lambda-plus", "lambda_plus", "self-interaction of psi+ (default 1)"},
    {"lambda-minus", "lambda_minus", "self-interaction of psi- (default 1)"},
    {"lambda-zero", "lambda_zero", "cross interaction (default 1)"},
};

std::vector<Spec> specs() {
  const std::vector<std::array<const char*, 3>> flow = {
      {"tol", "tol", "residual target (default 1e-8)"},
      {"max-iterations", "max_iterations", "flow iteration cap (default 50000)"},
      {"shift", "shift", "preconditioner shift (default 0.1)"},
  };
  const std::vector<std::array<const char*, 3>> plane = {
      {"L", "L", "half box length"},
      {"n", "n", "grid points per axis (power of two)"},
  };
  const std::vector<std::array<const char*, 3>> time = {
      {"dt", "dt", "time step (default 1e-3)"},
      {"t-final", "t_final", "final time"},
      {"record-every", "record_every", "steps between diagnostics (default 100)"},
      {"scheme", "scheme", "strang or lie (default strang)"},
      {"backward", "backward", "integrate to negative times (default false)"},
      {"blowup-hdot1", "blowup_hdot1", "abort above this H1-seminorm (default 1e6)"},
  };
  auto cat = [](std::vector<std::array<const char*, 3>> a, const std::vector<std::array<const char*, 3>>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return {
      {"semivortex", "radial semi-vortex ground state", run_semivortex,
       cat(cat({{"m", "m", "winding of psi+ (default 0)"},
                {"rho", "rho", "radial mass, or a comma list (default 0.05)"},
                {"r-max", "r_max", "radial box (default 16)"},
                {"dr", "h", "radial spacing (default 0.02)"}},
               flow),
           {})},
      {"groundstate", "2D ground state from one seed or the multi-seed protocol", run_groundstate,
       cat(cat({{"rho", "rho", "planar mass (default 0.05)"},
                {"seed", "seed", "semivortex|mixedmode|gaussian|random|protocol (default protocol)"},
                {"m", "m", "winding for semivortex/mixedmode seeds (default 0)"},
                {"eta", "eta", "mixing angle for the mixedmode seed (default pi/4)"},
                {"width", "width", "gaussian seed width (default 2)"},
                {"random-seed", "random_seed", "random seed (default 1)"},
                {"radial-h", "radial_h", "radial spacing for profile seeds (default 0.02)"}},
               plane),
           flow)},
      {"witness", "Bessel witness R-sweep", run_witness,
       {{"m", "m", "winding (default 0)"},
        {"rho", "rho", "radial mass (default 0.05)"},
        {"R", "R", "comma list of cutoff radii (default 50,100,200,400,800)"}}},
      {"spectrum", "dispersion surface and resonance checks", run_spectrum,
       cat({{"phi", "phi", "plane-wave direction for the expansion check (default 0.3)"},
            {"r-max", "r_max", "radius of the expansion check (default 10)"},
            {"terms", "terms", "expansion terms (default 40)"}},
           plane)},
      {"evolve", "split-step time integration", run_evolve,
       cat(cat({{"input", "input", "SOV2 initial state (default: gaussian)"},
                {"rho", "rho", "mass of the gaussian start (default 0.05)"},
                {"width", "width", "width of the gaussian start (default 2)"}},
               plane),
           time)},
      {"stability", "perturbed ground state evolution", run_stability,
       cat(cat(cat({{"input", "input", "SOV2 ground state (default: solve one)"},
                    {"rho", "rho", "planar mass (default 0.05)"},
                    {"m", "m", "semi-vortex seed winding (default 0)"},
                    {"delta", "delta", "H1 size of the perturbation (default 1e-3)"},
                    {"kinds", "kinds", "comma list of phase,amplitude,noise"}},
                   plane),
               time),
           flow)},
      {"mixedmode", "mixed mode build and identity checks", run_mixedmode,
       cat(cat({{"m", "m", "semi-vortex winding (default 0)"},
                {"rho", "rho", "radial mass (default 0.05)"},
                {"r-max", "r_max", "radial box (default 16)"},
                {"dr", "h", "radial spacing (default 0.02)"},
                {"eta", "eta", "comma list of mixing angles (default 8 points in [0, pi))"}},
               plane),
           flow)},
      {"cgn", "Gagliardo-Nirenberg constant estimate", run_cgn,
       cat({{"seed", "seed", "start seed"},
            {"max-iterations", "max_iterations", "ascent iteration cap (default 4000)"},
            {"gain-tol", "gain_tol", "stall threshold (default 1e-9)"}},
           plane)},
      {"selftest", "fast invariant suite", run_selftest, {}},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sov: spin-orbit coupled NLS toolkit"};
  app.set_version_flag("--version", std::string("sov ") + kVersion);
  app.require_subcommand(1);

  const auto all = specs();
  std::vector<std::unique_ptr<Command>> cmds;
  for (const auto& s : all) {
    auto cmd = std::make_unique<Command>();
    cmd->name = s.name;
    cmd->app = app.add_subcommand(s.name, s.help);
    cmd->app->add_option("--config", cmd->config_file, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->app->add_option("--set", cmd->sets, "extra key=value override (repeatable)");
    cmd->app->add_option("--out", cmd->out, "output directory (env SOV_OUTPUT_DIR)");
    cmd->app->add_option("--workers", cmd->workers, "parallel workers (env SOV_WORKERS)");
    if (std::string(s.name) != "selftest")
      for (const auto& f : kPhysics) cmd->flag(f[0], f[1], f[2]);
    for (const auto& f : s.flags) cmd->flag(f[0], f[1], f[2]);
    cmds.push_back(std::move(cmd));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  std::size_t idx = 0;
  while (!*cmds[idx]->app) ++idx;
  const Command& cmd = *cmds[idx];

  std::unique_ptr<RunOutput> run;
  int rc = kOk;
  const auto t0 = std::chrono::steady_clock::now();
  Config cfg;
  try {
    cfg = cmd.build();
    const unsigned workers = worker_count(cmd);
    run = std::make_unique<RunOutput>(out_dir(cmd), cmd.name);
    run->set("workers", workers);
    run->set("libraries", nlohmann::json{{"fftw", std::string(fftw_version)},
                           {"boost", std::string(BOOST_LIB_VERSION)},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                         "." + std::to_string(EIGEN_MINOR_VERSION)}});
    rc = all[idx].run(cfg, *run, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    rc = kConfigError;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    rc = kNumerical;
  } catch (const Error& e) {
    // range and structural errors come from invalid settings
    std::cerr << "invalid input: " << e.what() << '\n';
    rc = kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    rc = kNumerical;
  }
  if (run) {
    run->set_config(cfg);
    run->set("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    run->finish(rc);
    std::cerr << "results in " << run->dir().string() << '\n';
  }
  return rc;
}
