#pragma once

// Subcommand implementations behind the kac CLI. Each returns a process
// exit code: 0 success, 1 threshold failure, 2 configuration error.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kac/chaos.hpp"
#include "kac/config.hpp"
#include "kac/csv.hpp"
#include "kac/hierarchy.hpp"
#include "kac/laws.hpp"
#include "kac/meanfield.hpp"
#include "kac/picard.hpp"
#include "kac/simulator.hpp"

namespace kac {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kThresholdFailure = 1, kConfigError = 2 };

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  unsigned workers = 0;  // 0: KAC_WORKERS or hardware concurrency
};

/// Self-description of one subcommand run. Written before any result file
/// and rewritten with row counts at the end.
class Manifest {
 public:
  Manifest(const std::filesystem::path& dir, const std::string& subcommand, json config, std::uint64_t seed)
      : path_(dir / "manifest.json"), start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "kac";
    doc_["version"] = kVersion;
    doc_["subcommand"] = subcommand;
    doc_["seed"] = seed;
    doc_["config"] = std::move(config);
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    doc_["started_at"] = buf;
    doc_["status"] = "running";
    doc_["rows"] = json::object();
    flush();
  }

  void rows(const std::string& file, std::size_t n) {
    doc_["rows"][file] = n;
    flush();
  }

  void finish(const std::string& status) {
    doc_["status"] = status;
    doc_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    flush();
  }

  const json& doc() const { return doc_; }

 private:
  void flush() const {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path_.string());
    out << doc_.dump(2) << "\n";
  }

  std::filesystem::path path_;
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

namespace cmd_detail {

struct Context {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::filesystem::path dir;
  json resolved;
};

inline Context prepare(const RunConfig& cfg, const CommandOptions& opt) {
  Context c;
  c.seed = opt.seed.value_or(cfg.seed);
  c.workers = opt.workers ? opt.workers : default_workers();
  c.dir = opt.output_dir.value_or(cfg.output_dir);
  c.resolved = cfg.resolved;
  c.resolved["seed"] = c.seed;
  c.resolved["output_dir"] = c.dir.string();
  std::error_code ec;
  std::filesystem::create_directories(c.dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.dir.string() + "': " + ec.message());
  return c;
}

inline void need(bool present, const char* section, const char* command) {
  if (!present) throw ConfigError(std::string(command) + " needs a '" + section + "' section", std::string("/") + section);
}

inline void write(const csv::Table& t, Manifest& m, const Context& c, const std::string& name) {
  t.write((c.dir / name).string());
  m.rows(name, t.rows());
}

inline csv::Table result_table(const RunResult& r) {
  csv::Table t({"time", "observable", "mean", "stderr", "N", "replicas", "seed", "solver"});
  for (const auto& row : to_rows(r))
    t.add(row.time, row.observable, row.mean, row.std_error, row.N, row.replicas, row.seed, row.solver);
  return t;
}

inline csv::Table replica_table(const RunResult& r) {
  csv::Table t({"replica", "collisions", "initial_energy", "final_energy"});
  for (std::size_t i = 0; i < r.replicas; ++i)
    t.add(i, r.collision_counts[i], r.initial_energy[i], r.final_energy[i]);
  return t;
}

inline bool is_pure_kac_toy(const MixtureSpec& m) {
  return m.dimension == 1 && m.max_order() == 2 && m.betas[1] == 1.0 && m.laws[1].kind == LawKind::KacToy;
}

inline std::vector<LawSpec> builtin_laws(int d) {
  std::vector<LawSpec> laws{LawSpec::kac_toy(), LawSpec::kac_toy(AngleKernel::RaisedCosine),
                            LawSpec::binary_maxwell(d)};
  for (int k = 1; k <= 3; ++k) laws.push_back(LawSpec::symmetric(k, d));
  for (int k = 2; k <= 3; ++k) laws.push_back(LawSpec::symmetric_momentum(k, d));
  return laws;
}

}  // namespace cmd_detail

inline int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log = std::cout) {
  using namespace cmd_detail;
  need(cfg.has_mixture, "mixture", "simulate");
  need(cfg.sim.present, "sim", "simulate");
  auto ctx = prepare(cfg, opt);
  SimConfig sc;
  sc.N = cfg.sim.N;
  sc.mixture = cfg.mixture;
  sc.t_end = cfg.sim.t_end;
  sc.seed = ctx.seed;
  sc.replicas = cfg.sim.replicas;
  sc.initial = cfg.initial;
  sc.sample_times = cfg.sim.sample_times;
  sc.observables = cfg.observables;
  sc.slots = cfg.sim.slots;
  sc.keep_final_states = cfg.sim.keep_final_states;
  sc.workers = ctx.workers;
  validate(sc);
  Manifest manifest(ctx.dir, "simulate", ctx.resolved, ctx.seed);
  const auto res = run(sc);
  write(result_table(res), manifest, ctx, "simulate.csv");
  write(replica_table(res), manifest, ctx, "replicas.csv");
  if (sc.keep_final_states) {
    std::vector<std::string> cols{"replica", "particle"};
    for (int j = 0; j < res.dimension; ++j) cols.push_back("v" + std::to_string(j));
    csv::Table t(cols);
    std::string body;
    for (std::size_t r = 0; r < res.final_states.size(); ++r)
      for (std::size_t i = 0; i < res.final_states[r].particles; ++i) {
        std::string line = csv::cell(r) + "," + csv::cell(i);
        for (double x : res.final_states[r].velocity(i)) line += "," + csv::cell(x);
        body += line + "\n";
      }
    std::ofstream out(ctx.dir / "final_states.csv", std::ios::binary);
    out << t.header() << body;
    manifest.rows("final_states.csv", res.replicas * sc.N);
  }
  manifest.finish("ok");
  log << "simulate: N=" << sc.N << " replicas=" << sc.replicas << " -> " << (ctx.dir / "simulate.csv").string() << "\n";
  return kOk;
}

inline int cmd_boltzmann(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log = std::cout) {
  using namespace cmd_detail;
  need(cfg.has_mixture, "mixture", "boltzmann");
  need(cfg.meanfield.present, "meanfield", "boltzmann");
  auto ctx = prepare(cfg, opt);
  MeanFieldConfig mc;
  mc.n = cfg.meanfield.n;
  mc.mixture = cfg.mixture;
  mc.t_end = cfg.meanfield.t_end;
  mc.seed = ctx.seed;
  mc.replicas = cfg.meanfield.replicas;
  mc.initial = cfg.initial;
  mc.sample_times = cfg.meanfield.sample_times;
  mc.observables = cfg.observables;
  mc.slots = cfg.meanfield.slots;
  mc.workers = ctx.workers;
  validate(mc);

  const auto& pc = cfg.meanfield.picard;
  bool picard = pc.enabled.value_or(is_pure_kac_toy(cfg.mixture));
  const bool grid_initial =
      cfg.initial.kind == InitialLaw::Kind::Gaussian || cfg.initial.kind == InitialLaw::Kind::Uniform;
  if (picard && !is_pure_kac_toy(cfg.mixture)) {
    if (pc.enabled) throw ConfigError("picard solver needs the pure Kac toy mixture (d = 1, beta_2 = 1)", "/meanfield/picard/enabled");
    picard = false;
  }
  if (picard && !grid_initial) {
    if (pc.enabled) throw ConfigError("picard solver needs gaussian or uniform initial data", "/meanfield/picard/enabled");
    picard = false;
  }
  if (picard && cfg.initial.kind == InitialLaw::Kind::Uniform && cfg.initial.a >= pc.L)
    throw ConfigError("grid half-width L must exceed the uniform support", "/meanfield/picard/L");

  Manifest manifest(ctx.dir, "boltzmann", ctx.resolved, ctx.seed);
  const auto res = meanfield_run(mc);
  auto table = result_table(res);

  int code = kOk;
  if (picard) {
    PicardOptions po;
    po.kernel = cfg.mixture.laws[1].kernel;
    po.n_theta = pc.n_theta;
    po.n_t = pc.n_t;
    po.n_iter = pc.n_iter;
    po.t_guard = pc.t_guard > 0.0 ? pc.t_guard : 0.25 / cfg.mixture.alpha();
    po.workers = ctx.workers;
    GridDensity f = cfg.initial.kind == InitialLaw::Kind::Gaussian ? GridDensity::gaussian(pc.L, pc.n_v)
                                                                   : GridDensity::uniform(cfg.initial.a, pc.L, pc.n_v);
    csv::Table iters({"segment", "iterate", "increment", "mass"});
    double t_prev = 0.0;
    try {
      for (std::size_t ti = 0; ti < res.sample_times.size(); ++ti) {
        const double t = res.sample_times[ti];
        if (t > t_prev) {
          auto pr = picard_solve_chained(f, t - t_prev, po);
          for (std::size_t i = 0; i < pr.increments.size(); ++i) iters.add(ti, i + 1, pr.increments[i], pr.mass[i]);
          if (pr.min_value < -1e-8) {
            log << "boltzmann: grid density went negative (" << pr.min_value << ")\n";
            code = kThresholdFailure;
          }
          f = std::move(pr.f);
          t_prev = t;
        }
        table.add(t, std::string("mass"), f.mass(), 0.0, f.size(), std::size_t{1}, ctx.seed, std::string("picard"));
        for (int p = 1; p <= 4; ++p)
          table.add(t, "moment" + std::to_string(p), f.moment(p), 0.0, f.size(), std::size_t{1}, ctx.seed,
                    std::string("picard"));
      }
    } catch (const NumericalError& e) {
      write(table, manifest, ctx, "boltzmann.csv");
      write(iters, manifest, ctx, "picard_iterates.csv");
      manifest.finish("numerical_failure");
      log << "boltzmann: " << e.what() << "\n";
      return kThresholdFailure;
    }
    write(iters, manifest, ctx, "picard_iterates.csv");
    std::ofstream(ctx.dir / "picard_density.csv", std::ios::binary) << f.to_csv();
    manifest.rows("picard_density.csv", f.size());
  }
  write(table, manifest, ctx, "boltzmann.csv");
  manifest.finish(code == kOk ? "ok" : "threshold_failure");
  log << "boltzmann: n=" << mc.n << " replicas=" << mc.replicas << (picard ? " (+picard)" : "") << " -> "
      << (ctx.dir / "boltzmann.csv").string() << "\n";
  return code;
}

inline int cmd_hierarchy(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log = std::cout) {
  using namespace cmd_detail;
  need(cfg.has_mixture, "mixture", "hierarchy");
  auto ctx = prepare(cfg, opt);
  const auto& h = cfg.hierarchy;
  const auto& betas = cfg.mixture.betas;
  const auto c = compute_constants(betas, h.epsilon, h.T);
  Manifest manifest(ctx.dir, "hierarchy", ctx.resolved, ctx.seed);

  csv::Table constants({"k", "R_k", "rho_k", "C_k"});
  for (std::size_t k = 0; k < c.R.size(); ++k) constants.add(k, c.R[k], c.rho[k], c.C[k]);
  write(constants, manifest, ctx, "constants.csv");

  csv::Table horizon({"M", "m", "epsilon", "T_star", "T_max", "T", "theta1", "theta2", "note"});
  horizon.add(c.M(), c.m(), c.epsilon, c.horizon.T_star, c.horizon.T_max, c.T, c.theta.theta1, c.theta.theta2,
              std::string(c.m() == 0 ? "m = 0: T_max taken equal to T_star" : ""));
  write(horizon, manifest, ctx, "horizon.csv");

  csv::Table coeff({"N", "s", "k", "lambda", "abs_lambda_minus_1"});
  for (auto N : h.N_sweep)
    for (auto s : h.s_sweep)
      for (auto k : h.k_sweep)
        if (s <= N) coeff.add(N, s, k, coeff_leading(N, s, k), coeff_leading_deficit(N, s, k));
  write(coeff, manifest, ctx, "coefficients.csv");

  if (h.epsilon > 0.0) {
    csv::Table rem({"N", "s", "k", "bound"});
    const double need_N = static_cast<double>(betas.size()) / h.epsilon;
    for (auto N : h.N_sweep)
      for (auto s : h.s_sweep)
        for (auto k : h.k_sweep)
          if (static_cast<double>(N) >= need_N && s <= N && k < betas.size())
            rem.add(N, s, k, remainder_bound(N, s, k, betas, h.epsilon));
    write(rem, manifest, ctx, "remainder.csv");
  }
  if (c.m() >= 1) {
    csv::Table fac({"s", "n", "remainder_factor"});
    for (auto s : h.s_sweep)
      for (std::uint64_t n = 1; n <= 200; ++n)
        fac.add(s, n, remainder_factor(s, n, c.m(), c.T, c.horizon.T_star));
    write(fac, manifest, ctx, "remainder_factor.csv");
  }
  manifest.finish("ok");
  log << "hierarchy: T_star=" << c.horizon.T_star << " T_max=" << c.horizon.T_max << " -> " << ctx.dir.string() << "\n";
  return kOk;
}

inline json chaos_summary(const ChaosReport& rep, double threshold) {
  json s;
  s["pass_fraction"] = rep.pass_fraction();
  s["pass_threshold"] = threshold;
  s["rows"] = rep.rows.size();
  s["mf_n"] = rep.mf_n;
  s["mf_replicas"] = rep.mf_replicas;
  if (const auto* w = rep.worst_row()) {
    s["worst_row"] = {{"N", w->N}, {"s", w->s}, {"t", w->t}, {"observable", w->observable},
                      {"kac_mean", w->kac_mean}, {"kac_stderr", w->kac_stderr}, {"mf_mean", w->mf_mean},
                      {"mf_stderr", w->mf_stderr}, {"abs_delta", w->abs_delta}, {"pass_3sigma", w->pass_3sigma}};
  } else {
    s["worst_row"] = nullptr;
  }
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  s["slope_fits"] = json::array();
  for (const auto& f : rep.slopes)
    s["slope_fits"].push_back({{"s", f.s}, {"t", f.t}, {"observable", f.observable}, {"slope", num(f.slope)},
                               {"ci_low", num(f.ci_low)}, {"ci_high", num(f.ci_high)}, {"points", f.points}});
  s["monotone"] = json::array();
  for (const auto& m : rep.monotone)
    s["monotone"].push_back({{"s", m.s}, {"t", m.t}, {"observable", m.observable},
                             {"non_increasing", m.non_increasing}, {"worst_excess", num(m.worst_excess)}});
  s["warnings"] = rep.warnings;
  return s;
}

inline csv::Table chaos_table(const ChaosReport& rep) {
  csv::Table t({"N", "s", "t", "observable", "kac_mean", "kac_stderr", "mf_mean", "mf_stderr", "abs_delta",
                "pass_3sigma", "replicas"});
  for (const auto& r : rep.rows)
    t.add(r.N, r.s, r.t, r.observable, r.kac_mean, r.kac_stderr, r.mf_mean, r.mf_stderr, r.abs_delta, r.pass_3sigma,
          r.replicas);
  return t;
}

inline int cmd_chaos(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log = std::cout) {
  using namespace cmd_detail;
  need(cfg.has_mixture, "mixture", "chaos");
  need(cfg.chaos.present, "chaos", "chaos");
  auto ctx = prepare(cfg, opt);
  ChaosConfig cc;
  cc.mixture = cfg.mixture;
  cc.initial = cfg.initial;
  cc.N_grid = cfg.chaos.N_grid;
  cc.s_list = cfg.chaos.s_list;
  cc.t_list = cfg.chaos.t_list;
  cc.observables = cfg.observables;
  if (cc.observables.empty()) {
    cc.observables.push_back({"tanh", {Primitive::tanh(1.0)}});
    cc.observables.push_back({"cos", {Primitive::cosine(1.0)}});
  }
  cc.budget = cfg.chaos.budget;
  cc.slots = cfg.chaos.slots;
  cc.seed = ctx.seed;
  cc.workers = ctx.workers;
  validate(cc);
  Manifest manifest(ctx.dir, "chaos", ctx.resolved, ctx.seed);
  const auto rep = run_chaos_sweep(cc);
  write(chaos_table(rep), manifest, ctx, "chaos.csv");
  const auto summary = chaos_summary(rep, cfg.chaos.pass_threshold);
  std::ofstream(ctx.dir / "chaos_summary.json", std::ios::binary) << summary.dump(2) << "\n";
  manifest.rows("chaos_summary.json", 1);
  const bool ok = rep.pass_fraction() >= cfg.chaos.pass_threshold;
  manifest.finish(ok ? "ok" : "threshold_failure");
  for (const auto& w : rep.warnings) log << "chaos: warning: " << w << "\n";
  log << "chaos: pass_fraction=" << rep.pass_fraction() << " (threshold " << cfg.chaos.pass_threshold << ")\n";
  return ok ? kOk : kThresholdFailure;
}

inline int cmd_laws_check(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log = std::cout) {
  using namespace cmd_detail;
  auto ctx = prepare(cfg, opt);
  const int d = cfg.has_mixture ? cfg.mixture.dimension : 1;
  const auto laws = cfg.laws_check.laws.empty() ? builtin_laws(d) : cfg.laws_check.laws;
  const std::size_t samples = cfg.laws_check.samples;
  Manifest manifest(ctx.dir, "laws-check", ctx.resolved, ctx.seed);

  csv::Table t({"law", "check", "mean_forward", "mean_other", "difference", "combined_stderr", "samples", "exact",
                "pass"});
  bool all = true;
  const auto tag = static_cast<std::uint64_t>(Purpose::LawCheck);
  for (std::size_t li = 0; li < laws.size(); ++li) {
    const auto& law = laws[li];
    validate(law);
    Stream iso_rng(ctx.seed, stream_id({tag, li, 1}));
    const auto iso = check_h1_isometry(law, cfg.laws_check.h1_samples, iso_rng);
    t.add(law.name(), std::string("isometry"), 0.0, 0.0, iso.max_relative_error, 0.0, iso.samples, iso.pass(),
          iso.pass());
    all = all && iso.pass();

    Stream v_rng(ctx.seed, stream_id({tag, li, 2}));
    std::vector<double> v(law.block_size());
    for (double& x : v) x = v_rng.normal();
    auto probe = [](std::span<const double> x) { return std::tanh(x.front() + 0.5 * x.back()); };
    Stream inv_rng(ctx.seed, stream_id({tag, li, 3}));
    const auto inv = check_h2_involution(law, probe, v, samples, inv_rng);
    t.add(law.name(), std::string("involution"), inv.mean_forward, inv.mean_other, inv.difference,
          inv.combined_stderr, inv.samples, inv.exact, inv.pass());
    all = all && inv.pass();

    std::vector<int> sigma(static_cast<std::size_t>(law.order));
    for (int i = 0; i < law.order; ++i) sigma[static_cast<std::size_t>(i)] = law.order - 1 - i;
    Stream sym_rng(ctx.seed, stream_id({tag, li, 4}));
    const auto sym = check_h3_symmetry(law, probe, v, sigma, samples, sym_rng);
    t.add(law.name(), std::string("symmetry"), sym.mean_forward, sym.mean_other, sym.difference,
          sym.combined_stderr, sym.samples, sym.exact, sym.pass());
    all = all && sym.pass();
  }
  write(t, manifest, ctx, "laws_check.csv");
  manifest.finish(all ? "ok" : "threshold_failure");
  log << t.str();
  return all ? kOk : kThresholdFailure;
}

/// Loads the configuration, runs one subcommand and maps errors to exit
/// codes. Messages go to `err`.
inline int dispatch(const std::string& command, const std::string& config_path,
                    const std::vector<std::string>& overrides, const CommandOptions& opt,
                    std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    const RunConfig cfg = config_path.empty() ? parse_config("", overrides) : load_config(config_path, overrides);
    if (command == "simulate") return cmd_simulate(cfg, opt, log);
    if (command == "boltzmann") return cmd_boltzmann(cfg, opt, log);
    if (command == "hierarchy") return cmd_hierarchy(cfg, opt, log);
    if (command == "chaos") return cmd_chaos(cfg, opt, log);
    if (command == "laws-check") return cmd_laws_check(cfg, opt, log);
    err << "kac: unknown subcommand '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "kac " << command << ": configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ContractViolation& e) {
    err << "kac " << command << ": configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "kac " << command << ": numerical failure: " << e.what() << "\n";
    return kThresholdFailure;
  }
}

}  // namespace kac
