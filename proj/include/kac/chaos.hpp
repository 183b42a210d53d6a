#pragma once

// Numerical propagation-of-chaos sweep: Kac ensembles at several N against
// a mean-field reference for <f(t)^{(x)s}, phi_s>.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "kac/errors.hpp"
#include "kac/meanfield.hpp"
#include "kac/observables.hpp"
#include "kac/simulator.hpp"
#include "kac/stats.hpp"

namespace kac {

struct ChaosBudget {
  double target_stderr = 2e-3;
  std::size_t pilot_replicas = 64;
  std::size_t min_replicas = 8;
  std::size_t max_replicas = 200000;
  std::size_t mf_n = 0;  // 0: 10 * max N
  std::size_t mf_replicas = 8;
};

struct ChaosConfig {
  MixtureSpec mixture;
  InitialLaw initial;
  std::vector<std::size_t> N_grid;
  std::vector<std::size_t> s_list{1, 2};
  std::vector<double> t_list{0.0, 1.0};
  // Order-1 observables are raised to every s in s_list; higher-order ones
  // are used as given.
  std::vector<ObservableSpec> observables;
  ChaosBudget budget;
  SlotMode slots = SlotMode::Blocks;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct ChaosRow {
  std::size_t N = 0;
  std::size_t s = 0;
  double t = 0.0;
  std::string observable;
  double kac_mean = 0.0, kac_stderr = 0.0;
  double mf_mean = 0.0, mf_stderr = 0.0;
  double abs_delta = 0.0;
  bool pass_3sigma = false;
  std::size_t replicas = 0;

  double combined_stderr() const { return std::hypot(kac_stderr, mf_stderr); }

  // Summation order differs between the two estimators, so a deterministic
  // observable (zero stderr) can still show |delta| at the rounding level.
  double rounding_slack() const { return 1e-12 * std::max({1.0, std::abs(kac_mean), std::abs(mf_mean)}); }
  bool within(double k_sigma) const { return abs_delta <= k_sigma * combined_stderr() + rounding_slack(); }
};

struct SlopeFit {
  std::size_t s = 0;
  double t = 0.0;
  std::string observable;
  double slope = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // slope +- 2 standard errors
  std::size_t points = 0;              // N values with |delta| > 0
};

/// |delta(N_{i+1})| - |delta(N_i)| <= 2 sqrt(sigma_i^2 + sigma_{i+1}^2)
/// along the N grid, for one (s, t, observable).
struct MonotoneCheck {
  std::size_t s = 0;
  double t = 0.0;
  std::string observable;
  bool non_increasing = true;
  double worst_excess = 0.0;  // max over steps of increase minus band (<= 0 when passing)
};

struct ChaosReport {
  std::vector<ChaosRow> rows;
  std::vector<SlopeFit> slopes;
  std::vector<MonotoneCheck> monotone;
  std::vector<std::string> warnings;
  std::size_t mf_n = 0;
  std::size_t mf_replicas = 0;

  double pass_fraction() const {
    if (rows.empty()) return 1.0;
    std::size_t ok = 0;
    for (const auto& r : rows) ok += r.pass_3sigma;
    return static_cast<double>(ok) / static_cast<double>(rows.size());
  }

  /// Row with the largest |delta| / combined stderr (zero-stderr rows with
  /// nonzero delta rank first).
  const ChaosRow* worst_row() const {
    const ChaosRow* worst = nullptr;
    double score = -1.0;
    for (const auto& r : rows) {
      const double se = r.combined_stderr();
      const double excess = std::max(0.0, r.abs_delta - r.rounding_slack());
      const double z = se > 0.0 ? excess / se : (excess > 0.0 ? INFINITY : 0.0);
      if (z > score) {
        score = z;
        worst = &r;
      }
    }
    return worst;
  }
};

struct CovarianceEstimate {
  double cov = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
};

/// Replica-level covariance of g(v_1) and g(v_2) under f_N^(2).
inline CovarianceEstimate correlation_decay(std::span<const MasterState> ensemble, const Primitive& g) {
  if (ensemble.size() < 2) throw ContractViolation("correlation_decay needs at least two replicas");
  PairAccumulator acc;
  for (const auto& st : ensemble) {
    require(st.particles >= 2, "correlation_decay needs N >= 2");
    acc.add(g(st.velocity(0)), g(st.velocity(1)));
  }
  const double mx = acc.mean_x(), my = acc.mean_y();
  ScalarAccumulator z;
  for (const auto& st : ensemble) z.add((g(st.velocity(0)) - mx) * (g(st.velocity(1)) - my));
  return {acc.cov_xy(), z.stderr_of_mean(), ensemble.size()};
}

namespace detail {

inline std::vector<ObservableSpec> chaos_observables(const ChaosConfig& c) {
  std::vector<ObservableSpec> out;
  for (const auto& o : c.observables) {
    if (o.order() == 1) {
      for (std::size_t s : c.s_list)
        out.push_back(ObservableSpec::tensor_power(o.id + "_s" + std::to_string(s), o.factors[0], s));
    } else {
      out.push_back(o);
    }
  }
  return out;
}

inline double worst_stderr(const RunResult& r) {
  double w = 0.0;
  for (const auto& row : r.estimates)
    for (const auto& e : row) w = std::max(w, e.std_error);
  return w;
}

inline std::size_t scaled_replicas(std::size_t pilot, double pilot_se, double target, const ChaosBudget& b) {
  if (!(pilot_se > 0.0)) return std::max<std::size_t>(b.min_replicas, 2);
  const double want = std::ceil(static_cast<double>(pilot) * (pilot_se / target) * (pilot_se / target) * 1.2);
  const double capped = std::min(want, static_cast<double>(b.max_replicas));
  return std::max<std::size_t>(std::max<std::size_t>(b.min_replicas, 2), static_cast<std::size_t>(capped));
}

}  // namespace detail

inline void validate(const ChaosConfig& c) {
  validate(c.mixture);
  if (c.N_grid.empty()) throw ConfigError("chaos sweep needs a nonempty N_grid");
  if (c.s_list.empty()) throw ConfigError("chaos sweep needs a nonempty s_list");
  if (c.t_list.empty()) throw ConfigError("chaos sweep needs a nonempty t_list");
  if (c.observables.empty()) throw ConfigError("chaos sweep needs at least one observable");
  if (!c.initial.iid()) throw ConfigError("chaos sweep needs iid (chaotic) initial data");
  const std::size_t min_N = *std::min_element(c.N_grid.begin(), c.N_grid.end());
  const std::size_t max_s = *std::max_element(c.s_list.begin(), c.s_list.end());
  if (max_s > min_N) throw ConfigError("chaos sweep needs max(s_list) <= min(N_grid)");
  if (min_N < static_cast<std::size_t>(c.mixture.max_order())) throw ConfigError("N >= M required");
  for (double t : c.t_list)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("chaos t_list entries must be finite and >= 0");
  if (!(c.budget.target_stderr > 0.0)) throw ConfigError("target_stderr must be positive");
  if (c.budget.pilot_replicas < 2) throw ConfigError("pilot_replicas must be >= 2");
}

/// Runs the sweep. Kac replica counts per N come from a pilot run scaled to
/// hit budget.target_stderr; the reference is one mean-field run whose
/// per-replica value is the product of per-factor ensemble means.
inline ChaosReport run_chaos_sweep(const ChaosConfig& config) {
  validate(config);
  const auto observables = detail::chaos_observables(config);
  for (const auto& o : observables) {
    validate(o, config.mixture.dimension);
    if (o.order() > *std::min_element(config.N_grid.begin(), config.N_grid.end()))
      throw ConfigError("observable '" + o.id + "' has order above min(N_grid)");
  }
  const double t_max = *std::max_element(config.t_list.begin(), config.t_list.end());
  const std::size_t max_N = *std::max_element(config.N_grid.begin(), config.N_grid.end());
  ChaosReport report;

  // Mean-field reference.
  std::vector<Primitive> prims;
  std::vector<std::vector<std::size_t>> factor_ids(observables.size());
  for (std::size_t o = 0; o < observables.size(); ++o)
    for (const auto& f : observables[o].factors) {
      auto it = std::find(prims.begin(), prims.end(), f);
      if (it == prims.end()) it = prims.insert(prims.end(), f);
      factor_ids[o].push_back(static_cast<std::size_t>(it - prims.begin()));
    }
  MeanFieldConfig mf;
  mf.n = config.budget.mf_n ? config.budget.mf_n : 10 * max_N;
  mf.mixture = config.mixture;
  mf.t_end = t_max;
  mf.seed = config.seed;
  mf.replicas = std::max<std::size_t>(2, config.budget.mf_replicas);
  mf.initial = config.initial;
  mf.sample_times = config.t_list;
  mf.workers = config.workers;
  const auto times = detail::resolve_sample_times(config.t_list, t_max);
  // [replica][time][primitive] one-particle means
  std::vector<std::vector<std::vector<double>>> means(
      mf.replicas, std::vector<std::vector<double>>(times.size(), std::vector<double>(prims.size())));
  ObserverHook hook = [&](std::size_t r, std::size_t ti, const MasterState& st) {
    for (std::size_t p = 0; p < prims.size(); ++p) {
      CompensatedSum acc;
      for (std::size_t i = 0; i < st.particles; ++i) acc.add(prims[p](st.velocity(i)));
      means[r][ti][p] = acc.value() / static_cast<double>(st.particles);
    }
  };
  meanfield_run(mf, {hook});
  report.mf_n = mf.n;
  report.mf_replicas = mf.replicas;
  // [time][observable]
  std::vector<std::vector<Estimate>> reference(times.size(), std::vector<Estimate>(observables.size()));
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    for (std::size_t o = 0; o < observables.size(); ++o) {
      ScalarAccumulator acc;
      for (std::size_t r = 0; r < mf.replicas; ++r) {
        double prod = 1.0;
        for (std::size_t p : factor_ids[o]) prod *= means[r][ti][p];
        acc.add(prod);
      }
      reference[ti][o] = acc.estimate();
      if (reference[ti][o].std_error > config.budget.target_stderr) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "mean-field reference stderr %.3g above target for '%s' at t = %g",
                      reference[ti][o].std_error, observables[o].id.c_str(), times[ti]);
        report.warnings.push_back(buf);
      }
    }

  // Kac ensembles.
  for (std::size_t N : config.N_grid) {
    SimConfig sim;
    sim.N = N;
    sim.mixture = config.mixture;
    sim.t_end = t_max;
    sim.seed = config.seed;
    sim.initial = config.initial;
    sim.sample_times = config.t_list;
    sim.observables = observables;
    sim.slots = config.slots;
    sim.workers = config.workers;

    sim.replicas = config.budget.pilot_replicas;
    sim.stream_tag = static_cast<std::uint64_t>(Purpose::Pilot);
    const double pilot_se = detail::worst_stderr(run(sim));
    const std::size_t reps = detail::scaled_replicas(sim.replicas, pilot_se, config.budget.target_stderr, config.budget);

    sim.replicas = reps;
    sim.stream_tag = 0;
    const RunResult res = run(sim);
    const double got = detail::worst_stderr(res);
    if (got > config.budget.target_stderr) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "N = %zu: stderr %.3g above target %.3g with %zu replicas", N, got,
                    config.budget.target_stderr, reps);
      report.warnings.push_back(buf);
    }
    for (std::size_t ti = 0; ti < times.size(); ++ti)
      for (std::size_t o = 0; o < observables.size(); ++o) {
        ChaosRow row;
        row.N = N;
        row.s = observables[o].order();
        row.t = times[ti];
        row.observable = observables[o].id;
        row.kac_mean = res.estimates[ti][o].mean;
        row.kac_stderr = res.estimates[ti][o].std_error;
        row.mf_mean = reference[ti][o].mean;
        row.mf_stderr = reference[ti][o].std_error;
        row.abs_delta = std::abs(row.kac_mean - row.mf_mean);
        row.pass_3sigma = row.within(3.0);
        row.replicas = reps;
        report.rows.push_back(std::move(row));
      }
  }

  // Per-(s, t, observable) diagnostics along the N grid.
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    for (const auto& obs : observables) {
      std::vector<const ChaosRow*> line;
      for (const auto& r : report.rows)
        if (r.t == times[ti] && r.observable == obs.id) line.push_back(&r);
      std::sort(line.begin(), line.end(), [](auto* a, auto* b) { return a->N < b->N; });
      MonotoneCheck mono{obs.order(), times[ti], obs.id, true, -INFINITY};
      for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const double band = 2.0 * std::hypot(line[i]->combined_stderr(), line[i + 1]->combined_stderr());
        const double excess = line[i + 1]->abs_delta - line[i]->abs_delta - band - line[i + 1]->rounding_slack();
        mono.worst_excess = std::max(mono.worst_excess, excess);
        if (excess > 0.0) mono.non_increasing = false;
      }
      if (line.size() < 2) mono.worst_excess = 0.0;
      report.monotone.push_back(mono);

      std::vector<double> lx, ly;
      for (auto* r : line)
        if (r->abs_delta > 0.0) {
          lx.push_back(std::log(static_cast<double>(r->N)));
          ly.push_back(std::log(r->abs_delta));
        }
      SlopeFit fit{obs.order(), times[ti], obs.id, NAN, NAN, NAN, lx.size()};
      if (lx.size() >= 2) {
        const auto lf = fit_line(lx, ly);
        fit.slope = lf.slope;
        fit.ci_low = lf.slope - 2.0 * lf.slope_stderr;
        fit.ci_high = lf.slope + 2.0 * lf.slope_stderr;
      }
      report.slopes.push_back(fit);
    }
  return report;
}

}  // namespace kac
