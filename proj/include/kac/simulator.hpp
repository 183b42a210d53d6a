#pragma once

// Exact event-driven simulation of the N-particle Kac jump process
//   V_N(t) = Y_N(M(t)),  M a Poisson process of rate N,
// where each jump of Y_N picks an order K ~ beta, an ordered K-tuple of
// distinct particles uniformly, omega ~ b_K, and applies T^omega_{i_1..i_K}.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kac/errors.hpp"
#include "kac/laws.hpp"
#include "kac/observables.hpp"
#include "kac/parallel.hpp"
#include "kac/random.hpp"
#include "kac/state.hpp"
#include "kac/stats.hpp"

namespace kac {

/// Stream purposes; part of every stream id so unrelated jobs never share
/// random numbers.
enum class Purpose : std::uint64_t {
  KacReplica = 1,
  MeanFieldReplica = 2,
  SlotDraw = 3,
  TraceIdentity = 4,
  LawCheck = 5,
  Pilot = 6,
};

struct InitialLaw {
  enum class Kind { Gaussian, Uniform, TwoPoint, Deterministic };

  Kind kind = Kind::Gaussian;
  double a = 1.0;  // Uniform: half-width of [-a, a]^d; TwoPoint: coordinates are +-a
  std::vector<double> velocities;  // Deterministic: N x d values, or one velocity for everyone

  static InitialLaw gaussian() { return {}; }
  static InitialLaw uniform(double a) { return {Kind::Uniform, a, {}}; }
  static InitialLaw two_point(double a) { return {Kind::TwoPoint, a, {}}; }
  static InitialLaw deterministic(std::vector<double> v) {
    return {Kind::Deterministic, 1.0, std::move(v)};
  }

  bool iid() const { return kind != Kind::Deterministic; }

  /// Per-coordinate moment E[x^p] of the one-particle law (iid kinds).
  double coordinate_moment(int p) const {
    switch (kind) {
      case Kind::Gaussian: {
        if (p % 2) return 0.0;
        double m = 1.0;
        for (int k = p - 1; k > 0; k -= 2) m *= k;
        return m;
      }
      case Kind::Uniform: return p % 2 ? 0.0 : std::pow(a, p) / (p + 1);
      case Kind::TwoPoint: return p % 2 ? 0.0 : std::pow(a, p);
      case Kind::Deterministic: break;
    }
    throw ContractViolation("coordinate_moment: deterministic initial data has no one-particle law");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Gaussian: return "gaussian";
      case Kind::Uniform: return "uniform";
      case Kind::TwoPoint: return "two_point";
      case Kind::Deterministic: return "deterministic";
    }
    return "?";
  }
};

/// Draws one coordinate from an iid initial law.
inline double sample_coordinate(const InitialLaw& law, Stream& rng) {
  switch (law.kind) {
    case InitialLaw::Kind::Gaussian: return rng.normal();
    case InitialLaw::Kind::Uniform: return law.a * (2.0 * rng.uniform() - 1.0);
    case InitialLaw::Kind::TwoPoint: return rng.uniform() < 0.5 ? -law.a : law.a;
    case InitialLaw::Kind::Deterministic: break;
  }
  throw ContractViolation("sample_coordinate: deterministic initial law");
}

inline MasterState sample_initial(const InitialLaw& law, std::size_t n, int d, Stream& rng) {
  MasterState s(n, d);
  if (law.kind == InitialLaw::Kind::Deterministic) {
    const auto dd = static_cast<std::size_t>(d);
    if (law.velocities.size() == dd) {
      for (std::size_t i = 0; i < n; ++i)
        std::copy(law.velocities.begin(), law.velocities.end(), s.velocities.begin() + static_cast<std::ptrdiff_t>(i * dd));
    } else {
      require(law.velocities.size() == n * dd,
              "deterministic initial data must list N velocities of dimension d (or a single one)");
      s.velocities = law.velocities;
    }
    require(s.finite(), "initial velocities must be finite");
    return s;
  }
  for (double& x : s.velocities) x = sample_coordinate(law, rng);
  return s;
}

/// Reusable scratch for collisions on a fixed mixture.
class KacStepper {
 public:
  explicit KacStepper(const MixtureSpec& mixture)
      : mixture_(&mixture), order_(mixture.betas), indices_(static_cast<std::size_t>(mixture.max_order())) {
    validate(mixture);
    std::size_t widest = 0;
    for (const auto& l : mixture.laws) widest = std::max(widest, l.block_size());
    block_.resize(widest);
  }

  /// One jump of the embedded chain Y_N (no clock advance).
  void collide(MasterState& state, Stream& rng) {
    const int k = order_(rng);
    const LawSpec& law = mixture_->laws[static_cast<std::size_t>(k - 1)];
    const std::size_t n = state.particles;
    // Sequential draws without replacement give a uniform ordered tuple in I(K).
    for (int a = 0; a < k; ++a) {
      std::size_t i;
      bool clash;
      do {
        i = static_cast<std::size_t>(rng.below(n));
        clash = false;
        for (int b = 0; b < a; ++b) clash = clash || indices_[static_cast<std::size_t>(b)] == i;
      } while (clash);
      indices_[static_cast<std::size_t>(a)] = i;
    }
    sample_angle_into(law, rng, angle_);
    apply_on_master(law, angle_, std::span<const std::size_t>(indices_.data(), static_cast<std::size_t>(k)),
                    state, block_);
    ++state.collision_count;
  }

  /// Full step of V_N: Exp(N) waiting time, then a collision.
  void step(MasterState& state, Stream& rng) {
    state.time += rng.exponential(static_cast<double>(state.particles));
    collide(state, rng);
  }

 private:
  const MixtureSpec* mixture_;
  OrderSampler order_;
  std::vector<std::size_t> indices_;
  std::vector<double> block_;
  ScatteringAngle angle_;
};

inline MasterState step(MasterState state, const MixtureSpec& mixture, Stream& rng) {
  require(state.particles >= static_cast<std::size_t>(mixture.max_order()), "N >= M required");
  require(state.dimension == mixture.dimension, "state and mixture dimensions differ");
  KacStepper stepper(mixture);
  stepper.step(state, rng);
  return state;
}

// ---------------------------------------------------------------------------
// Marginal estimation.

enum class SlotMode {
  First,   // phi(v_1, ..., v_s)
  Random,  // phi at a fresh uniform distinct s-tuple per replica
  Blocks,  // average of phi over the floor(N/s) disjoint consecutive s-blocks
};

/// One replica's estimate of <f_N^(s), phi_s>.
inline double replica_value(const MasterState& state, const ObservableSpec& phi, SlotMode mode,
                            Stream& slot_rng) {
  const std::size_t s = phi.order();
  require(s <= state.particles, "observable order s exceeds N");
  const std::span<const double> all(state.velocities);
  const int d = state.dimension;
  const auto dd = static_cast<std::size_t>(d);
  switch (mode) {
    case SlotMode::First: return phi(all.first(s * dd), d);
    case SlotMode::Random: {
      std::vector<std::size_t> slots(s);
      for (std::size_t a = 0; a < s; ++a) {
        bool clash;
        do {
          slots[a] = static_cast<std::size_t>(slot_rng.below(state.particles));
          clash = std::find(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(a), slots[a]) !=
                  slots.begin() + static_cast<std::ptrdiff_t>(a);
        } while (clash);
      }
      return phi.at(all, d, slots);
    }
    case SlotMode::Blocks: {
      const std::size_t blocks = state.particles / s;
      double sum = 0.0;
      for (std::size_t b = 0; b < blocks; ++b) sum += phi(all.subspan(b * s * dd, s * dd), d);
      return sum / static_cast<double>(blocks);
    }
  }
  return 0.0;
}

/// Replica-level estimate of <f_N^(s), phi_s> from an ensemble of states.
inline Estimate estimate_observable(std::span<const MasterState> samples, const ObservableSpec& phi,
                                    SlotMode mode, Stream& rng) {
  ScalarAccumulator acc;
  for (const auto& st : samples) {
    if (phi.order() > st.particles)
      throw ContractViolation("estimate_observable: s = " + std::to_string(phi.order()) +
                              " exceeds N = " + std::to_string(st.particles));
    acc.add(replica_value(st, phi, mode, rng));
  }
  return acc.estimate();
}

// ---------------------------------------------------------------------------
// Ensemble runs.

using ObserverHook = std::function<void(std::size_t replica, std::size_t sample_index, const MasterState&)>;

struct SimConfig {
  std::size_t N = 2;
  MixtureSpec mixture;
  double t_end = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  InitialLaw initial;
  std::vector<double> sample_times;  // empty: {0, t_end}
  std::vector<ObservableSpec> observables;
  SlotMode slots = SlotMode::First;
  bool keep_final_states = false;
  unsigned workers = 1;
  std::uint64_t stream_tag = 0;  // extra discriminator for harness jobs
};

/// Result of an ensemble run (Kac or mean-field). Estimates are
/// replica-level: one number per replica, then mean and standard error.
struct RunResult {
  std::string solver = "kac";
  std::size_t N = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  int dimension = 1;
  std::vector<double> sample_times;
  std::vector<std::string> observable_ids;
  std::vector<std::vector<Estimate>> estimates;  // [time][observable]
  std::vector<std::array<Estimate, 4>> moments;  // [time]: coordinate-averaged E[v^p], p = 1..4
  std::vector<MomentAccumulator> pooled;         // [time]: all particles of all replicas
  std::vector<std::uint64_t> collision_counts;   // per replica, at t_end
  std::vector<double> initial_energy;            // per replica
  std::vector<double> final_energy;              // per replica
  std::vector<MasterState> final_states;         // only when requested
};

struct ResultRow {
  double time;
  std::string observable;
  double mean;
  double std_error;
  std::size_t N;
  std::size_t replicas;
  std::uint64_t seed;
  std::string solver;
};

inline std::vector<ResultRow> to_rows(const RunResult& r) {
  std::vector<ResultRow> rows;
  for (std::size_t ti = 0; ti < r.sample_times.size(); ++ti) {
    for (std::size_t o = 0; o < r.observable_ids.size(); ++o) {
      const auto& e = r.estimates[ti][o];
      rows.push_back({r.sample_times[ti], r.observable_ids[o], e.mean, e.std_error, r.N, r.replicas, r.seed, r.solver});
    }
    for (int p = 0; p < 4; ++p) {
      const auto& e = r.moments[ti][static_cast<std::size_t>(p)];
      rows.push_back({r.sample_times[ti], "moment" + std::to_string(p + 1), e.mean, e.std_error, r.N,
                      r.replicas, r.seed, r.solver});
    }
  }
  return rows;
}

namespace detail {

inline std::vector<double> resolve_sample_times(std::vector<double> times, double t_end) {
  if (!std::isfinite(t_end) || t_end < 0.0) throw ConfigError("t_end must be a finite nonnegative number");
  if (times.empty()) {
    times.push_back(0.0);
    if (t_end > 0.0) times.push_back(t_end);
  }
  for (double t : times)
    if (!(t >= 0.0 && t <= t_end))
      throw ConfigError("sample time " + std::to_string(t) + " lies outside [0, t_end]");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

/// Everything one replica contributes; merged in replica order.
struct ReplicaRecord {
  std::vector<std::vector<double>> values;        // [time][observable]
  std::vector<std::array<double, 4>> moments;     // [time]
  std::vector<MomentAccumulator> pooled;          // [time]
  std::uint64_t collisions = 0;
  double energy0 = 0.0;
  double energy1 = 0.0;
  MasterState final_state;
};

inline void record_state(const MasterState& st, const std::vector<ObservableSpec>& observables, SlotMode mode,
                         Stream& slot_rng, ReplicaRecord& rec, std::size_t ti) {
  auto& vals = rec.values[ti];
  vals.resize(observables.size());
  for (std::size_t o = 0; o < observables.size(); ++o)
    vals[o] = replica_value(st, observables[o], mode, slot_rng);
  MomentAccumulator acc(st.dimension);
  for (std::size_t i = 0; i < st.particles; ++i) acc.add(st.velocity(i));
  for (int p = 0; p < 4; ++p) rec.moments[ti][static_cast<std::size_t>(p)] = acc.coordinate_averaged(p + 1);
  rec.pooled[ti] = std::move(acc);
}

/// Shared replica-chunking driver for Kac and mean-field runs.
template <class SimulateReplica>
RunResult run_replicas(std::size_t replicas, unsigned workers, const std::vector<double>& times,
                       const std::vector<ObservableSpec>& observables, int d, bool keep_final,
                       SimulateReplica&& simulate) {
  RunResult res;
  res.replicas = replicas;
  res.dimension = d;
  res.sample_times = times;
  for (const auto& o : observables) res.observable_ids.push_back(o.id);
  std::vector<std::vector<ScalarAccumulator>> obs_acc(times.size(), std::vector<ScalarAccumulator>(observables.size()));
  std::vector<std::array<ScalarAccumulator, 4>> mom_acc(times.size());
  res.pooled.assign(times.size(), MomentAccumulator(d));
  res.collision_counts.resize(replicas);
  res.initial_energy.resize(replicas);
  res.final_energy.resize(replicas);

  const unsigned w = workers == 0 ? default_workers() : workers;
  const std::size_t chunk = std::max<std::size_t>(64, 16 * static_cast<std::size_t>(w));
  std::vector<ReplicaRecord> records;
  for (std::size_t begin = 0; begin < replicas; begin += chunk) {
    const std::size_t end = std::min(replicas, begin + chunk);
    records.assign(end - begin, {});
    parallel_for(end - begin, w, [&](std::size_t j) {
      auto& rec = records[j];
      rec.values.resize(times.size());
      rec.moments.resize(times.size());
      rec.pooled.resize(times.size());
      simulate(begin + j, rec);
    });
    for (std::size_t j = 0; j < records.size(); ++j) {
      auto& rec = records[j];
      const std::size_t r = begin + j;
      for (std::size_t ti = 0; ti < times.size(); ++ti) {
        for (std::size_t o = 0; o < observables.size(); ++o) obs_acc[ti][o].add(rec.values[ti][o]);
        for (int p = 0; p < 4; ++p) mom_acc[ti][static_cast<std::size_t>(p)].add(rec.moments[ti][static_cast<std::size_t>(p)]);
        res.pooled[ti].merge(rec.pooled[ti]);
      }
      res.collision_counts[r] = rec.collisions;
      res.initial_energy[r] = rec.energy0;
      res.final_energy[r] = rec.energy1;
      if (keep_final) res.final_states.push_back(std::move(rec.final_state));
    }
  }
  res.estimates.resize(times.size());
  res.moments.resize(times.size());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (const auto& a : obs_acc[ti]) res.estimates[ti].push_back(a.estimate());
    for (int p = 0; p < 4; ++p) res.moments[ti][static_cast<std::size_t>(p)] = mom_acc[ti][static_cast<std::size_t>(p)].estimate();
  }
  return res;
}

}  // namespace detail

inline void validate(const SimConfig& c) {
  validate(c.mixture);
  if (c.N < static_cast<std::size_t>(c.mixture.max_order()))
    throw ConfigError("N >= M required (N = " + std::to_string(c.N) +
                      ", M = " + std::to_string(c.mixture.max_order()) + ")");
  if (c.replicas < 1) throw ConfigError("replicas must be >= 1");
  for (const auto& o : c.observables) {
    validate(o, c.mixture.dimension);
    if (o.order() > c.N) throw ConfigError("observable '" + o.id + "' has order s > N");
  }
  if (c.initial.kind == InitialLaw::Kind::Uniform || c.initial.kind == InitialLaw::Kind::TwoPoint)
    if (!(c.initial.a > 0.0)) throw ConfigError("initial law parameter a must be positive");
}

/// Evolves `replicas` independent copies of the N-particle process to
/// t_end. Replica r draws from stream (seed, {KacReplica, tag, N, r}), so
/// output is independent of the worker count. Hooks run on worker threads.
inline RunResult run(const SimConfig& config, const std::vector<ObserverHook>& observers = {}) {
  validate(config);
  const auto times = detail::resolve_sample_times(config.sample_times, config.t_end);
  const int d = config.mixture.dimension;
  auto res = detail::run_replicas(
      config.replicas, config.workers, times, config.observables, d, config.keep_final_states,
      [&](std::size_t r, detail::ReplicaRecord& rec) {
        Stream rng(config.seed, stream_id({static_cast<std::uint64_t>(Purpose::KacReplica), config.stream_tag, config.N, r}));
        Stream slot_rng(config.seed, stream_id({static_cast<std::uint64_t>(Purpose::SlotDraw), config.stream_tag, config.N, r}));
        MasterState st = sample_initial(config.initial, config.N, d, rng);
        KacStepper stepper(config.mixture);
        rec.energy0 = st.energy();
        std::size_t next = 0;
        auto record = [&](std::size_t ti) {
          detail::record_state(st, config.observables, config.slots, slot_rng, rec, ti);
          for (const auto& hook : observers) hook(r, ti, st);
        };
        const double rate = static_cast<double>(config.N);
        for (;;) {
          const double t_next = st.time + rng.exponential(rate);
          // The path is right-continuous: a sample at time t sees every event at or before t.
          while (next < times.size() && times[next] < t_next) record(next++);
          if (t_next > config.t_end) break;
          st.time = t_next;
          stepper.collide(st, rng);
        }
        st.time = config.t_end;
        rec.collisions = st.collision_count;
        rec.energy1 = st.energy();
        if (config.keep_final_states) rec.final_state = std::move(st);
      });
  res.solver = "kac";
  res.N = config.N;
  res.seed = config.seed;
  return res;
}

}  // namespace kac
