#pragma once

// Mean-field (Nanbu-style) sampler for the limiting Boltzmann equation
//   df/dt = sum_K beta_K Q_K[f, ..., f],  Q_K = Q_K^+ - K f.
// Each particle jumps at rate alpha = sum_K beta_K K. At a jump it picks
// K with probability beta_K K / alpha, borrows K - 1 partners from the
// current ensemble, takes a random slot in the collision and keeps only its
// own outgoing velocity.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kac/errors.hpp"
#include "kac/laws.hpp"
#include "kac/random.hpp"
#include "kac/simulator.hpp"
#include "kac/state.hpp"

namespace kac {

/// An n x d empirical sample of f(t, .). Same layout as MasterState.
using MeanFieldEnsemble = MasterState;

class MeanFieldStepper {
 public:
  explicit MeanFieldStepper(const MixtureSpec& mixture)
      : mixture_(&mixture), order_(jump_weights(mixture)), indices_(static_cast<std::size_t>(mixture.max_order())) {
    std::size_t widest = 0;
    for (const auto& l : mixture.laws) widest = std::max(widest, l.block_size());
    block_.resize(widest);
  }

  double rate(std::size_t n) const { return static_cast<double>(n) * mixture_->alpha(); }

  /// One jump event, without the clock.
  void jump(MeanFieldEnsemble& ens, Stream& rng) {
    const std::size_t n = ens.particles;
    const int k = order_(rng);
    const auto kk = static_cast<std::size_t>(k);
    const LawSpec& law = mixture_->laws[kk - 1];
    const std::size_t jumper = static_cast<std::size_t>(rng.below(n));
    const std::size_t slot = static_cast<std::size_t>(rng.below(kk));
    indices_[slot] = jumper;
    for (std::size_t a = 0; a < kk; ++a) {
      if (a == slot) continue;
      std::size_t p;
      bool clash;
      do {
        p = static_cast<std::size_t>(rng.below(n));
        clash = p == jumper;
        for (std::size_t b = 0; b < a && !clash; ++b) clash = b != slot && indices_[b] == p;
      } while (clash);
      indices_[a] = p;
    }
    sample_angle_into(law, rng, angle_);
    const auto dd = static_cast<std::size_t>(ens.dimension);
    const std::span<double> block(block_.data(), kk * dd);
    for (std::size_t a = 0; a < kk; ++a) {
      auto v = ens.velocity(indices_[a]);
      std::copy(v.begin(), v.end(), block.begin() + static_cast<std::ptrdiff_t>(a * dd));
    }
    apply_law_inplace(law, angle_, block);
    auto out = ens.velocity(jumper);
    std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(slot * dd), dd, out.begin());
    ++ens.collision_count;
  }

  void step(MeanFieldEnsemble& ens, Stream& rng) {
    ens.time += rng.exponential(rate(ens.particles));
    jump(ens, rng);
  }

 private:
  static std::vector<double> jump_weights(const MixtureSpec& m) {
    validate(m);
    std::vector<double> w(m.betas.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = m.betas[k] * static_cast<double>(k + 1);
    return w;
  }

  const MixtureSpec* mixture_;
  OrderSampler order_;
  std::vector<std::size_t> indices_;
  std::vector<double> block_;
  ScatteringAngle angle_;
};

inline MeanFieldEnsemble meanfield_step(MeanFieldEnsemble ens, const MixtureSpec& mixture, Stream& rng) {
  require(ens.particles >= static_cast<std::size_t>(mixture.max_order()), "n >= M required");
  require(ens.dimension == mixture.dimension, "ensemble and mixture dimensions differ");
  MeanFieldStepper stepper(mixture);
  stepper.step(ens, rng);
  return ens;
}

struct MeanFieldConfig {
  std::size_t n = 1000;
  MixtureSpec mixture;
  double t_end = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  InitialLaw initial;
  std::vector<double> sample_times;
  std::vector<ObservableSpec> observables;
  SlotMode slots = SlotMode::First;
  bool keep_final_states = false;
  unsigned workers = 1;
  std::uint64_t stream_tag = 0;
};

inline void validate(const MeanFieldConfig& c) {
  validate(c.mixture);
  if (c.n < static_cast<std::size_t>(c.mixture.max_order()))
    throw ConfigError("n >= M required (n = " + std::to_string(c.n) + ", M = " +
                      std::to_string(c.mixture.max_order()) + ")");
  if (c.replicas < 1) throw ConfigError("replicas must be >= 1");
  for (const auto& o : c.observables) {
    validate(o, c.mixture.dimension);
    if (o.order() > c.n) throw ConfigError("observable '" + o.id + "' has order s > n");
  }
}

/// Replicated mean-field runs; same RunResult layout as the Kac simulator
/// (solver = "meanfield", N = ensemble size n).
inline RunResult meanfield_run(const MeanFieldConfig& config, const std::vector<ObserverHook>& observers = {}) {
  validate(config);
  const auto times = detail::resolve_sample_times(config.sample_times, config.t_end);
  const int d = config.mixture.dimension;
  auto res = detail::run_replicas(
      config.replicas, config.workers, times, config.observables, d, config.keep_final_states,
      [&](std::size_t r, detail::ReplicaRecord& rec) {
        const auto purpose = static_cast<std::uint64_t>(Purpose::MeanFieldReplica);
        Stream rng(config.seed, stream_id({purpose, config.stream_tag, config.n, r}));
        Stream slot_rng(config.seed, stream_id({static_cast<std::uint64_t>(Purpose::SlotDraw), purpose,
                                                config.stream_tag, config.n, r}));
        MeanFieldEnsemble ens = sample_initial(config.initial, config.n, d, rng);
        MeanFieldStepper stepper(config.mixture);
        rec.energy0 = ens.energy();
        const double rate = stepper.rate(config.n);
        std::size_t next = 0;
        for (;;) {
          const double t_next = ens.time + rng.exponential(rate);
          while (next < times.size() && times[next] < t_next) {
            detail::record_state(ens, config.observables, config.slots, slot_rng, rec, next);
            for (const auto& hook : observers) hook(r, next, ens);
            ++next;
          }
          if (t_next > config.t_end) break;
          ens.time = t_next;
          stepper.jump(ens, rng);
        }
        ens.time = config.t_end;
        rec.collisions = ens.collision_count;
        rec.energy1 = ens.energy();
        if (config.keep_final_states) rec.final_state = std::move(ens);
      });
  res.solver = "meanfield";
  res.N = config.n;
  res.seed = config.seed;
  return res;
}

}  // namespace kac
