#pragma once

#include <cstdint>

#include "qnet/rng.hpp"
#include "qnet/topology.hpp"
#include "qnet/types.hpp"

namespace qnet {

/// eta = exp(-delta_t / tau): probability that a stored qubit survives one
/// time step of duration `delta_t` in a memory of lifetime `tau`.
double memory_efficiency(double delta_t, double tau);

/// Random draws of one time step.
struct StepRealization {
  CountVector arrivals;  // a(t); zero on virtual queues
  CountVector losses;    // l(t); never above the start-of-step backlog
  CountVector demands;   // b(t); zero off user-pair queues

  static StepRealization zero(int n_queues) {
    return {CountVector::Zero(n_queues), CountVector::Zero(n_queues), CountVector::Zero(n_queues)};
  }
};

// The step-level stream passed to the samplers below is expected to be keyed
// by (run, step); each sampler derives its own (purpose, queue) sub-streams.

/// Independent Poisson(alpha_e) per physical queue.
CountVector sample_arrivals(const NetworkModel& model, const RngStream& step_stream);

/// Binomial(q_e, 1 - eta) per queue, using the start-of-step backlog as the
/// trial count.
CountVector sample_losses(const CountVector& backlog, double eta, const RngStream& step_stream);

/// Independent Poisson(beta_e) per user-pair queue.
CountVector sample_demands(const NetworkModel& model, const RngStream& step_stream);

StepRealization sample_step(const NetworkModel& model, const CountVector& backlog, const RngStream& step_stream);

/// Stream for (run, step) under a master seed.
RngStream step_stream(std::uint64_t master_seed, std::uint64_t run, std::uint64_t step);

}  // namespace qnet
