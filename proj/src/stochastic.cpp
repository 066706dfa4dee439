#include "qnet/stochastic.hpp"

#include <cmath>

#include "qnet/errors.hpp"

namespace qnet {

double memory_efficiency(double delta_t, double tau) {
  if (!(tau > 0.0)) throw ParameterError("memory lifetime tau must be positive");
  if (!(delta_t >= 0.0)) throw ParameterError("time step delta_t must be nonnegative");
  return std::exp(-delta_t / tau);
}

CountVector sample_arrivals(const NetworkModel& model, const RngStream& step_stream) {
  const int nq = model.n_queues();
  CountVector a = CountVector::Zero(nq);
  const RngStream base = step_stream.derive(Purpose::arrivals);
  for (int q = 0; q < nq; ++q) {
    if (!model.queues.is_physical(q) || model.arrival_rate(q) == 0.0) continue;
    RngStream s = base.derive(static_cast<std::uint64_t>(q));
    a(q) = s.poisson(model.arrival_rate(q));
  }
  return a;
}

CountVector sample_losses(const CountVector& backlog, double eta, const RngStream& step_stream) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ParameterError("eta must lie in (0, 1]");
  CountVector l = CountVector::Zero(backlog.size());
  if (eta == 1.0) return l;
  const RngStream base = step_stream.derive(Purpose::losses);
  for (Eigen::Index q = 0; q < backlog.size(); ++q) {
    if (backlog(q) <= 0) continue;
    RngStream s = base.derive(static_cast<std::uint64_t>(q));
    l(q) = s.binomial(backlog(q), 1.0 - eta);
  }
  return l;
}

CountVector sample_demands(const NetworkModel& model, const RngStream& step_stream) {
  const int nq = model.n_queues();
  CountVector b = CountVector::Zero(nq);
  const RngStream base = step_stream.derive(Purpose::demands);
  for (int q = 0; q < nq; ++q) {
    if (!model.user_pair_queue[static_cast<std::size_t>(q)] || model.demand_rate(q) == 0.0) continue;
    RngStream s = base.derive(static_cast<std::uint64_t>(q));
    b(q) = s.poisson(model.demand_rate(q));
  }
  return b;
}

StepRealization sample_step(const NetworkModel& model, const CountVector& backlog, const RngStream& step_stream) {
  return {sample_arrivals(model, step_stream), sample_losses(backlog, model.eta, step_stream),
          sample_demands(model, step_stream)};
}

RngStream step_stream(std::uint64_t master_seed, std::uint64_t run, std::uint64_t step) {
  return RngStream(master_seed).derive({run, step});
}

}  // namespace qnet
