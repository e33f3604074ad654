#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "erq/solver.hpp"
#include "erq/state_space.hpp"

namespace erq {

/// Probability of n customers in the system, n = 0..c+K, obtained by summing
/// stationary probabilities over the states with that many customers present.
struct AggregatedDistribution {
  std::vector<double> p;

  double blocking() const { return p.back(); }
};

inline AggregatedDistribution aggregate(const StationaryDistribution& dist,
                                        const StateSpace& space) {
  if (dist.pi.size() != space.size())
    throw std::invalid_argument(
        "stationary vector is not aligned with the state space");
  const auto& params = space.params();
  AggregatedDistribution agg;
  agg.p.assign(params.channels + params.queue_cap + 1, 0.0);
  for (std::size_t k = 0; k < space.size(); ++k)
    agg.p[space[k].customers()] += dist.pi[k];
  return agg;
}

struct PerformanceMeasures {
  double L = 0.0;           ///< mean number in system
  double Lq = 0.0;          ///< mean queue length
  double W = 0.0;           ///< mean time in system
  double Wq = 0.0;          ///< mean waiting time
  double p_block = 0.0;     ///< P(arrival balks) = P_{c+K}
  double lambda_eff = 0.0;  ///< admitted arrival rate
  double rho = 0.0;         ///< offered load per channel
};

/// Mean-value measures from the occupancy distribution; waiting-time figures
/// follow from Little's law applied with the admitted arrival rate.
inline PerformanceMeasures performance_measures(
    const AggregatedDistribution& agg, const QueueParams& params) {
  params.validate();
  PerformanceMeasures m;
  for (std::size_t n = 0; n < agg.p.size(); ++n) {
    m.L += double(n) * agg.p[n];
    if (int(n) > params.channels)
      m.Lq += (double(n) - params.channels) * agg.p[n];
  }
  m.p_block = agg.p.back();
  m.lambda_eff = params.arrival_rate * (1.0 - m.p_block);
  if (!(m.lambda_eff > 0.0))
    throw SolverError("effective arrival rate is zero; cannot apply Little's law");
  m.W = m.L / m.lambda_eff;
  m.Wq = m.Lq / m.lambda_eff;
  m.rho = params.rho();
  return m;
}

/// Arrival rate from a target per-channel load: lambda = rho*mu*c/r.
inline QueueParams params_from_rho(double rho, int channels, int stages,
                                   double stage_rate) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  QueueParams p;
  p.arrival_rate = rho * stage_rate * channels / stages;
  p.stage_rate = stage_rate;
  p.stages = stages;
  p.channels = channels;
  p.queue_cap = 0;
  return p;
}

/// Erlang(r) service-time density mu*(mu t)^(r-1) e^(-mu t)/(r-1)!.
inline double erlang_pdf(double t, int stages, double rate) {
  if (stages < 1 || !(rate > 0.0))
    throw std::invalid_argument("erlang_pdf: need r >= 1 and rate > 0");
  if (t < 0.0) return 0.0;
  if (t == 0.0) return stages == 1 ? rate : 0.0;
  return rate * std::exp((stages - 1) * std::log(rate * t) - rate * t -
                         std::lgamma(double(stages)));
}

}  // namespace erq
