#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

#include "erq/params.hpp"

namespace erq {

/// Discrete-event simulation of the M/E_r/c/K system, used as a statistically
/// independent check on the analytic solvers. Fully deterministic for a fixed
/// seed: the generator is std::mt19937_64 (a portable, standard-specified
/// sequence) and every variate is drawn by inverse CDF from
/// u = ((x >> 11) + 1) * 2^-53, so results reproduce bit-for-bit everywhere.
struct SimConfig {
  QueueParams params;
  double warmup = -1.0;    ///< simulated time discarded; <0 selects horizon/10
  double horizon = 1e6;    ///< simulated time measured
  std::uint64_t seed = 1;
  int batches = 20;        ///< independent batches for the confidence interval

  void validate() const {
    params.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (batches < 2) throw std::invalid_argument("need at least 2 batches");
    if (warmup >= 0.0 && !std::isfinite(warmup))
      throw std::invalid_argument("warmup must be finite");
  }

  double effective_warmup() const { return warmup < 0.0 ? 0.1 * horizon : warmup; }
};

struct SimResult {
  std::vector<double> p_hat;         ///< time-average occupancy fractions
  std::vector<double> p_half_width;  ///< 95% CI half-widths for p_hat
  double L_hat = 0.0;                ///< time-average number in system
  double L_half_width = 0.0;         ///< 95% CI half-width for L_hat
  std::uint64_t events = 0;          ///< arrivals (incl. balked) + departures

  bool operator==(const SimResult&) const = default;
};

namespace detail {

inline double uniform_open01(std::mt19937_64& rng) {
  return (double(rng() >> 11) + 1.0) * 0x1.0p-53;  // in (0, 1]
}

inline double exponential_sample(std::mt19937_64& rng, double rate) {
  return -std::log(uniform_open01(rng)) / rate;
}

}  // namespace detail

/// One Erlang(r, mu) service time: the sum of r independent Exp(mu) stages.
inline double sample_service_time(std::mt19937_64& rng, int stages,
                                  double rate) {
  if (stages < 1 || !(rate > 0.0))
    throw std::invalid_argument("sample_service_time: need r >= 1, rate > 0");
  double t = 0.0;
  for (int i = 0; i < stages; ++i) t += detail::exponential_sample(rng, rate);
  return t;
}

inline SimResult simulate(const SimConfig& config) {
  config.validate();
  const auto& p = config.params;
  const int c = p.channels;
  const int K = p.queue_cap;
  const double warmup = config.effective_warmup();
  const double end = warmup + config.horizon;
  const int batches = config.batches;
  const double batch_len = config.horizon / batches;
  const std::size_t levels = std::size_t(c + K) + 1;

  std::mt19937_64 rng(config.seed);

  // occupancy[b][n] = time spent with n customers during batch b
  std::vector<std::vector<double>> occupancy(
      batches, std::vector<double>(levels, 0.0));

  // Per-customer service: whole Erlang samples; the phase decomposition is an
  // analytic device, the occupancy process it describes is this one.
  using Departure = std::pair<double, int>;  // (time, channel)
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> busy;
  std::vector<int> free_channels(c);
  for (int i = 0; i < c; ++i) free_channels[i] = i;

  int queue = 0;
  std::uint64_t events = 0;
  double now = 0.0;
  double next_arrival = detail::exponential_sample(rng, p.arrival_rate);

  auto occupy = [&](double from, double to, int n) {
    from = std::max(from, warmup);
    to = std::min(to, end);
    while (from < to) {
      int b = std::min(int((from - warmup) / batch_len), batches - 1);
      double b_end = warmup + (b + 1) * batch_len;
      if (b_end <= from && b < batches - 1) {  // boundary roundoff
        ++b;
        b_end = warmup + (b + 1) * batch_len;
      }
      const double upto = std::min(to, std::max(b_end, from));
      occupancy[b][std::size_t(n)] += upto - from;
      from = upto;
      if (upto >= to) break;
    }
  };

  auto start_service = [&](double at) {
    const std::size_t pick = free_channels.size() > 1
                                 ? std::size_t(rng() % free_channels.size())
                                 : 0;  // assumption: random channel choice
    const int ch = free_channels[pick];
    free_channels[pick] = free_channels.back();
    free_channels.pop_back();
    busy.emplace(at + sample_service_time(rng, p.stages, p.stage_rate), ch);
  };

  while (true) {
    const bool departure_next = !busy.empty() && busy.top().first < next_arrival;
    const double t = departure_next ? busy.top().first : next_arrival;
    const int in_system = int(c - free_channels.size()) + queue;
    if (t >= end) {
      occupy(now, end, in_system);
      break;
    }
    occupy(now, t, in_system);
    now = t;
    ++events;

    if (departure_next) {
      const int ch = busy.top().second;
      busy.pop();
      free_channels.push_back(ch);
      if (queue > 0) {
        --queue;
        start_service(now);  // head of the line, FCFS
      }
    } else {
      next_arrival = now + detail::exponential_sample(rng, p.arrival_rate);
      if (in_system == c + K) {
        // full system: the arrival balks
      } else if (!free_channels.empty()) {
        start_service(now);
      } else {
        ++queue;
      }
    }
    if (int(c - free_channels.size()) > c || queue > K)
      throw std::logic_error("simulation invariant violated");
  }

  SimResult result;
  result.events = events;
  result.p_hat.assign(levels, 0.0);
  result.p_half_width.assign(levels, 0.0);

  std::vector<double> L_batch(batches, 0.0);
  std::vector<std::vector<double>> p_batch(
      batches, std::vector<double>(levels, 0.0));
  for (int b = 0; b < batches; ++b) {
    for (std::size_t n = 0; n < levels; ++n) {
      p_batch[b][n] = occupancy[b][n] / batch_len;
      L_batch[b] += double(n) * p_batch[b][n];
      result.p_hat[n] += occupancy[b][n] / config.horizon;
    }
    result.L_hat += L_batch[b] / batches;
  }

  const boost::math::students_t_distribution<double> t_dist(batches - 1);
  const double t975 = boost::math::quantile(t_dist, 0.975);
  auto half_width = [&](auto&& value_of_batch, double mean) {
    double ss = 0.0;
    for (int b = 0; b < batches; ++b) {
      const double d = value_of_batch(b) - mean;
      ss += d * d;
    }
    return t975 * std::sqrt(ss / (batches - 1) / batches);
  };
  result.L_half_width = half_width([&](int b) { return L_batch[b]; }, result.L_hat);
  for (std::size_t n = 0; n < levels; ++n)
    result.p_half_width[n] =
        half_width([&](int b) { return p_batch[b][n]; }, result.p_hat[n]);
  return result;
}

}  // namespace erq
