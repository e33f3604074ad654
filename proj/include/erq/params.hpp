#pragma once

#include <stdexcept>
#include <string>

namespace erq {

/// Parameters of an M/E_r/c/K queueing system.
///
/// Service times are Erlang distributed: r sequential exponential stages,
/// each with rate mu, so the mean service time is r/mu. K bounds the number
/// of *waiting* customers; total capacity is c + K.
struct QueueParams {
  double arrival_rate = 1.0;  ///< Poisson arrival intensity (lambda)
  double stage_rate = 1.0;    ///< per-stage completion rate (mu)
  int stages = 1;             ///< Erlang order (r)
  int channels = 1;           ///< parallel service channels (c)
  int queue_cap = 0;          ///< maximum queue length (K)

  /// Offered load per channel, lambda*r/(mu*c). Always derived, never stored.
  double rho() const {
    return arrival_rate * stages / (stage_rate * channels);
  }

  void validate() const {
    if (!(arrival_rate > 0.0))
      throw std::invalid_argument("arrival rate must be > 0, got " +
                                  std::to_string(arrival_rate));
    if (!(stage_rate > 0.0))
      throw std::invalid_argument("stage rate must be > 0, got " +
                                  std::to_string(stage_rate));
    if (stages < 1)
      throw std::invalid_argument("Erlang order must be >= 1, got " +
                                  std::to_string(stages));
    if (channels < 1)
      throw std::invalid_argument("channel count must be >= 1, got " +
                                  std::to_string(channels));
    if (queue_cap < 0)
      throw std::invalid_argument("queue capacity must be >= 0, got " +
                                  std::to_string(queue_cap));
  }

  bool operator==(const QueueParams&) const = default;
};

}  // namespace erq
