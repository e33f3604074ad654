#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "erq/params.hpp"

namespace erq {

/// One state of the M/E_r/c/K phase process: the queue length plus, for each
/// of the r service phases, the number of customers currently in that phase.
///
/// Feasibility: sum(phase) <= c, and a nonempty queue requires every channel
/// busy (sum(phase) == c).
struct StateVector {
  int queue = 0;           ///< s0, number of waiting customers
  std::vector<int> phase;  ///< phase[i] = customers in service phase i+1

  int in_service() const {
    int n = 0;
    for (int p : phase) n += p;
    return n;
  }

  /// Total customers present (waiting + in service).
  int customers() const { return queue + in_service(); }

  bool operator==(const StateVector&) const = default;
};

struct StateVectorHash {
  std::size_t operator()(const StateVector& s) const {
    std::size_t h = std::hash<int>{}(s.queue);
    for (int p : s.phase) h = h * 1000003u + std::hash<int>{}(p);
    return h;
  }
};

/// Exact binomial coefficient; throws std::overflow_error instead of wrapping.
inline std::uint64_t binomial_checked(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i);  // exact: product of i consecutive ints divisible by i!
    acc /= i;
    if (acc > UINT64_MAX)
      throw std::overflow_error("binomial(" + std::to_string(n) + ", " +
                                std::to_string(k) + ") exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

/// Number of states of the M/E_r/c/K system:
///   1 + sum_{i=1..c} C(i+r-1, i) + K * C(c+r-1, c)
/// i.e. the empty state, the busy-but-not-full states grouped by customers in
/// service, and K identical blocks of waiting states.
inline std::uint64_t state_count(int stages, int channels, int queue_cap) {
  if (stages < 1 || channels < 1 || queue_cap < 0)
    throw std::invalid_argument("state_count: need r >= 1, c >= 1, K >= 0");
  const auto r = static_cast<std::uint64_t>(stages);
  const auto c = static_cast<std::uint64_t>(channels);
  std::uint64_t total = 1;
  for (std::uint64_t i = 1; i <= c; ++i) {
    std::uint64_t term = binomial_checked(i + r - 1, i);
    if (total > UINT64_MAX - term)
      throw std::overflow_error("state_count overflows 64 bits");
    total += term;
  }
  const std::uint64_t block = binomial_checked(c + r - 1, c);
  for (int j = 0; j < queue_cap; ++j) {
    if (total > UINT64_MAX - block)
      throw std::overflow_error("state_count overflows 64 bits");
    total += block;
  }
  return total;
}

/// Ordered, indexed enumeration of every reachable state.
///
/// Order is deterministic: first all states with an empty queue, generated by
/// an odometer over the phase occupancies (phase 1 varies fastest, keeping
/// only occupancies with sum <= c); then, for each queue length j = 1..K, the
/// all-channels-busy states in the same odometer order with queue set to j.
class StateSpace {
 public:
  explicit StateSpace(const QueueParams& params) : params_(params) {
    params.validate();
    const int r = params.stages;
    const int c = params.channels;
    const std::uint64_t expected =
        state_count(r, c, params.queue_cap);  // throws on overflow

    states_.reserve(expected);
    std::vector<int> z(r, 0);
    while (z[r - 1] <= c) {
      int sum = 0;
      for (int v : z) sum += v;
      if (sum <= c) states_.push_back(StateVector{0, z});
      ++z[0];
      for (int i = 1; i < r; ++i) {
        if (z[i - 1] > c) {
          z[i - 1] = 0;
          ++z[i];
        }
      }
    }

    const std::size_t boundary = states_.size();
    for (int j = 1; j <= params.queue_cap; ++j) {
      for (std::size_t k = 0; k < boundary; ++k) {
        if (states_[k].in_service() == c)
          states_.push_back(StateVector{j, states_[k].phase});
      }
    }

    if (states_.size() != expected)
      throw std::logic_error("state enumeration does not match state_count");

    index_.reserve(states_.size());
    for (std::size_t k = 0; k < states_.size(); ++k)
      index_.emplace(states_[k], k);
  }

  const QueueParams& params() const { return params_; }
  const std::vector<StateVector>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }
  const StateVector& operator[](std::size_t k) const { return states_[k]; }

  /// Ordinal of a state, or npos if the vector is not a reachable state.
  std::size_t index_of(const StateVector& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? npos : it->second;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  QueueParams params_;
  std::vector<StateVector> states_;
  std::unordered_map<StateVector, std::size_t, StateVectorHash> index_;
};

inline StateSpace enumerate_states(const QueueParams& params) {
  return StateSpace(params);
}

}  // namespace erq
