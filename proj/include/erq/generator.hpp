#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "erq/state_space.hpp"

namespace erq {

/// Sparse infinitesimal generator of the state process. Entries are kept as
/// (row, col, rate) triplets sorted by row then column, at most one per
/// position; the diagonal makes every row sum to zero.
class GeneratorMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double rate;
    bool operator==(const Entry&) const = default;
  };

  GeneratorMatrix(std::size_t n, std::vector<Entry> entries)
      : n_(n), entries_(std::move(entries)) {}

  std::size_t size() const { return n_; }
  const std::vector<Entry>& entries() const { return entries_; }

  double max_abs_diagonal() const {
    double m = 0.0;
    for (const auto& e : entries_)
      if (e.row == e.col) m = std::max(m, std::abs(e.rate));
    return m;
  }

  /// Largest absolute row sum; zero for a proper generator.
  double max_abs_row_sum() const {
    std::vector<double> sums(n_, 0.0);
    for (const auto& e : entries_) sums[e.row] += e.rate;
    double m = 0.0;
    for (double s : sums) m = std::max(m, std::abs(s));
    return m;
  }

  /// Coordinate-format text dump: "row col rate" per entry, rows ascending.
  void write_coordinate(std::ostream& os) const {
    char buf[64];
    for (const auto& e : entries_) {
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", e.row, e.col, e.rate);
      os << buf;
    }
  }

 private:
  std::size_t n_;
  std::vector<Entry> entries_;
};

/// Builds Q from the four transition rules of the phase process:
///  1. empty queue, a free channel: arrival enters phase 1 at rate lambda;
///  2. queue below K, all channels busy: arrival joins the queue at lambda;
///  3. a customer in phase i < r advances to phase i+1 at rate phase[i]*mu;
///  4. a customer in phase r completes at rate phase[r]*mu; if anyone waits,
///     the head of the queue immediately enters phase 1.
/// The diagonal is the negated off-diagonal row sum.
inline GeneratorMatrix build_generator(const QueueParams& params,
                                       const StateSpace& space) {
  params.validate();
  if (space.params() != params)
    throw std::invalid_argument("state space was built from different params");

  const int r = params.stages;
  const int c = params.channels;
  const int K = params.queue_cap;
  const double lambda = params.arrival_rate;
  const double mu = params.stage_rate;
  const std::size_t n = space.size();

  auto describe = [](const StateVector& s) {
    std::string txt = "(" + std::to_string(s.queue);
    for (int p : s.phase) txt += "," + std::to_string(p);
    return txt + ")";
  };

  std::vector<GeneratorMatrix::Entry> entries;
  entries.reserve(n * (r + 2));
  StateVector target;

  for (std::size_t i = 0; i < n; ++i) {
    const StateVector& s = space[i];
    const int busy = s.in_service();
    double out_rate = 0.0;
    const std::size_t row_begin = entries.size();

    auto emit = [&](const StateVector& t, double rate, int rule) {
      const std::size_t j = space.index_of(t);
      if (j == StateSpace::npos)
        throw std::logic_error("generator rule " + std::to_string(rule) +
                               " produced unknown state " + describe(t) +
                               " from " + describe(s));
      entries.push_back({i, j, rate});
      out_rate += rate;
    };

    if (s.queue == 0 && busy < c) {  // rule 1
      target = s;
      ++target.phase[0];
      emit(target, lambda, 1);
    }
    if (s.queue < K && busy == c) {  // rule 2
      target = s;
      ++target.queue;
      emit(target, lambda, 2);
    }
    for (int p = 0; p + 1 < r; ++p) {  // rule 3
      if (s.phase[p] > 0) {
        target = s;
        --target.phase[p];
        ++target.phase[p + 1];
        emit(target, s.phase[p] * mu, 3);
      }
    }
    if (s.phase[r - 1] > 0) {  // rule 4
      target = s;
      --target.phase[r - 1];
      if (s.queue > 0) {
        --target.queue;
        ++target.phase[0];
      }
      emit(target, s.phase[r - 1] * mu, 4);
    }

    entries.push_back({i, i, -out_rate});

    // Keep the row sorted by column; rows are emitted in order already.
    std::sort(entries.begin() + row_begin, entries.end(),
              [](const auto& a, const auto& b) { return a.col < b.col; });
  }

  return GeneratorMatrix(n, std::move(entries));
}

}  // namespace erq
