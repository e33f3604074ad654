#include <catch2/catch_amalgamated.hpp>

#include "erq/state_space.hpp"
#include "support/oracles.hpp"

using erq::QueueParams;
using erq::StateSpace;
using erq::StateVector;

namespace {

QueueParams make(int r, int c, int K) {
  QueueParams p;
  p.stages = r;
  p.channels = c;
  p.queue_cap = K;
  return p;
}

std::vector<int> flat(const StateVector& s) {
  std::vector<int> v{s.queue};
  v.insert(v.end(), s.phase.begin(), s.phase.end());
  return v;
}

}  // namespace

TEST_CASE("nine states of the E2/2/1 system in enumeration order") {
  StateSpace space(make(2, 2, 1));
  const std::vector<std::vector<int>> expected = {
      {0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {0, 0, 1}, {0, 1, 1},
      {0, 0, 2}, {1, 2, 0}, {1, 1, 1}, {1, 0, 2}};
  REQUIRE(space.size() == 9);
  for (std::size_t k = 0; k < 9; ++k) CHECK(flat(space[k]) == expected[k]);
}

TEST_CASE("smallest nondegenerate system") {
  StateSpace space(make(1, 1, 0));
  REQUIRE(space.size() == 2);
  CHECK(flat(space[0]) == std::vector<int>{0, 0});
  CHECK(flat(space[1]) == std::vector<int>{0, 1});
}

TEST_CASE("state counts") {
  CHECK(erq::state_count(2, 2, 1) == 9);
  CHECK(erq::state_count(1, 1, 0) == 2);
  CHECK(erq::state_count(3, 2, 2) == 22);
  CHECK(StateSpace(make(3, 2, 2)).size() == 22);
}

TEST_CASE("closed form for a single waiting block") {
  // K = 1: N = (c + 2r)/r * C(c+r-1, c). The division is exact because
  // (c + 2r) * C(c+r-1, c) = r * N holds in the integers.
  for (int r = 1; r <= 6; ++r) {
    for (int c = 1; c <= 8; ++c) {
      const auto binom = erq::binomial_checked(c + r - 1, c);
      const auto lhs = (c + 2 * std::uint64_t(r)) * binom;
      REQUIRE(lhs % r == 0);
      CHECK(erq::state_count(r, c, 1) == lhs / r);
    }
  }
}

TEST_CASE("enumeration equals brute force on small instances") {
  for (int r = 1; r <= 5; ++r) {
    for (int c = 1; c <= 5; ++c) {
      for (int K = 0; K <= 4; ++K) {
        if (r * c * std::max(K, 1) > 200) continue;
        StateSpace space(make(r, c, K));
        auto expected = oracle::brute_force_states(r, c, K);
        REQUIRE(space.size() == expected.size());
        std::set<std::vector<int>> seen;
        for (std::size_t k = 0; k < space.size(); ++k) {
          const StateVector& s = space[k];
          CHECK(s.in_service() <= c);
          if (s.queue > 0) CHECK(s.in_service() == c);
          CHECK(space.index_of(s) == k);  // bijection, no duplicates
          seen.insert(flat(s));
        }
        CHECK(seen == expected);
      }
    }
  }
}

TEST_CASE("index lookup of a non-state") {
  StateSpace space(make(2, 2, 1));
  StateVector bogus{1, {0, 1}};  // queue without all channels busy
  CHECK(space.index_of(bogus) == StateSpace::npos);
}

TEST_CASE("binomial overflow is detected") {
  CHECK(erq::binomial_checked(10, 3) == 120);
  CHECK(erq::binomial_checked(3, 10) == 0);
  CHECK_THROWS_AS(erq::binomial_checked(200, 100), std::overflow_error);
  CHECK_THROWS_AS(erq::state_count(100, 100, 1), std::overflow_error);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(StateSpace(QueueParams{-1.0, 1.0, 1, 1, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(StateSpace(QueueParams{1.0, 0.0, 1, 1, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(StateSpace(make(0, 1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(StateSpace(make(1, 0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(StateSpace(make(1, 1, -1)), std::invalid_argument);
  CHECK_THROWS_AS(erq::state_count(0, 1, 0), std::invalid_argument);
}

TEST_CASE("rho is derived, not stored") {
  QueueParams p{2.0, 4.0, 3, 2, 5};
  CHECK(p.rho() == Catch::Approx(2.0 * 3 / (4.0 * 2)));
}
