#include <catch2/catch_amalgamated.hpp>

#include "erq/measures.hpp"
#include "erq/record.hpp"
#include "support/oracles.hpp"

using erq::AggregatedDistribution;
using erq::Method;
using erq::QueueParams;
using erq::StateSpace;

namespace {

struct Solved {
  QueueParams params;
  StateSpace space;
  erq::StationaryDistribution dist;
  AggregatedDistribution agg;

  explicit Solved(QueueParams p, Method m = Method::linear)
      : params(p),
        space(p),
        dist(erq::solve_stationary(erq::build_generator(p, space), m)),
        agg(erq::aggregate(dist, space)) {}
};

}  // namespace

TEST_CASE("aggregation groups states by customers present") {
  Solved s(QueueParams{1.0, 1.0, 2, 2, 1});
  // E2/2/1 enumeration: P_1 collects (0,1,0) and (0,0,1), indices 1 and 3.
  CHECK(s.agg.p[1] == Catch::Approx(s.dist.pi[1] + s.dist.pi[3]).margin(1e-15));
  CHECK(s.agg.p[0] == s.dist.pi[0]);
  CHECK(s.agg.p.size() == 4u);

  double pi_sum = 0.0, agg_sum = 0.0;
  for (double x : s.dist.pi) pi_sum += x;
  for (double x : s.agg.p) agg_sum += x;
  CHECK(agg_sum == Catch::Approx(pi_sum).margin(1e-15));
  for (double x : s.agg.p) CHECK(x >= 0.0);
}

TEST_CASE("M/M/1 with one waiting place matches the geometric form") {
  Solved s(QueueParams{1.0, 2.0, 1, 1, 1});
  const std::vector<double> expected{4.0 / 7, 2.0 / 7, 1.0 / 7};
  for (int n = 0; n <= 2; ++n)
    CHECK(s.agg.p[n] == Catch::Approx(expected[n]).margin(1e-10));
}

TEST_CASE("mean system size reproduces reference anchor cells") {
  auto L_of = [](double rho, int c, int r, int K) {
    QueueParams p = erq::params_from_rho(rho, c, r, 1.0);
    p.queue_cap = K;
    Solved s(p);
    return erq::performance_measures(s.agg, p).L;
  };
  CHECK(L_of(0.5, 4, 2, 1) == Catch::Approx(1.958).margin(5e-4));
  CHECK(L_of(0.9, 6, 3, 10) == Catch::Approx(7.730).margin(1.5e-3));
  // at light load the system size is the offered load rho*c to first order
  CHECK(L_of(0.1, 4, 2, 1) == Catch::Approx(0.400).margin(5e-4));
}

TEST_CASE("Little's law identities hold exactly") {
  for (auto [r, c, K, rho] :
       {std::tuple{2, 3, 2, 0.7}, {1, 4, 0, 0.5}, {3, 2, 8, 1.1}}) {
    QueueParams p = erq::params_from_rho(rho, c, r, 1.0);
    p.queue_cap = K;
    Solved s(p);
    auto m = erq::performance_measures(s.agg, p);
    CHECK(m.W * m.lambda_eff == Catch::Approx(m.L).epsilon(1e-12));
    CHECK(m.Wq * m.lambda_eff == Catch::Approx(m.Lq).epsilon(1e-12));
    CHECK(m.p_block >= 0.0);
    CHECK(m.p_block <= 1.0);
    CHECK(m.lambda_eff == p.arrival_rate * (1.0 - m.p_block));
    // mean in service = L - Lq never exceeds the channel count
    CHECK(m.L - m.Lq <= c + 1e-12);
    CHECK(m.rho == p.rho());
  }
}

TEST_CASE("arrival rate from load round-trips") {
  QueueParams p = erq::params_from_rho(0.9, 6, 3, 1.0);
  CHECK(p.arrival_rate == Catch::Approx(1.8).epsilon(1e-15));
  CHECK(p.rho() == Catch::Approx(0.9).epsilon(1e-15));
  QueueParams q = erq::params_from_rho(0.5, 4, 2, 1.0);
  CHECK(q.arrival_rate == 1.0);
  QueueParams unit = erq::params_from_rho(1.0, 6, 3, 1.0);
  CHECK(unit.arrival_rate == 2.0);
  CHECK(unit.rho() == 1.0);
  CHECK_THROWS_AS(erq::params_from_rho(0.0, 1, 1, 1.0),
                  std::invalid_argument);
}

TEST_CASE("Erlang density values and normalization") {
  CHECK(erq::erlang_pdf(0.0, 1, 2.0) == 2.0);
  CHECK(erq::erlang_pdf(1.0, 2, 1.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(erq::erlang_pdf(0.0, 3, 2.0) == 0.0);
  CHECK(erq::erlang_pdf(-1.0, 2, 1.0) == 0.0);

  for (auto [r, mu] : {std::pair{1, 1.0}, {2, 1.0}, {4, 2.0}, {7, 0.5}}) {
    auto pdf = [r = r, mu = mu](double t) { return erq::erlang_pdf(t, r, mu); };
    const double mass = oracle::adaptive_simpson(pdf, 0.0, 50.0 / mu, 1e-10);
    CHECK(mass == Catch::Approx(1.0).margin(1e-8));
    auto t_pdf = [&](double t) { return t * pdf(t); };
    const double mean = oracle::adaptive_simpson(t_pdf, 0.0, 80.0 / mu, 1e-10);
    CHECK(mean == Catch::Approx(double(r) / mu).margin(1e-6));
  }
}

TEST_CASE("mean system size is monotone in the queue capacity") {
  double last = 0.0;
  for (int K = 0; K <= 10; ++K) {
    QueueParams p = erq::params_from_rho(0.9, 4, 2, 1.0);
    p.queue_cap = K;
    Solved s(p);
    const double L = erq::performance_measures(s.agg, p).L;
    CHECK(L >= last - 1e-12);
    last = L;
  }
}

TEST_CASE("overloaded systems still have a steady state") {
  QueueParams p = erq::params_from_rho(1.2, 3, 2, 1.0);
  p.queue_cap = 4;
  Solved s(p, Method::squaring);
  auto m = erq::performance_measures(s.agg, p);
  CHECK(m.L > 0.0);
  CHECK(m.L < p.channels + p.queue_cap);
  CHECK(m.p_block > 0.1);  // heavy blocking when rho > 1
}

TEST_CASE("common scaling of both rates leaves the distribution unchanged") {
  QueueParams base = erq::params_from_rho(0.7, 3, 2, 1.0);
  base.queue_cap = 2;
  Solved ref(base, Method::squaring);
  for (double scale : {10.0, 0.25}) {
    QueueParams scaled = base;
    scaled.arrival_rate *= scale;
    scaled.stage_rate *= scale;
    Solved other(scaled, Method::squaring);
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.dist.pi.size(); ++i)
      diff = std::max(diff, std::abs(ref.dist.pi[i] - other.dist.pi[i]));
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("misaligned aggregation input is rejected") {
  QueueParams a{1.0, 1.0, 2, 2, 1};
  QueueParams b{1.0, 1.0, 2, 3, 1};
  StateSpace space_a(a), space_b(b);
  auto dist = erq::solve_stationary(erq::build_generator(a, space_a),
                                    Method::linear);
  CHECK_THROWS_AS(erq::aggregate(dist, space_b), std::invalid_argument);
}

TEST_CASE("output record serialization round-trips") {
  QueueParams p = erq::params_from_rho(0.5, 2, 2, 1.5);
  p.queue_cap = 3;
  erq::OutputRecord rec = erq::run_solve(p, Method::squaring);
  nlohmann::json j = rec;
  auto back = j.get<erq::OutputRecord>();
  CHECK(back.params == rec.params);
  CHECK(back.method == rec.method);
  CHECK(back.num_states == rec.num_states);
  CHECK(back.occupancy == rec.occupancy);  // bit-exact through JSON
  CHECK(back.measures.L == rec.measures.L);
  CHECK(back.measures.Wq == rec.measures.Wq);
  CHECK(back.residual == rec.residual);
  CHECK(back.wall_seconds == rec.wall_seconds);
}
