#pragma once

#include <chrono>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "erq/measures.hpp"
#include "erq/solver.hpp"

namespace erq {

/// Result of one end-to-end solve, shaped for lossless serialization.
struct OutputRecord {
  QueueParams params;
  std::string method;
  std::size_t num_states = 0;
  std::vector<double> occupancy;  ///< P_0 .. P_{c+K}
  PerformanceMeasures measures;
  double residual = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
};

/// Enumerate, build Q, solve, aggregate, derive measures.
inline OutputRecord run_solve(const QueueParams& params, Method method,
                              const SolverConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  StateSpace space(params);
  GeneratorMatrix Q = build_generator(params, space);
  StationaryDistribution pi = solve_stationary(Q, method, cfg);
  AggregatedDistribution agg = aggregate(pi, space);
  OutputRecord rec;
  rec.params = params;
  rec.method = method_name(method);
  rec.num_states = space.size();
  rec.occupancy = agg.p;
  rec.measures = performance_measures(agg, params);
  rec.residual = pi.residual;
  rec.iterations = pi.iterations;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

inline void to_json(nlohmann::json& j, const QueueParams& p) {
  j = {{"lambda", p.arrival_rate}, {"mu", p.stage_rate}, {"r", p.stages},
       {"c", p.channels},          {"K", p.queue_cap},   {"rho", p.rho()}};
}

inline void from_json(const nlohmann::json& j, QueueParams& p) {
  j.at("lambda").get_to(p.arrival_rate);
  j.at("mu").get_to(p.stage_rate);
  j.at("r").get_to(p.stages);
  j.at("c").get_to(p.channels);
  j.at("K").get_to(p.queue_cap);
}

inline void to_json(nlohmann::json& j, const PerformanceMeasures& m) {
  j = {{"L", m.L},       {"Lq", m.Lq},           {"W", m.W},
       {"Wq", m.Wq},     {"p_block", m.p_block}, {"lambda_eff", m.lambda_eff},
       {"rho", m.rho}};
}

inline void from_json(const nlohmann::json& j, PerformanceMeasures& m) {
  j.at("L").get_to(m.L);
  j.at("Lq").get_to(m.Lq);
  j.at("W").get_to(m.W);
  j.at("Wq").get_to(m.Wq);
  j.at("p_block").get_to(m.p_block);
  j.at("lambda_eff").get_to(m.lambda_eff);
  j.at("rho").get_to(m.rho);
}

inline void to_json(nlohmann::json& j, const OutputRecord& r) {
  j = {{"params", r.params},       {"method", r.method},
       {"N", r.num_states},        {"P", r.occupancy},
       {"measures", r.measures},   {"residual", r.residual},
       {"iterations", r.iterations}, {"wall_seconds", r.wall_seconds}};
}

inline void from_json(const nlohmann::json& j, OutputRecord& r) {
  j.at("params").get_to(r.params);
  j.at("method").get_to(r.method);
  j.at("N").get_to(r.num_states);
  j.at("P").get_to(r.occupancy);
  j.at("measures").get_to(r.measures);
  j.at("residual").get_to(r.residual);
  j.at("iterations").get_to(r.iterations);
  j.at("wall_seconds").get_to(r.wall_seconds);
}

}  // namespace erq
