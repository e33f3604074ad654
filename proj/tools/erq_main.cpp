// erq: exact steady-state analysis of M/E_r/c/K queueing systems.
//
// Subcommands: solve, table, simulate, bench, states.
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "erq/erq.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    std::ofstream f(out_path);
    if (!f) throw UsageError("cannot open output file " + out_path);
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
  }
}

erq::QueueParams resolve_params(int r, int c, int K, std::optional<double> lambda,
                                std::optional<double> rho, double mu) {
  if (lambda && rho)
    throw UsageError("--lambda and --rho are mutually exclusive");
  if (!lambda && !rho)
    throw UsageError("one of --lambda or --rho is required");
  erq::QueueParams p;
  if (lambda) {
    p.arrival_rate = *lambda;
    p.stage_rate = mu;
    p.stages = r;
    p.channels = c;
  } else {
    p = erq::params_from_rho(*rho, c, r, mu);
  }
  p.queue_cap = K;
  p.validate();
  return p;
}

std::string solve_csv(const erq::OutputRecord& rec) {
  std::ostringstream head, row;
  head << "lambda,mu,r,c,K,rho,method,N,L,Lq,W,Wq,p_block,lambda_eff,"
          "residual,iterations,wall_seconds";
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%d,%d,%d,%.17g,%s,%zu,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g,%.17g,%d,%.6g",
                rec.params.arrival_rate, rec.params.stage_rate,
                rec.params.stages, rec.params.channels, rec.params.queue_cap,
                rec.params.rho(), rec.method.c_str(), rec.num_states,
                rec.measures.L, rec.measures.Lq, rec.measures.W,
                rec.measures.Wq, rec.measures.p_block, rec.measures.lambda_eff,
                rec.residual, rec.iterations, rec.wall_seconds);
  row << buf;
  for (std::size_t n = 0; n < rec.occupancy.size(); ++n) {
    head << ",P" << n;
    std::snprintf(buf, sizeof buf, ",%.17g", rec.occupancy[n]);
    row << buf;
  }
  return head.str() + "\n" + row.str() + "\n";
}

int cmd_solve(int r, int c, int K, std::optional<double> lambda,
              std::optional<double> rho, double mu, const std::string& method,
              double delta, bool dump_q, bool check_all,
              const std::string& format, const std::string& out_path) {
  erq::QueueParams params = resolve_params(r, c, K, lambda, rho, mu);
  erq::SolverConfig cfg;
  cfg.delta = delta;
  const erq::Method chosen = erq::method_from_name(method);

  erq::StateSpace space(params);
  erq::GeneratorMatrix Q = erq::build_generator(params, space);
  if (dump_q) {
    std::ostringstream dump;
    Q.write_coordinate(dump);
    std::cout << dump.str();
  }

  const auto t0 = std::chrono::steady_clock::now();
  erq::StationaryDistribution pi = erq::solve_stationary(Q, chosen, cfg);
  double agreement = 0.0;
  if (check_all) {
    for (erq::Method other : {erq::Method::squaring, erq::Method::linear,
                              erq::Method::uniformization}) {
      if (other == chosen) continue;
      erq::StationaryDistribution alt = erq::solve_stationary(Q, other, cfg);
      for (std::size_t i = 0; i < pi.pi.size(); ++i)
        agreement = std::max(agreement, std::abs(pi.pi[i] - alt.pi[i]));
    }
    if (agreement > 1e-10)
      throw erq::SolverError("solver disagreement " +
                             std::to_string(agreement) + " exceeds 1e-10");
  }

  erq::AggregatedDistribution agg = erq::aggregate(pi, space);
  erq::OutputRecord rec;
  rec.params = params;
  rec.method = erq::method_name(chosen);
  rec.num_states = space.size();
  rec.occupancy = agg.p;
  rec.measures = erq::performance_measures(agg, params);
  rec.residual = pi.residual;
  rec.iterations = pi.iterations;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (format == "json") {
    json j = rec;
    if (check_all) j["max_solver_disagreement"] = agreement;
    write_output(j.dump(2), out_path);
  } else {
    write_output(solve_csv(rec), out_path);
  }
  return 0;
}

int cmd_table(int r, int c, std::vector<double> rhos, std::vector<int> Ks,
              double mu, const std::string& method, double delta,
              const std::string& format, const std::string& out_path) {
  erq::TableSpec spec;
  spec.stages = r;
  spec.channels = c;
  spec.stage_rate = mu;
  if (!rhos.empty()) spec.rhos = std::move(rhos);
  if (!Ks.empty()) spec.queue_caps = std::move(Ks);
  spec.method = erq::method_from_name(method);
  spec.config.delta = delta;

  erq::TableResult table = erq::run_table(spec);
  if (format == "json")
    write_output(erq::table_json(table).dump(2), out_path);
  else
    write_output(erq::table_csv(table), out_path);

  if (table.any_failed()) {
    for (const auto& cell : table.cells)
      if (cell.failed)
        std::cerr << "cell K=" << cell.queue_cap << " rho=" << cell.rho
                  << " failed: " << cell.error << "\n";
    return 2;
  }
  return 0;
}

int cmd_simulate(int r, int c, int K, std::optional<double> lambda,
                 std::optional<double> rho, double mu, std::uint64_t seed,
                 double horizon, double warmup, int batches, bool compare,
                 const std::string& method, const std::string& format,
                 const std::string& out_path) {
  erq::SimConfig config;
  config.params = resolve_params(r, c, K, lambda, rho, mu);
  config.seed = seed;
  config.horizon = horizon;
  config.warmup = warmup;
  config.batches = batches;
  erq::SimResult res = erq::simulate(config);

  json j{{"params", config.params},
         {"seed", config.seed},
         {"horizon", config.horizon},
         {"warmup", config.effective_warmup()},
         {"batches", config.batches},
         {"P_hat", res.p_hat},
         {"P_half_width", res.p_half_width},
         {"L_hat", res.L_hat},
         {"L_half_width", res.L_half_width},
         {"events", res.events}};
  if (compare) {
    erq::OutputRecord rec =
        erq::run_solve(config.params, erq::method_from_name(method));
    const bool covered =
        std::abs(rec.measures.L - res.L_hat) <= res.L_half_width;
    j["analytic_L"] = rec.measures.L;
    j["analytic_P"] = rec.occupancy;
    j["L_in_ci"] = covered;
  }

  if (format == "csv") {
    std::ostringstream head, row;
    head << "seed,horizon,L_hat,L_half_width,events";
    row << seed << "," << horizon << "," << res.L_hat << ","
        << res.L_half_width << "," << res.events;
    for (std::size_t n = 0; n < res.p_hat.size(); ++n) {
      head << ",P" << n;
      row << "," << res.p_hat[n];
    }
    write_output(head.str() + "\n" + row.str() + "\n", out_path);
  } else {
    write_output(j.dump(2), out_path);
  }
  return 0;
}

int cmd_bench(double rho, int c, std::vector<int> r_list, std::vector<int> Ks,
              const std::string& method, const std::string& format,
              const std::string& out_path) {
  erq::BenchSpec spec;
  spec.rho = rho;
  spec.channels = c;
  if (!r_list.empty()) spec.stages = std::move(r_list);
  if (!Ks.empty()) spec.queue_caps = std::move(Ks);
  spec.method = erq::method_from_name(method);

  std::vector<erq::BenchCell> cells = erq::run_bench(spec);
  if (format == "json") {
    json arr = json::array();
    for (const auto& cell : cells)
      arr.push_back({{"r", cell.stages},
                     {"K", cell.queue_cap},
                     {"N", cell.num_states},
                     {"seconds", cell.seconds},
                     {"repetitions", cell.repetitions}});
    write_output(arr.dump(2), out_path);
  } else {
    write_output(erq::bench_csv(cells), out_path);
  }
  return 0;
}

int cmd_states(int r, int c, int K, const std::string& format,
               const std::string& out_path) {
  erq::QueueParams params;
  params.stages = r;
  params.channels = c;
  params.queue_cap = K;
  params.validate();
  erq::StateSpace space(params);

  if (format == "json") {
    json arr = json::array();
    for (const auto& s : space.states()) {
      json v = json::array();
      v.push_back(s.queue);
      for (int p : s.phase) v.push_back(p);
      arr.push_back(std::move(v));
    }
    write_output(json{{"N", space.size()}, {"states", arr}}.dump(2), out_path);
  } else {
    std::ostringstream os;
    os << "index,queue";
    for (int i = 1; i <= r; ++i) os << ",phase" << i;
    os << "\n";
    for (std::size_t k = 0; k < space.size(); ++k) {
      os << k << "," << space[k].queue;
      for (int p : space[k].phase) os << "," << p;
      os << "\n";
    }
    write_output(os.str(), out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact steady-state solver for M/E_r/c/K queueing systems"};
  app.require_subcommand(1);

  int r = 1, c = 1, K = 0;
  std::optional<double> lambda, rho_opt;
  double mu = 1.0;
  std::string method = "squaring";
  double delta = 1e-12;
  std::string format;
  std::string out_path;
  bool dump_q = false, check_all = false, compare = false;
  std::uint64_t seed = 1;
  double horizon = 1e6, warmup = -1.0;
  int batches = 20;
  std::vector<double> rho_list;
  std::vector<int> K_list, r_list;
  double bench_rho = 0.9;
  int bench_c = 6;

  auto add_method = [&](CLI::App* cmd) {
    cmd->add_option("--method", method, "squaring|linear|uniform")
        ->check(CLI::IsMember({"squaring", "linear", "uniform"}));
  };

  CLI::App* solve = app.add_subcommand("solve", "solve one instance");
  solve->add_option("--r", r, "Erlang order")->required();
  solve->add_option("--c", c, "service channels")->required();
  solve->add_option("--K", K, "maximum queue length")->required();
  solve->add_option("--lambda", lambda, "arrival rate");
  solve->add_option("--rho", rho_opt, "offered load per channel");
  solve->add_option("--mu", mu, "stage rate (default 1)");
  add_method(solve);
  solve->add_option("--delta", delta, "convergence threshold");
  solve->add_flag("--dump-q", dump_q, "print the generator in coordinate form");
  solve->add_flag("--check-all", check_all, "run all three solvers and compare");
  solve->add_option("--format", format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  solve->add_option("--out", out_path, "write output to file");

  CLI::App* table = app.add_subcommand("table", "mean system size over a grid");
  table->add_option("--r", r, "Erlang order")->required();
  table->add_option("--c", c, "service channels")->required();
  table->add_option("--rho", rho_list, "rho values")->delimiter(',');
  table->add_option("--K", K_list, "queue capacities")->delimiter(',');
  table->add_option("--mu", mu, "stage rate (default 1)");
  add_method(table);
  table->add_option("--delta", delta, "convergence threshold");
  table->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"json", "csv"}));
  table->add_option("--out", out_path, "write output to file");

  CLI::App* simulate = app.add_subcommand("simulate", "discrete-event simulation");
  simulate->add_option("--r", r, "Erlang order")->required();
  simulate->add_option("--c", c, "service channels")->required();
  simulate->add_option("--K", K, "maximum queue length")->required();
  simulate->add_option("--lambda", lambda, "arrival rate");
  simulate->add_option("--rho", rho_opt, "offered load per channel");
  simulate->add_option("--mu", mu, "stage rate (default 1)");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--horizon", horizon, "measured simulated time");
  simulate->add_option("--warmup", warmup, "discarded time (default horizon/10)");
  simulate->add_option("--batches", batches, "batches for the CI");
  simulate->add_flag("--compare", compare, "also solve analytically");
  add_method(simulate);
  simulate->add_option("--format", format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  simulate->add_option("--out", out_path, "write output to file");

  CLI::App* bench = app.add_subcommand("bench", "runtime sweep over r and K");
  bench->add_option("--rho", bench_rho, "offered load (default 0.9)");
  bench->add_option("--c", bench_c, "service channels (default 6)");
  bench->add_option("--r", r_list, "Erlang orders (default 2,3,4)")
      ->delimiter(',');
  bench->add_option("--K", K_list, "queue capacities (default 1,3,6,8,10)")
      ->delimiter(',');
  add_method(bench);
  bench->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"json", "csv"}));
  bench->add_option("--out", out_path, "write output to file");

  CLI::App* states = app.add_subcommand("states", "enumerate the state space");
  states->add_option("--r", r, "Erlang order")->required();
  states->add_option("--c", c, "service channels")->required();
  states->add_option("--K", K, "maximum queue length")->required();
  states->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"json", "csv"}));
  states->add_option("--out", out_path, "write output to file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) {
      if (format.empty()) format = "json";
      return cmd_solve(r, c, K, lambda, rho_opt, mu, method, delta, dump_q,
                       check_all, format, out_path);
    }
    if (table->parsed()) {
      if (format.empty()) format = "csv";
      return cmd_table(r, c, rho_list, K_list, mu, method, delta, format,
                       out_path);
    }
    if (simulate->parsed()) {
      if (format.empty()) format = "json";
      return cmd_simulate(r, c, K, lambda, rho_opt, mu, seed, horizon, warmup,
                          batches, compare, method, format, out_path);
    }
    if (bench->parsed()) {
      if (format.empty()) format = "csv";
      return cmd_bench(bench_rho, bench_c, r_list, K_list, method, format,
                       out_path);
    }
    if (states->parsed()) {
      if (format.empty()) format = "csv";
      return cmd_states(r, c, K, format, out_path);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::overflow_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const erq::SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
