#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <vector>

#include "erq/record.hpp"

namespace erq {

/// Grid of mean-system-size values over (K, rho), the layout used for the
/// reference tables: one row per queue capacity, one column per load.
struct TableSpec {
  int stages = 2;
  int channels = 4;
  double stage_rate = 1.0;
  std::vector<double> rhos = {0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99};
  std::vector<int> queue_caps = {1, 3, 6, 8, 10};
  Method method = Method::squaring;
  SolverConfig config;
};

struct TableCell {
  int queue_cap = 0;
  double rho = 0.0;
  bool failed = false;
  std::string error;
  OutputRecord record;
};

struct TableResult {
  TableSpec spec;
  std::vector<TableCell> cells;  ///< row-major: queue_caps x rhos

  const TableCell& at(std::size_t k_idx, std::size_t rho_idx) const {
    return cells[k_idx * spec.rhos.size() + rho_idx];
  }
  bool any_failed() const {
    for (const auto& c : cells)
      if (c.failed) return true;
    return false;
  }
};

/// Evaluates every cell; independent cells may run on several threads, the
/// output order is fixed by the grid regardless of scheduling.
inline TableResult run_table(const TableSpec& spec, unsigned threads = 0) {
  TableResult result;
  result.spec = spec;
  const std::size_t ncells = spec.queue_caps.size() * spec.rhos.size();
  result.cells.resize(ncells);

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor.fetch_add(1); i < ncells;
         i = cursor.fetch_add(1)) {
      TableCell& cell = result.cells[i];
      cell.queue_cap = spec.queue_caps[i / spec.rhos.size()];
      cell.rho = spec.rhos[i % spec.rhos.size()];
      try {
        QueueParams params = params_from_rho(cell.rho, spec.channels,
                                             spec.stages, spec.stage_rate);
        params.queue_cap = cell.queue_cap;
        cell.record = run_solve(params, spec.method, spec.config);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
    }
  };

  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || ncells <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(threads, ncells); ++t)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

/// CSV in the reference layout: header row of rho values, one row per K,
/// cells rounded to three decimals. Failed cells carry an ERR marker.
inline std::string table_csv(const TableResult& table) {
  std::string out = "K";
  char buf[64];
  for (double rho : table.spec.rhos) {
    std::snprintf(buf, sizeof buf, ",%g", rho);
    out += buf;
  }
  out += "\n";
  for (std::size_t ki = 0; ki < table.spec.queue_caps.size(); ++ki) {
    out += std::to_string(table.spec.queue_caps[ki]);
    for (std::size_t ri = 0; ri < table.spec.rhos.size(); ++ri) {
      const TableCell& cell = table.at(ki, ri);
      if (cell.failed) {
        out += ",ERR";
      } else {
        std::snprintf(buf, sizeof buf, ",%.3f", cell.record.measures.L);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::json table_json(const TableResult& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : table.cells) {
    nlohmann::json j{{"K", cell.queue_cap}, {"rho", cell.rho}};
    if (cell.failed)
      j["error"] = cell.error;
    else
      j["record"] = cell.record;
    cells.push_back(std::move(j));
  }
  return {{"r", table.spec.stages},
          {"c", table.spec.channels},
          {"mu", table.spec.stage_rate},
          {"method", method_name(table.spec.method)},
          {"cells", cells}};
}

/// One cell of the runtime sweep: state count and measured solve time.
struct BenchCell {
  int stages = 0;
  int queue_cap = 0;
  std::size_t num_states = 0;
  double seconds = 0.0;  ///< mean wall time per solve
  int repetitions = 0;
};

struct BenchSpec {
  double rho = 0.9;
  int channels = 6;
  std::vector<int> stages = {2, 3, 4};
  std::vector<int> queue_caps = {1, 3, 6, 8, 10};
  double stage_rate = 1.0;
  Method method = Method::squaring;
  SolverConfig config;
  double min_sample_seconds = 0.05;  ///< repeat fast cells up to this budget
};

/// Times the full solve per cell. Small instances finish in microseconds, so
/// each cell is repeated until the sample is long enough to average reliably.
inline std::vector<BenchCell> run_bench(const BenchSpec& spec) {
  std::vector<BenchCell> cells;
  for (int r : spec.stages) {
    for (int K : spec.queue_caps) {
      QueueParams params =
          params_from_rho(spec.rho, spec.channels, r, spec.stage_rate);
      params.queue_cap = K;
      BenchCell cell;
      cell.stages = r;
      cell.queue_cap = K;

      double elapsed = 0.0;
      int reps = 0;
      do {
        const auto t0 = std::chrono::steady_clock::now();
        OutputRecord rec = run_solve(params, spec.method, spec.config);
        elapsed += std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
        ++reps;
        cell.num_states = rec.num_states;
      } while (elapsed < spec.min_sample_seconds && reps < 1000);
      cell.seconds = elapsed / reps;
      cell.repetitions = reps;
      cells.push_back(cell);
    }
  }
  return cells;
}

inline std::string bench_csv(const std::vector<BenchCell>& cells) {
  std::string out = "r,K,N,seconds,repetitions\n";
  char buf[96];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%d,%d,%zu,%.6g,%d\n", c.stages,
                  c.queue_cap, c.num_states, c.seconds, c.repetitions);
    out += buf;
  }
  return out;
}

}  // namespace erq
