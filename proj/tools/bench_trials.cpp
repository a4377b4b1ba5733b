// Benchmark: OpenMP trial loop against the serial reference path on the
// 10-state benchmark scenario, asserting that both produce identical reports.

#include <chrono>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "obsrec/simulate.hpp"

using namespace obsrec;

namespace {

double time_run(const Scenario& sc, int threads, SimulationReport* out) {
  auto t0 = std::chrono::steady_clock::now();
  *out = run(sc, threads);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool identical(const SimulationReport& a, const SimulationReport& b) {
  if (a.sensor_ids != b.sensor_ids) return false;
  for (const auto& [id, series] : a.mse) {
    const auto& other = b.mse.at(id);
    for (size_t k = 0; k < series.size(); ++k) {
      bool both_nan = std::isnan(series[k]) && std::isnan(other[k]);
      if (!both_nan && series[k] != other[k]) return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int trials = argc > 1 ? std::atoi(argv[1]) : 400;
  Scenario sc;
  sc.pattern = make_benchmark_pattern(11);
  sc.trials = trials;
  sc.horizon = 200;
  sc.seed = 11;

  SimulationReport serial, parallel;
  double ts = time_run(sc, 1, &serial);
#ifdef _OPENMP
  int workers = omp_get_max_threads();
#else
  int workers = 1;
#endif
  double tp = time_run(sc, 0, &parallel);

  std::printf("trials=%d horizon=%d\n", sc.trials, sc.horizon);
  std::printf("serial      : %8.3f s\n", ts);
  std::printf("omp (%2d thr): %8.3f s  speedup %.2fx\n", workers, tp, ts / tp);
  if (!identical(serial, parallel)) {
    std::printf("MISMATCH: parallel report differs from serial reference\n");
    return 1;
  }
  std::printf("reports identical: yes\n");
  return 0;
}
