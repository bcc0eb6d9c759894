// Timing comparison of the OpenMP kernels against their serial reference
// paths on a fixed workload. Not part of the test suite.

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pireg/examples.hpp"
#include "pireg/global_iss.hpp"
#include "pireg/local_stability.hpp"
#include "pireg/oracle.hpp"

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s %10.1f ms %10.1f ms %8.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main() {
  using namespace pireg;
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  const ScenarioFile ex41 = example_41();
  const ScenarioFile ex42 = example_42();

  {
    const int n = 200000;
    const double s = time_ms([&] {
      verify_sector_conditions_serial(ex41.outflow, ex41.scenario, ex41.gains, *ex41.h2, n);
    });
    const double p = time_ms([&] {
      verify_sector_conditions(ex41.outflow, ex41.scenario, ex41.gains, *ex41.h2, n);
    });
    report("sector_verification", s, p);
  }
  {
    const GridSpec grid{0.0, 6.0, 0.0, 3.0, 150, 150};
    const double s = time_ms([&] {
      brute_force_roa_serial(ex42.scenario, ex42.outflow, ex42.gains, grid, 20000, 1e-6);
    });
    const double p = time_ms([&] {
      brute_force_roa(ex42.scenario, ex42.outflow, ex42.gains, grid, 20000, 1e-6);
    });
    report("brute_force_roa", s, p);
  }
  {
    const double s = time_ms([&] { gain_triangle_map_serial(0.0, -3.5, 1.5, -0.5, 4.5, 801, 801); });
    const double p = time_ms([&] { gain_triangle_map(0.0, -3.5, 1.5, -0.5, 4.5, 801, 801); });
    report("gain_triangle_map", s, p);
  }
  {
    const RoaCertificate cert =
        roa_certificate(ex42.outflow, ex42.scenario, ex42.gains, RoaMethod::gain_matched);
    const double s = time_ms([&] {
      lyapunov_decrease_scan(cert, ex42.scenario, ex42.outflow, ex42.gains, 100000, 7,
                             Exec::serial);
    });
    const double p = time_ms([&] {
      lyapunov_decrease_scan(cert, ex42.scenario, ex42.outflow, ex42.gains, 100000, 7,
                             Exec::parallel);
    });
    report("lyapunov_decrease_scan", s, p);
  }
  return 0;
}
