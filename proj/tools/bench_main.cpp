// Times the data-parallel kernels against their serial references on
// representative workloads (Monte Carlo wealth paths, parameter sweep rows)
// and verifies that both produce bitwise-identical results.

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "levyport/sim.hpp"
#include "levyport/solver.hpp"
#include "levyport/statics.hpp"

namespace {

using namespace levyport;

template <typename Fn>
double time_best(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

OneSectorMarket bench_market() {
  return OneSectorMarket::make(4, 0.2, 0.3, 0.05, Vector::Zero(4), -0.3, 0.02,
                               LevyJumpMeasure::asymmetric_power_law(0.4, 0.3));
}

int bench_paths(long paths, int repeats) {
  const OneSectorMarket mkt = bench_market();
  const Preferences prefs = Preferences::power(2.0, 0.2);
  const Policy pol = assemble_policy(mkt, prefs);
  const RawMarket raw = to_raw(mkt);

  SimConfig cfg;
  cfg.paths = paths;
  cfg.horizon = 2.0;
  cfg.dt = 1.0 / 52.0;
  cfg.seed = 2024;
  cfg.antithetic = true;

  SimResult par, ser;
  const double t_par = time_best(
      repeats, [&] { par = simulate_wealth(raw, pol, pol.K, cfg); });
  const double t_ser = time_best(
      repeats, [&] { ser = simulate_wealth_serial(raw, pol, pol.K, cfg); });

  if (par.terminal_mean != ser.terminal_mean ||
      par.terminal_stderr != ser.terminal_stderr ||
      par.total_jumps != ser.total_jumps) {
    std::fprintf(stderr, "FAIL: parallel and serial path results differ\n");
    return 1;
  }
  std::printf("monte-carlo paths   %8ld paths   serial %8.3f s   parallel %8.3f s   speedup %.2fx\n",
              paths, t_ser, t_par, t_ser / t_par);
  return 0;
}

int bench_sweep(int lambda_points, int jump_points, int repeats) {
  SweepSpec spec;
  spec.base = bench_market();
  spec.prefs = Preferences::power(2.0, 0.2);
  SweepAxis lam{SweepParameter::Lambda, {}};
  for (int i = 0; i < lambda_points; ++i)
    lam.values.push_back(0.05 + 1.95 * i / (lambda_points - 1.0));
  SweepAxis jmp{SweepParameter::JumpSize, {}};
  for (int j = 0; j < jump_points; ++j)
    jmp.values.push_back(-0.9 + 0.85 * j / (jump_points - 1.0));
  spec.axes = {lam, jmp};

  SweepResult par, ser;
  const double t_par = time_best(repeats, [&] { par = sweep(spec); });
  const double t_ser = time_best(repeats, [&] { ser = sweep_serial(spec); });

  if (par.rows.size() != ser.rows.size()) {
    std::fprintf(stderr, "FAIL: row counts differ\n");
    return 1;
  }
  for (std::size_t i = 0; i < par.rows.size(); ++i)
    if (par.rows[i].varpi != ser.rows[i].varpi ||
        par.rows[i].objective != ser.rows[i].objective) {
      std::fprintf(stderr, "FAIL: sweep row %zu differs\n", i);
      return 1;
    }
  std::printf("parameter sweep     %8zu rows    serial %8.3f s   parallel %8.3f s   speedup %.2fx\n",
              par.rows.size(), t_ser, t_par, t_ser / t_par);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  long paths = 40000;
  int lambda_points = 60, jump_points = 25, repeats = 3;
  CLI::App app{"serial vs parallel kernel benchmark"};
  app.add_option("--paths", paths, "Monte Carlo path count");
  app.add_option("--lambda-points", lambda_points, "sweep grid: intensity axis");
  app.add_option("--jump-points", jump_points, "sweep grid: jump-size axis");
  app.add_option("--repeats", repeats, "timing repetitions (best is kept)");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: not enabled\n");
#endif
  int rc = bench_paths(paths, repeats);
  if (rc == 0) rc = bench_sweep(lambda_points, jump_points, repeats);
  return rc;
}
