#pragma once

#include <cstdint>
#include <vector>

#include "levyport/solver.hpp"

namespace levyport {

// Monte Carlo verification of constant-policy wealth dynamics. Wealth starts
// at 1 and follows exact geometric Brownian motion between jump arrivals;
// each arrival of source l multiplies wealth by 1 + (omega'J_l) z. Draws are
// generated per path from a counter-derived stream, so results are bitwise
// reproducible for a given seed and independent of thread count.
struct SimConfig {
  long paths = 10000;
  double horizon = 1.0;     // T, in years
  double dt = 1.0 / 252.0;  // observation grid spacing; last step may be short
  double eps = 1e-3;        // power-law small-jump truncation, in (0, 1)
  std::uint64_t seed = 1;
  bool antithetic = false;  // pairs share jump schedules, Gaussians negated
};

struct SimResult {
  long paths = 0;
  // Discounted consumption utility per path, integral of exp(-beta s) U(K X_s)
  // over [0, T] by trapezoid on the grid refined with the exact jump times.
  // Only filled by the value-aware entry points; see has_value.
  bool has_value = false;
  double value_mean = 0.0;
  double value_stderr = 0.0;
  double terminal_mean = 0.0;
  double terminal_stderr = 0.0;
  double log_terminal_mean = 0.0;  // over surviving paths only
  double log_terminal_var = 0.0;
  long total_jumps = 0;
  long bankruptcies = 0;
  std::vector<double> path_terminal;
  std::vector<double> path_value;   // empty unless has_value
  std::vector<long> path_jumps;
  std::vector<std::uint8_t> path_bankrupt;  // wealth hit zero or below
};

// Simulates wealth paths under fixed weights omega and consumption C = K X.
// Requires each exposure omega'J_l to lie in the closure of the solvency
// interval; the boundary itself is allowed and produces bankruptcy flags
// (wealth absorbed at zero) rather than an error.
SimResult simulate_wealth(const RawMarket& market, const Policy& policy,
                          double consumption, const SimConfig& config);
SimResult simulate_wealth_serial(const RawMarket& market, const Policy& policy,
                                 double consumption, const SimConfig& config);

// Monte Carlo estimate of the finite-horizon value of a constant policy under
// power utility, against the closed-form benchmark
//   L(1)(1 - exp(-K T)),  L(x) = K^{-gamma} x^{1-gamma} / (1 - gamma),
// which is exact whenever policy.K is the stationarity-consistent consumption
// rate for policy.omega. Throws TransversalityViolated when policy.K <= 0.
struct ValueEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double benchmark = 0.0;
  SimResult detail;
};
ValueEstimate estimate_value(const RawMarket& market, const Policy& policy,
                             const Preferences& prefs, const SimConfig& config);

// Compares the candidate policy against nearby constant policies under common
// random numbers. Each probe direction has norm perturbation * |omega|, and
// the probe's consumption rate is re-derived from its own weights, so every
// probe is the best constant policy with those weights. A probe is dominated
// when the paired value difference satisfies base >= probe - 2 stderr.
struct OptimalityRow {
  Vector direction;
  double perturbed_value = 0.0;
  double perturbed_K = 0.0;
  double delta = 0.0;         // base minus perturbed, paired mean
  double delta_stderr = 0.0;  // stderr of the paired differences
  bool dominated = false;
};
struct OptimalityReport {
  double base_value = 0.0;
  double base_stderr = 0.0;
  double benchmark = 0.0;
  std::vector<OptimalityRow> rows;
  double dominance_fraction = 0.0;
};
OptimalityReport optimality_check(const RawMarket& market,
                                  const Preferences& prefs,
                                  const Policy& optimal, double perturbation,
                                  int directions, const SimConfig& config);
// Same comparison with caller-chosen probe directions (used absolute, not
// rescaled), e.g. to probe along a specific diversification direction.
OptimalityReport optimality_check(const RawMarket& market,
                                  const Preferences& prefs,
                                  const Policy& optimal,
                                  const std::vector<Vector>& directions,
                                  const SimConfig& config);

// Large-book scaling diagnostics for the one-sector family with alternating
// +/- dispersion idiosyncratic excess returns. Per book size n the table
// reports the optimal excess drift omega'R, variance omega'Sigma omega, and
// jump exposure y = omega'J, all from the closed-form optimum. The flags
// record whether drift and variance grow linearly (each n >= 100 within 20%
// of the fitted per-asset slope) and whether |y_n| stays within 110% of the
// asymptotic exposure.
struct ScalingFamily {
  OneSectorMarket base;      // n is ignored; shape parameters are reused
  double dispersion = 0.0;   // magnitude of the alternating idiosyncratic excess
  std::vector<int> sizes;
};
struct ScalingRow {
  int n = 0;
  double drift = 0.0;
  double variance = 0.0;
  double exposure = 0.0;
};
struct ScalingReport {
  std::vector<ScalingRow> rows;
  double exposure_limit = 0.0;  // jump loading times the asymptotic weight
  double drift_slope = 0.0;     // fitted drift per asset over sizes >= 100
  double variance_slope = 0.0;
  bool drift_linear = false;
  bool variance_linear = false;
  bool exposure_bounded = false;
};
ScalingReport scaling_check(const ScalingFamily& family,
                            const Preferences& prefs);

}  // namespace levyport
