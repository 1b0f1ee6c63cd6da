#pragma once

#include <string>
#include <vector>

#include <levyport/market.hpp>
#include <levyport/solver.hpp>

namespace levyport {

// Intensity at which the optimal aggregate weight changes sign: the holder
// stays long while jumps are rarer than this and goes short beyond it.  The
// value is quoted in the measure's own intensity parameter, so plugging it
// back into the measure puts the solved weight at zero.  Requires a positive
// mean excess return (NonPositiveExcessReturn otherwise: with excess <= 0 the
// weight never turns positive), a negative jump loading, and one-sided
// positive jump support (OutOfRegime otherwise).
double critical_lambda(double excess, double jump_loading,
                       const LevyJumpMeasure& measure);

enum class AsymptoticRegime {
  LambdaToZero,
  LambdaToInfinity,
  SmallLambdaExpansion,
};

struct AsymptoticBehavior {
  AsymptoticRegime regime = AsymptoticRegime::LambdaToZero;
  // LambdaToZero: the limiting weight.  LambdaToInfinity: the coefficient
  // multiplying sqrt(lambda) in the divergence rate.  SmallLambdaExpansion:
  // the first-order-in-lambda approximation at the measure's own intensity.
  double value = 0.0;
  // Set when the position cap 1/|jump_loading| binds the zero-intensity
  // limit instead of the diffusive weight, producing a kinked demand curve.
  bool solvency_kink = false;
};

// Closed-form behavior of the aggregate weight as jump intensity degenerates.
// Calibrated to gamma = 2 with one-sided positive power-law jumps on a
// negative loading in the large-book regime; OutOfRegime otherwise.
AsymptoticBehavior asymptotic_behavior(const OneSectorMarket& market,
                                       double gamma, AsymptoticRegime regime);

enum class SensitivityTarget { Lambda, JumpSize, Gamma };

// Derivative of the optimal aggregate weight with respect to one parameter.
// Lambda and JumpSize use the gamma = 2 closed forms (one-sided positive
// power-law jumps required; OutOfRegime otherwise).  Gamma differentiates the
// first-order condition implicitly and works for any admissible measure and
// risk aversion.  Signs: the weight falls in intensity and rises in loading
// when the loading is negative, and |weight| always shrinks as risk aversion
// grows, so the Gamma derivative has the sign opposite to the weight itself.
double sensitivity(const OneSectorMarket& market, double gamma,
                   AggregateMode mode, SensitivityTarget wrt);

struct LargeNRow {
  int n = 0;
  double varpi = 0.0;
  double gap = 0.0;  // |varpi - varpi_infinity|
};

struct LargeNLimit {
  double varpi_infinity = 0.0;
  std::vector<LargeNRow> table;
};

// Aggregate weight in the large-book limit together with a finite-n
// convergence table (geometric grid of book sizes; gaps shrink like 1/n).
// The table rebuilds the market at each n with a zero orthogonal excess leg,
// which does not affect the aggregate weight.  Requires wealth-fraction
// preferences (power or log); NonCoercive propagates from the limit solve.
LargeNLimit large_n_limit(const OneSectorMarket& market,
                          const Preferences& prefs,
                          std::vector<int> grid = {});

// Parameters a sweep may vary, in the canonical order used for output
// columns.  Lambda rescales the measure's total intensity preserving its
// shape; LambdaPos and LambdaNeg address the two sides of a power-law
// measure directly.
enum class SweepParameter {
  Lambda,
  LambdaPos,
  LambdaNeg,
  JumpSize,
  Gamma,
  Rho,
  Volatility,
  ExcessReturn,
  AssetCount,
};

const char* sweep_parameter_name(SweepParameter p);

struct SweepAxis {
  SweepParameter parameter = SweepParameter::Lambda;
  std::vector<double> values;
};

struct SweepSpec {
  OneSectorMarket base;
  Preferences prefs = Preferences::power(2.0, 0.05);
  AggregateMode mode = AggregateMode::FiniteN;
  std::vector<SweepAxis> axes;
};

struct SweepRow {
  std::vector<double> point;  // one coordinate per axis, canonical order
  double varpi = 0.0;
  double exposure = 0.0;
  double objective = 0.0;
  double K = 0.0;
  std::string status = "ok";  // or the error code name for this point
};

struct SweepResult {
  std::vector<SweepAxis> axes;  // canonical order, as used by the rows
  std::vector<SweepRow> rows;
};

// Solves the cartesian product of the axis grids, one independent policy per
// row with no warm starting.  Axes are reordered canonically; rows run
// row-major with the last axis fastest.  Structural problems (duplicate or
// empty axes, intensity axes against an incompatible measure kind, a Gamma
// axis without power preferences, fractional asset counts) raise
// ConfigInvalid up front; value-level failures at individual points are
// recorded in that row's status field and leave its numbers NaN.  Output is
// deterministic and identical between the parallel and serial versions.
SweepResult sweep(const SweepSpec& spec);
SweepResult sweep_serial(const SweepSpec& spec);

}  // namespace levyport
