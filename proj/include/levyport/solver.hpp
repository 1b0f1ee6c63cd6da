#pragma once

#include <optional>
#include <string>

#include "levyport/market.hpp"

namespace levyport {

enum class UtilityKind { Power, Exponential, Log };

struct Preferences {
  UtilityKind kind = UtilityKind::Power;
  double gamma = 2.0;  // power relative risk aversion, > 0 and != 1
  double q = 1.0;      // exponential absolute risk aversion, > 0
  double beta = 0.05;  // time discount rate, > 0

  static Preferences power(double gamma, double beta);
  static Preferences exponential(double q, double beta);
  static Preferences log_utility(double beta);
};

enum class AggregateMode { FiniteN, Asymptotic };

enum class SolveBranch {
  Quadratic,     // no-jump or genuinely quadratic first-order condition
  Cubic,         // gamma = 2 power-law closed form
  ScalarNewton,  // safeguarded scalar root-finding
  VectorNewton,  // damped Newton on the sector aggregates
  FullNewton,    // damped Newton on all n weights
};

const char* branch_name(SolveBranch b);

// Jump-free and jump-hedge funds: the optimum is cash + delta1/gamma + y*delta2.
struct ThreeFunds {
  Vector delta1;  // carries no jump exposure: delta1'J = 0
  Vector delta2;  // unit jump exposure: delta2'J = 1
  double y = 0.0;
};

struct Policy {
  Vector omega;          // risky positions (weights; dollars for exponential)
  double omega0 = 1.0;   // riskless weight 1 - sum(omega)
  Vector omega_bar;      // per-sector average weight, m entries
  Vector omega_perp;     // within-sector part, n entries, blocks sum to zero
  Vector varpi;          // aggregate position per sector, k * omega_bar
  Vector exposure;       // y_l = omega'J_l per jump source
  double K = 0.0;        // consumption constant: C = K X (power), C = beta X (log),
                         // C = r x - log(r K)/q (exponential)
  double k2 = 0.0;       // log utility only: additive value constant
  double objective = 0.0;
  SolveBranch branch = SolveBranch::Quadratic;
  double residual = 0.0;  // max-norm first-order-condition residual
  bool transversality_ok = true;
  std::optional<ThreeFunds> funds;
};

// Jump-free mean-variance weights (1/gamma) Sigma^{-1} R.
Vector solve_merton(const Matrix& sigma, const Vector& excess, double gamma);

// Within-sector weights R_perp / (gamma * per-sector complement eigenvalue).
Vector solve_orthogonal(const OneSectorMarket& mkt, double gamma);
Vector solve_orthogonal(const MultiSectorMarket& mkt, double gamma);

// Curvature c of the aggregate quadratic term: kappa1/n in finite mode, the
// n -> infinity limit v^2 rho otherwise.  Asymptotic mode needs rho > 0.
double aggregate_curvature(const OneSectorMarket& mkt, AggregateMode mode);

// Root of y - a + b * d/dy[jump term](y) = 0 inside the solvency interval.
// gamma = 1 selects the log-utility jump term.  b must be >= 0.
struct ExposureSolve {
  double y = 0.0;
  SolveBranch branch = SolveBranch::Quadratic;
  double residual = 0.0;
};
ExposureSolve solve_exposure(double a, double b, const LevyJumpMeasure& measure,
                             double gamma);

struct ScalarSolve {
  double varpi = 0.0;
  double y = 0.0;
  SolveBranch branch = SolveBranch::Quadratic;
  double residual = 0.0;
};
ScalarSolve solve_bar_one_sector(const OneSectorMarket& mkt, double gamma,
                                 AggregateMode mode);

struct VectorSolve {
  Vector varpi;
  Vector exposure;
  SolveBranch branch = SolveBranch::VectorNewton;
  double residual = 0.0;
};
VectorSolve solve_bar_multisector(const MultiSectorMarket& mkt, double gamma);

// Damped Newton on the full n-dimensional convex objective; the oracle for
// the separated paths.  gamma = 1 selects the log-utility jump term.
Vector solve_full_numeric(const RawMarket& raw, double gamma);

Policy assemble_policy(const OneSectorMarket& mkt, const Preferences& prefs,
                       AggregateMode mode = AggregateMode::FiniteN);
Policy assemble_policy(const MultiSectorMarket& mkt, const Preferences& prefs);

ThreeFunds three_funds(const Matrix& sigma, const Vector& excess, const Vector& J,
                       const LevyJumpMeasure& measure, double gamma);

// Dollar-denominated policy under exponential utility; no solvency wall.
Policy solve_exponential(const RawMarket& raw, const Preferences& prefs);

Policy solve_log(const RawMarket& raw, double beta);

// Power-utility policy on unstructured data via the full numeric path.
Policy solve_raw(const RawMarket& raw, const Preferences& prefs);

}  // namespace levyport
