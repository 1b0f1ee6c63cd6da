#pragma once

#include <utility>
#include <vector>

#include "levyport/errors.hpp"

namespace levyport {

// Jump amplitude measures with finite variation.  Intensities are part of the
// measure: every functional below returns a value already weighted by the
// measure's own rates, so callers never multiply by a separate intensity.
//
// Supported kinds:
//   PowerLaw   density lambda_pos dz/z on (0,1] and -lambda_neg dz/z on [-1,0)
//   Uniform    density lambda dz on [lo,hi]
//   PointMass  atom of rate lambda at z
//   Discrete   compound Poisson, rate lambda, amplitude distribution {(z_i,p_i)}
enum class JumpKind { PowerLaw, Uniform, PointMass, Discrete };

struct JumpAtom {
  double z;
  double p;
};

struct LevyJumpMeasure {
  JumpKind kind = JumpKind::PointMass;
  double lambda_pos = 0.0;  // PowerLaw
  double lambda_neg = 0.0;  // PowerLaw
  double lambda = 0.0;      // Uniform, PointMass, Discrete
  double lo = 0.0;          // Uniform
  double hi = 0.0;          // Uniform
  double z = 0.0;           // PointMass
  std::vector<JumpAtom> atoms;  // Discrete

  static LevyJumpMeasure asymmetric_power_law(double lambda_pos, double lambda_neg);
  static LevyJumpMeasure uniform_density(double lambda, double lo, double hi);
  static LevyJumpMeasure point_mass(double lambda, double z);
  static LevyJumpMeasure discrete_compound(double lambda, std::vector<JumpAtom> atoms);

  double total_intensity() const;
  bool active() const { return total_intensity() > 0.0; }

  // Support bounds over the parts that carry mass; 0 for an inactive measure.
  double z_inf() const;
  double z_sup() const;

  // Open interval of exposures y with 1 + y z > 0 everywhere on the support.
  // Inactive measures are unconstrained.
  std::pair<double, double> solvency_interval() const;
  bool solvent(double y) const;
};

// CRRA jump penalty psi(y) = -1/(1-gamma) Integral[(1+yz)^(1-gamma) - 1] nu(dz).
// psi(0) = 0, psi is convex, and psi -> +infinity at a solvency boundary whose
// endpoint carries enough mass.  gamma = 1 is rejected; use psi_log.
double psi(const LevyJumpMeasure& m, double gamma, double y);

// psi'(y) = -Integral z (1+yz)^(-gamma) nu(dz); strictly increasing in y.
double psi_prime(const LevyJumpMeasure& m, double gamma, double y);

// psi''(y) = gamma Integral z^2 (1+yz)^(-gamma-1) nu(dz) >= 0.
double psi_second(const LevyJumpMeasure& m, double gamma, double y);

// d(psi')/d(gamma) = Integral z log(1+yz) (1+yz)^(-gamma) nu(dz).
double psi_prime_dgamma(const LevyJumpMeasure& m, double gamma, double y);

// Log-utility penalty -Integral log(1+yz) nu(dz) and its y-derivatives.
double psi_log(const LevyJumpMeasure& m, double y);
double psi_log_prime(const LevyJumpMeasure& m, double y);
double psi_log_second(const LevyJumpMeasure& m, double y);

// CARA penalty Integral [exp(-rq y z) - 1] nu(dz) and its y-derivatives.
// y is a dollar exposure; no solvency wall applies.
double psi_exponential(const LevyJumpMeasure& m, double rq, double y);
double psi_exponential_prime(const LevyJumpMeasure& m, double rq, double y);
double psi_exponential_second(const LevyJumpMeasure& m, double rq, double y);

// Integral of z over the positive part of the support, intensity included.
double mean_positive_jump(const LevyJumpMeasure& m);

// Total jump arrival rate seen by the simulator.  PowerLaw masses are
// truncated to amplitudes |z| >= eps; other kinds ignore eps.
double arrival_rate(const LevyJumpMeasure& m, double eps);

// Draws one jump amplitude from the (eps-truncated) normalized measure given
// two independent uniforms on [0,1).
double sample_amplitude(const LevyJumpMeasure& m, double u1, double u2, double eps);

}  // namespace levyport
