#include "levyport/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "levyport/errors.hpp"

namespace levyport {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw DomainError(code, msg);
}

// gamma = 1 selects the log-utility jump term throughout the solver.
double jt(const LevyJumpMeasure& m, double g, double y) {
  return g == 1.0 ? psi_log(m, y) : psi(m, g, y);
}
double jtd(const LevyJumpMeasure& m, double g, double y) {
  return g == 1.0 ? psi_log_prime(m, y) : psi_prime(m, g, y);
}
double jtdd(const LevyJumpMeasure& m, double g, double y) {
  return g == 1.0 ? psi_log_second(m, y) : psi_second(m, g, y);
}

LevyJumpMeasure scaled(LevyJumpMeasure m, double factor) {
  m.lambda_pos *= factor;
  m.lambda_neg *= factor;
  m.lambda *= factor;
  return m;
}

bool same_measure(const LevyJumpMeasure& a, const LevyJumpMeasure& b) {
  if (a.kind != b.kind) return false;
  if (a.lambda_pos != b.lambda_pos || a.lambda_neg != b.lambda_neg ||
      a.lambda != b.lambda || a.lo != b.lo || a.hi != b.hi || a.z != b.z)
    return false;
  if (a.atoms.size() != b.atoms.size()) return false;
  for (size_t i = 0; i < a.atoms.size(); ++i)
    if (a.atoms[i].z != b.atoms[i].z || a.atoms[i].p != b.atoms[i].p) return false;
  return true;
}

// Solvency interval pulled inward so the jump term stays evaluable.
std::pair<double, double> shrunk_interval(const LevyJumpMeasure& m) {
  auto [lo, hi] = m.solvency_interval();
  if (std::isfinite(lo)) lo += 1e-12 * std::max(1.0, std::abs(lo));
  if (std::isfinite(hi)) hi -= 1e-12 * std::max(1.0, std::abs(hi));
  return {lo, hi};
}

void check_gamma(double g) {
  if (!(g > 0.0)) fail(ErrorCode::InvalidGamma, "risk aversion must be positive");
}

// Interior root of the cubic y^3 + c2 y^2 + c1 y + c0 produced by clearing
// denominators in the gamma = 2 two-sided power-law condition.  The two
// spurious roots sit outside [-1, 1].
double cubic_interior_root(double a, double b, double lp, double ln) {
  const double c2 = -a;
  const double c1 = -(1.0 + b * (lp + ln));
  const double c0 = a + b * (lp - ln);
  const double p = c1 - c2 * c2 / 3.0;
  const double q = c0 - c1 * c2 / 3.0 + 2.0 * c2 * c2 * c2 / 27.0;
  // p <= -1 here, so the trigonometric form always applies
  const double mp = std::sqrt(-p / 3.0);
  const double arg = std::clamp(3.0 * q / (2.0 * p * mp), -1.0, 1.0);
  const double phi = std::acos(arg) / 3.0;
  double best = std::numeric_limits<double>::quiet_NaN();
  double best_dist = kInf;
  for (int k = 0; k < 3; ++k) {
    const double y = 2.0 * mp * std::cos(phi - 2.0 * M_PI * k / 3.0) - c2 / 3.0;
    if (y > -1.0 && y < 1.0) {
      const double dist = std::abs(y);
      if (dist < best_dist) {
        best = y;
        best_dist = dist;
      }
    }
  }
  if (!std::isfinite(best))
    fail(ErrorCode::NonConvergence, "cubic root selection found no interior root");
  return best;
}

// Interior roots of the one-sided gamma = 2 power-law conditions, written to
// avoid cancellation when the root hugs the solvency wall.
double quadratic_root_positive_side(double a, double b, double lp) {
  const double s = std::sqrt((1.0 + a) * (1.0 + a) + 4.0 * b * lp);
  if (a + 1.0 < 0.0) return -1.0 + 2.0 * b * lp / (s - (a + 1.0));
  return (a - 1.0 + s) / 2.0;
}
double quadratic_root_negative_side(double a, double b, double ln) {
  const double s = std::sqrt((1.0 - a) * (1.0 - a) + 4.0 * b * ln);
  if (1.0 - a < 0.0) return 1.0 - 2.0 * b * ln / (s + (a - 1.0));
  return (a + 1.0 - s) / 2.0;
}

struct ScalarProblem {
  double a;
  double b;
  const LevyJumpMeasure& m;
  double gamma;
  double h(double y) const { return y - a + b * jtd(m, gamma, y); }
  double hp(double y) const { return 1.0 + b * jtdd(m, gamma, y); }
};

// Newton with a bisection safeguard on the strictly increasing h.  Walls give
// the bracket where they exist; open sides are expanded until the sign flips.
double newton_bisection(const ScalarProblem& pr) {
  auto [lo, hi] = shrunk_interval(pr.m);
  double L = lo, H = hi;
  if (!std::isfinite(L)) {
    double step = std::max(1.0, std::abs(pr.a));
    L = std::min(pr.a, std::isfinite(H) ? H - step : pr.a);
    for (int i = 0; i < 200 && pr.h(L) >= 0.0; ++i, step *= 2.0) L -= step;
  }
  if (!std::isfinite(H)) {
    double step = std::max(1.0, std::abs(pr.a));
    H = std::max(pr.a, L + step);
    for (int i = 0; i < 200 && pr.h(H) <= 0.0; ++i, step *= 2.0) H += step;
  }
  double y = std::clamp(pr.a, L + 0.01 * (H - L), H - 0.01 * (H - L));
  double hy = pr.h(y);
  for (int it = 0; it < 200 && hy != 0.0; ++it) {
    if (hy > 0.0) H = y; else L = y;
    double ynew = y - hy / pr.hp(y);
    if (!std::isfinite(ynew) || ynew <= L || ynew >= H) ynew = 0.5 * (L + H);
    if (std::abs(ynew - y) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::abs(y))) {
      y = ynew;
      break;
    }
    y = ynew;
    hy = pr.h(y);
  }
  return y;
}

bool exposures_feasible(const std::vector<LevyJumpMeasure>& ms, const Vector& y) {
  for (size_t l = 0; l < ms.size(); ++l) {
    auto [lo, hi] = shrunk_interval(ms[l]);
    if (!(y(l) > lo && y(l) < hi)) return false;
  }
  return true;
}

struct NewtonFuncs {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
  std::function<bool(const Vector&)> feasible;
};

// Damped Newton with step halving; shared by the sector-aggregate, full, and
// exponential solvers.  Returns with gradient max-norm <= 1e-12 * scale, or
// raises NonConvergence if it cannot reach 1e-10 * scale within the cap.
Vector damped_newton(const NewtonFuncs& fn, Vector x, double scale, int cap) {
  auto newton_step = [&](const Vector& g) {
    Matrix H = fn.hess(x);
    Eigen::LLT<Matrix> llt(H);
    return (llt.info() == Eigen::Success)
               ? Vector(llt.solve(-g))
               : Vector(-g / std::max(1.0, H.cwiseAbs().maxCoeff()));
  };
  double fx = fn.value(x);
  Vector g = fn.grad(x);
  for (int it = 0; it < cap; ++it) {
    const double gnorm = g.cwiseAbs().maxCoeff();
    if (gnorm <= 1e-12 * scale) return x;
    Vector d = newton_step(g);
    // a step below double resolution means the optimum is pinned, even if the
    // gradient looks large through a steep wall curvature
    if (d.cwiseAbs().maxCoeff() <=
        1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff()))
      break;
    const double slope = g.dot(d);
    // near the optimum the predicted decrease drops below what the objective
    // can resolve in doubles; without this allowance the full Newton step gets
    // rejected on rounding noise and the gradient stalls short of tolerance
    const double noise =
        16.0 * std::numeric_limits<double>::epsilon() * (std::abs(fx) + 1.0);
    double t = 1.0;
    bool moved = false;
    Vector cand;
    double fc = 0.0;
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      cand = x + t * d;
      if (!fn.feasible(cand)) continue;
      fc = fn.value(cand);
      if (std::isfinite(fc) && fc <= fx + 1e-4 * t * slope + noise) {
        moved = true;
        break;
      }
    }
    if (!moved) break;  // step underflow: at numerical optimum
    Vector gc = fn.grad(cand);
    // once f cannot resolve progress, insist the gradient shrinks instead
    if (fc >= fx - noise && gc.cwiseAbs().maxCoeff() >= gnorm) break;
    x = cand;
    fx = fc;
    g = gc;
  }
  g = fn.grad(x);
  if (g.cwiseAbs().maxCoeff() > 1e-10 * scale &&
      newton_step(g).cwiseAbs().maxCoeff() >
          1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()))
    fail(ErrorCode::NonConvergence, "damped Newton failed to reach tolerance");
  return x;
}

double grad_scale(const Vector& r) {
  return std::max(1.0, r.cwiseAbs().maxCoeff());
}

}  // namespace

Preferences Preferences::power(double gamma, double beta) {
  check_gamma(gamma);
  if (gamma == 1.0)
    fail(ErrorCode::InvalidGamma,
         "power utility at gamma = 1 is the logarithmic case; use log preferences");
  if (!(beta > 0.0)) fail(ErrorCode::ConfigInvalid, "discount rate must be positive");
  Preferences p;
  p.kind = UtilityKind::Power;
  p.gamma = gamma;
  p.beta = beta;
  return p;
}

Preferences Preferences::exponential(double q, double beta) {
  if (!(q > 0.0)) fail(ErrorCode::ConfigInvalid, "absolute risk aversion must be positive");
  if (!(beta > 0.0)) fail(ErrorCode::ConfigInvalid, "discount rate must be positive");
  Preferences p;
  p.kind = UtilityKind::Exponential;
  p.q = q;
  p.beta = beta;
  return p;
}

Preferences Preferences::log_utility(double beta) {
  if (!(beta > 0.0)) fail(ErrorCode::ConfigInvalid, "discount rate must be positive");
  Preferences p;
  p.kind = UtilityKind::Log;
  p.beta = beta;
  return p;
}

const char* branch_name(SolveBranch b) {
  switch (b) {
    case SolveBranch::Quadratic: return "closed-form quadratic";
    case SolveBranch::Cubic: return "cubic-trigonometric";
    case SolveBranch::ScalarNewton: return "newton-bisection";
    case SolveBranch::VectorNewton: return "newton-vector";
    case SolveBranch::FullNewton: return "newton-full";
  }
  return "unknown";
}

Vector solve_merton(const Matrix& sigma, const Vector& excess, double gamma) {
  check_gamma(gamma);
  if (sigma.rows() != sigma.cols() || sigma.rows() != excess.size())
    fail(ErrorCode::ShapeMismatch, "covariance and return dimensions disagree");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::SingularSigma, "covariance is not positive definite");
  return llt.solve(excess) / gamma;
}

Vector solve_orthogonal(const OneSectorMarket& mkt, double gamma) {
  check_gamma(gamma);
  const double kappa2 = mkt.v * mkt.v * (1.0 - mkt.rho);
  return mkt.ortho_excess / (gamma * kappa2);
}

Vector solve_orthogonal(const MultiSectorMarket& mkt, double gamma) {
  check_gamma(gamma);
  Vector out(mkt.n());
  for (int l = 0; l < mkt.m; ++l) {
    const double kappa2 = mkt.v(l) * mkt.v(l) * (1.0 - mkt.rho(l, l));
    out.segment(l * mkt.k, mkt.k) =
        mkt.ortho_excess.segment(l * mkt.k, mkt.k) / (gamma * kappa2);
  }
  return out;
}

double aggregate_curvature(const OneSectorMarket& mkt, AggregateMode mode) {
  if (mode == AggregateMode::FiniteN)
    return mkt.v * mkt.v * (1.0 + (mkt.n - 1) * mkt.rho) / mkt.n;
  if (mkt.rho <= 0.0)
    fail(ErrorCode::NonCoercive,
         "the large-n aggregate objective loses its quadratic term when rho <= 0; "
         "use finite mode");
  return mkt.v * mkt.v * mkt.rho;
}

ExposureSolve solve_exposure(double a, double b, const LevyJumpMeasure& measure,
                             double gamma) {
  check_gamma(gamma);
  if (!std::isfinite(a) || !std::isfinite(b) || b < 0.0)
    fail(ErrorCode::ConfigInvalid, "exposure equation needs finite a and b >= 0");
  ExposureSolve out;
  if (b == 0.0 || !measure.active()) {
    out.y = a;
    out.branch = SolveBranch::Quadratic;
    out.residual = 0.0;
    return out;
  }
  const ScalarProblem pr{a, b, measure, gamma};
  if (gamma == 2.0 && measure.kind == JumpKind::PowerLaw) {
    const double lp = measure.lambda_pos, ln = measure.lambda_neg;
    out.branch = SolveBranch::Cubic;
    if (lp > 0.0 && ln > 0.0)
      out.y = cubic_interior_root(a, b, lp, ln);
    else if (lp > 0.0)
      out.y = quadratic_root_positive_side(a, b, lp);
    else
      out.y = quadratic_root_negative_side(a, b, ln);
  } else if (gamma == 1.0 && measure.kind == JumpKind::PointMass) {
    // clearing the single denominator gives z y^2 + (1 - a z) y - (a + b lambda z)
    const double z = measure.z, lam = measure.lambda;
    const double B = 1.0 - a * z, C = -(a + b * lam * z);
    const double disc = std::sqrt(B * B - 4.0 * z * C);
    const double r1 = (-B + disc) / (2.0 * z), r2 = (-B - disc) / (2.0 * z);
    auto [lo, hi] = measure.solvency_interval();
    out.y = (r1 > lo && r1 < hi) ? r1 : r2;
    out.branch = SolveBranch::Quadratic;
  } else {
    out.y = newton_bisection(pr);
    out.branch = SolveBranch::ScalarNewton;
  }
  out.residual = std::abs(pr.h(out.y));
  return out;
}

ScalarSolve solve_bar_one_sector(const OneSectorMarket& mkt, double gamma,
                                 AggregateMode mode) {
  check_gamma(gamma);
  const double c = aggregate_curvature(mkt, mode);
  const double gc = gamma * c;
  const double jl = mkt.jump_loading;
  ScalarSolve out;
  if (jl == 0.0 || !mkt.measure.active()) {
    out.varpi = mkt.common_excess / gc;
    out.y = jl * out.varpi;
    out.branch = SolveBranch::Quadratic;
    out.residual = 0.0;
    return out;
  }
  const double a = mkt.common_excess * jl / gc;
  const double b = jl * jl / gc;
  const ExposureSolve es = solve_exposure(a, b, mkt.measure, gamma);
  out.y = es.y;
  out.varpi = es.y / jl;
  out.branch = es.branch;
  out.residual = std::abs(gc * out.varpi - mkt.common_excess +
                          jl * jtd(mkt.measure, gamma, out.y));
  const double scale = std::max(1.0, std::abs(gc * out.varpi) +
                                         std::abs(mkt.common_excess));
  // Near a solvency wall the jump term's slope diverges and the evaluated
  // residual cannot beat slope * ulp even at the exact root; admit that floor.
  const double slope = gc + jl * jl * jtdd(mkt.measure, gamma, out.y);
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                       std::abs(slope) * std::max(1.0, std::abs(out.varpi));
  if (out.residual > 1e-12 * scale + floor)
    fail(ErrorCode::NonConvergence, "aggregate first-order condition not met");
  return out;
}

VectorSolve solve_bar_multisector(const MultiSectorMarket& mkt, double gamma) {
  check_gamma(gamma);
  const Matrix kap = kappa_matrix(mkt);
  const Vector& r = mkt.sector_excess;
  const Matrix& j = mkt.loadings;
  const double k = mkt.k;
  Eigen::LLT<Matrix> llt(kap);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::NotPositiveDefinite, "sector covariance matrix is not positive definite");

  VectorSolve out;
  bool inactive = true;
  for (const auto& m : mkt.measures) inactive = inactive && !m.active();
  bool identical = !inactive;
  for (int l = 1; l < mkt.m && identical; ++l)
    identical = same_measure(mkt.measures[l], mkt.measures[0]) &&
                (j.col(l) - j.col(0)).cwiseAbs().maxCoeff() == 0.0;

  if (inactive) {
    out.varpi = (k / gamma) * llt.solve(r);
    out.branch = SolveBranch::Quadratic;
  } else if (identical) {
    const Vector jhat = j.col(0);
    const Vector kj = llt.solve(jhat);
    const double jkj = jhat.dot(kj);
    if (jkj == 0.0) {
      out.varpi = (k / gamma) * llt.solve(r);
      out.branch = SolveBranch::Quadratic;
    } else {
      const LevyJumpMeasure merged = scaled(mkt.measures[0], mkt.m);
      const double a = (k / gamma) * jhat.dot(llt.solve(r));
      const double b = (k / gamma) * jkj;
      const ExposureSolve es = solve_exposure(a, b, merged, gamma);
      out.varpi = (k / gamma) * llt.solve(r) + kj * ((es.y - a) / jkj);
      out.branch = es.branch;
    }
  } else {
    std::vector<LevyJumpMeasure> ms = mkt.measures;
    NewtonFuncs fn;
    fn.feasible = [&](const Vector& w) {
      return exposures_feasible(ms, j.transpose() * w);
    };
    fn.value = [&](const Vector& w) {
      const Vector y = j.transpose() * w;
      double v = -w.dot(r) + (gamma / (2.0 * k)) * w.dot(kap * w);
      for (int l = 0; l < mkt.m; ++l) v += jt(ms[l], gamma, y(l));
      return v;
    };
    fn.grad = [&](const Vector& w) {
      const Vector y = j.transpose() * w;
      Vector d(mkt.m);
      for (int l = 0; l < mkt.m; ++l) d(l) = jtd(ms[l], gamma, y(l));
      return Vector(-r + (gamma / k) * (kap * w) + j * d);
    };
    fn.hess = [&](const Vector& w) {
      const Vector y = j.transpose() * w;
      Vector dd(mkt.m);
      for (int l = 0; l < mkt.m; ++l) dd(l) = jtdd(ms[l], gamma, y(l));
      return Matrix((gamma / k) * kap + j * dd.asDiagonal() * j.transpose());
    };
    out.varpi = damped_newton(fn, Vector::Zero(mkt.m), grad_scale(r), 500);
    out.branch = SolveBranch::VectorNewton;
  }

  out.exposure = j.transpose() * out.varpi;
  Vector d(mkt.m), dd(mkt.m);
  for (int l = 0; l < mkt.m; ++l) {
    d(l) = jtd(mkt.measures[l], gamma, out.exposure(l));
    dd(l) = jtdd(mkt.measures[l], gamma, out.exposure(l));
  }
  out.residual =
      (-r + (gamma / k) * (kap * out.varpi) + j * d).cwiseAbs().maxCoeff();
  // Same rounding floor as the scalar path: slope * ulp is unbeatable when an
  // exposure hugs its wall.
  const Matrix hess = (gamma / k) * kap + j * dd.asDiagonal() * j.transpose();
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                       hess.cwiseAbs().rowwise().sum().maxCoeff() *
                       std::max(1.0, out.varpi.cwiseAbs().maxCoeff());
  if (out.residual > 1e-10 * grad_scale(r) + floor)
    fail(ErrorCode::NonConvergence, "sector first-order conditions not met");
  return out;
}

Vector solve_full_numeric(const RawMarket& raw, double gamma) {
  check_gamma(gamma);
  const int n = static_cast<int>(raw.excess.size());
  if (raw.sigma.rows() != n || raw.sigma.cols() != n)
    fail(ErrorCode::ShapeMismatch, "covariance and return dimensions disagree");
  if (raw.jumps.size() != raw.measures.size())
    fail(ErrorCode::ShapeMismatch, "one measure per jump vector required");
  for (const auto& J : raw.jumps)
    if (J.size() != n) fail(ErrorCode::ShapeMismatch, "jump vector has wrong length");
  const size_t L = raw.jumps.size();

  NewtonFuncs fn;
  fn.feasible = [&](const Vector& w) {
    for (size_t l = 0; l < L; ++l) {
      auto [lo, hi] = shrunk_interval(raw.measures[l]);
      const double y = raw.jumps[l].dot(w);
      if (!(y > lo && y < hi)) return false;
    }
    return true;
  };
  fn.value = [&](const Vector& w) {
    double v = -w.dot(raw.excess) + 0.5 * gamma * w.dot(raw.sigma * w);
    for (size_t l = 0; l < L; ++l)
      v += jt(raw.measures[l], gamma, raw.jumps[l].dot(w));
    return v;
  };
  fn.grad = [&](const Vector& w) {
    Vector g = -raw.excess + gamma * (raw.sigma * w);
    for (size_t l = 0; l < L; ++l)
      g += raw.jumps[l] * jtd(raw.measures[l], gamma, raw.jumps[l].dot(w));
    return g;
  };
  fn.hess = [&](const Vector& w) {
    Matrix H = gamma * raw.sigma;
    for (size_t l = 0; l < L; ++l)
      H += jtdd(raw.measures[l], gamma, raw.jumps[l].dot(w)) * raw.jumps[l] *
           raw.jumps[l].transpose();
    return H;
  };
  return damped_newton(fn, Vector::Zero(n), grad_scale(raw.excess), 500);
}

ThreeFunds three_funds(const Matrix& sigma, const Vector& excess, const Vector& J,
                       const LevyJumpMeasure& measure, double gamma) {
  check_gamma(gamma);
  if (sigma.rows() != sigma.cols() || sigma.rows() != excess.size() ||
      J.size() != excess.size())
    fail(ErrorCode::ShapeMismatch, "fund inputs have mismatched dimensions");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::SingularSigma, "covariance is not positive definite");
  const Vector sR = llt.solve(excess);
  const Vector sJ = llt.solve(J);
  const double jj = J.dot(sJ);
  if (jj <= 0.0) fail(ErrorCode::ConfigInvalid, "jump vector must be nonzero");
  ThreeFunds f;
  f.delta2 = sJ / jj;
  f.delta1 = sR - J.dot(sR) * f.delta2;
  f.y = solve_exposure(J.dot(sR) / gamma, jj / gamma, measure, gamma).y;
  return f;
}

namespace {

// Consumption constant of the power-utility value function; positivity is the
// transversality condition.
double power_K(double gamma, double beta, double r, double wR, double wSw,
               double jump) {
  return (beta - (1.0 - gamma) * (r + wR - 0.5 * gamma * wSw - jump)) / gamma;
}

double log_k2(double beta, double r, double wR, double wSw, double jump) {
  return (std::log(beta) - 1.0 + (r + wR - 0.5 * wSw - jump) / beta) / beta;
}

double solve_gamma(const Preferences& p) {
  if (p.kind == UtilityKind::Log) return 1.0;
  if (p.kind == UtilityKind::Power) {
    if (p.gamma == 1.0)
      fail(ErrorCode::InvalidGamma,
           "power utility at gamma = 1 is the logarithmic case; use log preferences");
    return p.gamma;
  }
  fail(ErrorCode::ConfigInvalid, "exponential preferences take the dollar solver");
}

void fill_value_constants(Policy& pol, const Preferences& prefs, double gamma,
                          double r, double wR, double wSw, double jump) {
  if (prefs.kind == UtilityKind::Log) {
    pol.K = prefs.beta;
    pol.k2 = log_k2(prefs.beta, r, wR, wSw, jump);
  } else {
    pol.K = power_K(gamma, prefs.beta, r, wR, wSw, jump);
  }
  pol.transversality_ok = pol.K > 0.0;
}

}  // namespace

Policy assemble_policy(const OneSectorMarket& mkt, const Preferences& prefs,
                       AggregateMode mode) {
  if (prefs.kind == UtilityKind::Exponential)
    return solve_exponential(to_raw(mkt), prefs);
  const double gamma = solve_gamma(prefs);
  const int n = mkt.n;
  const double kappa1 = mkt.v * mkt.v * (1.0 + (n - 1) * mkt.rho);
  const double kappa2 = mkt.v * mkt.v * (1.0 - mkt.rho);

  const ScalarSolve s = solve_bar_one_sector(mkt, gamma, mode);
  Policy pol;
  pol.omega_perp = solve_orthogonal(mkt, gamma);
  pol.varpi = Vector::Constant(1, s.varpi);
  pol.omega_bar = Vector::Constant(1, s.varpi / n);
  pol.omega = Vector::Constant(n, s.varpi / n) + pol.omega_perp;
  pol.omega0 = 1.0 - s.varpi;
  pol.exposure = Vector::Constant(1, s.y);
  pol.branch = s.branch;
  pol.residual = s.residual;

  const double perp2 = pol.omega_perp.squaredNorm();
  const double wR = s.varpi * mkt.common_excess + pol.omega_perp.dot(mkt.ortho_excess);
  const double wSw = kappa1 * s.varpi * s.varpi / n + kappa2 * perp2;
  const double jump = jt(mkt.measure, gamma, s.y);
  const double c = aggregate_curvature(mkt, mode);
  pol.objective = -wR + 0.5 * gamma *
                            (c * s.varpi * s.varpi + kappa2 * perp2) +
                  jump;
  fill_value_constants(pol, prefs, gamma, mkt.riskless, wR, wSw, jump);
  if (mkt.jump_loading != 0.0) {
    ThreeFunds f;
    f.delta1 = mkt.ortho_excess / kappa2;
    f.delta2 = Vector::Constant(n, 1.0 / (n * mkt.jump_loading));
    f.y = s.y;
    pol.funds = std::move(f);
  }
  return pol;
}

Policy assemble_policy(const MultiSectorMarket& mkt, const Preferences& prefs) {
  if (prefs.kind == UtilityKind::Exponential)
    return solve_exponential(to_raw(mkt), prefs);
  const double gamma = solve_gamma(prefs);
  const int n = mkt.n(), k = mkt.k;

  const VectorSolve s = solve_bar_multisector(mkt, gamma);
  Policy pol;
  pol.omega_perp = solve_orthogonal(mkt, gamma);
  pol.varpi = s.varpi;
  pol.omega_bar = s.varpi / k;
  pol.omega = pol.omega_perp;
  for (int l = 0; l < mkt.m; ++l)
    pol.omega.segment(l * k, k).array() += s.varpi(l) / k;
  pol.omega0 = 1.0 - s.varpi.sum();
  pol.exposure = s.exposure;
  pol.branch = s.branch;
  pol.residual = s.residual;

  const Matrix kap = kappa_matrix(mkt);
  double perp_quad = 0.0, perp_ret = 0.0, jump = 0.0;
  for (int l = 0; l < mkt.m; ++l) {
    const double kappa2 = mkt.v(l) * mkt.v(l) * (1.0 - mkt.rho(l, l));
    const auto wp = pol.omega_perp.segment(l * k, k);
    perp_quad += kappa2 * wp.squaredNorm();
    perp_ret += wp.dot(mkt.ortho_excess.segment(l * k, k));
    jump += jt(mkt.measures[l], gamma, s.exposure(l));
  }
  const double wR = s.varpi.dot(mkt.sector_excess) + perp_ret;
  const double wSw = s.varpi.dot(kap * s.varpi) / k + perp_quad;
  pol.objective = -wR + 0.5 * gamma * wSw + jump;
  fill_value_constants(pol, prefs, gamma, mkt.riskless, wR, wSw, jump);
  if (mkt.m == 1 && mkt.loadings(0, 0) != 0.0) {
    ThreeFunds f;
    f.delta1 = mkt.ortho_excess / (mkt.v(0) * mkt.v(0) * (1.0 - mkt.rho(0, 0)));
    f.delta2 = Vector::Constant(n, 1.0 / (n * mkt.loadings(0, 0)));
    f.y = s.exposure(0);
    pol.funds = std::move(f);
  }
  return pol;
}

Policy solve_exponential(const RawMarket& raw, const Preferences& prefs) {
  if (prefs.kind != UtilityKind::Exponential)
    fail(ErrorCode::ConfigInvalid, "dollar solver needs exponential preferences");
  if (!(raw.riskless > 0.0))
    fail(ErrorCode::ConfigInvalid, "exponential utility needs a positive riskless rate");
  const double r = raw.riskless, q = prefs.q, rq = r * q;
  const int n = static_cast<int>(raw.excess.size());
  if (raw.sigma.rows() != n || raw.sigma.cols() != n)
    fail(ErrorCode::ShapeMismatch, "covariance and return dimensions disagree");
  const size_t L = raw.jumps.size();
  if (L != raw.measures.size())
    fail(ErrorCode::ShapeMismatch, "one measure per jump vector required");

  bool inactive = true;
  for (const auto& m : raw.measures) inactive = inactive && !m.active();

  Policy pol;
  if (inactive) {
    pol.omega = solve_merton(raw.sigma, raw.excess, rq);
    pol.branch = SolveBranch::Quadratic;
    pol.residual = 0.0;
  } else {
    NewtonFuncs fn;
    fn.feasible = [](const Vector&) { return true; };  // no solvency wall
    fn.value = [&](const Vector& w) {
      double v = -w.dot(raw.excess) + 0.5 * rq * w.dot(raw.sigma * w);
      for (size_t l = 0; l < L; ++l)
        v += psi_exponential(raw.measures[l], rq, raw.jumps[l].dot(w)) / rq;
      return v;
    };
    fn.grad = [&](const Vector& w) {
      Vector g = -raw.excess + rq * (raw.sigma * w);
      for (size_t l = 0; l < L; ++l)
        g += raw.jumps[l] *
             (psi_exponential_prime(raw.measures[l], rq, raw.jumps[l].dot(w)) / rq);
      return g;
    };
    fn.hess = [&](const Vector& w) {
      Matrix H = rq * raw.sigma;
      for (size_t l = 0; l < L; ++l)
        H += (psi_exponential_second(raw.measures[l], rq, raw.jumps[l].dot(w)) / rq) *
             raw.jumps[l] * raw.jumps[l].transpose();
      return H;
    };
    pol.omega = damped_newton(fn, Vector::Zero(n), grad_scale(raw.excess), 500);
    pol.branch = SolveBranch::FullNewton;
    pol.residual = fn.grad(pol.omega).cwiseAbs().maxCoeff();
  }

  pol.omega0 = 0.0;  // dollar policy: the riskless account absorbs the rest
  pol.exposure = Vector(L);
  double jump_sum = 0.0, value_jump = 0.0;
  for (size_t l = 0; l < L; ++l) {
    pol.exposure(l) = raw.jumps[l].dot(pol.omega);
    const double pe = psi_exponential(raw.measures[l], rq, pol.exposure(l));
    jump_sum += pe / rq;
    value_jump += pe;
  }
  const double wR = pol.omega.dot(raw.excess);
  const double wSw = pol.omega.dot(raw.sigma * pol.omega);
  pol.objective = -wR + 0.5 * rq * wSw + jump_sum;
  pol.K = std::exp(1.0 - prefs.beta / r - q * wR + 0.5 * r * q * q * wSw +
                   value_jump / r) / r;
  pol.transversality_ok = true;
  return pol;
}

Policy solve_log(const RawMarket& raw, double beta) {
  return solve_raw(raw, Preferences::log_utility(beta));
}

Policy solve_raw(const RawMarket& raw, const Preferences& prefs) {
  if (prefs.kind == UtilityKind::Exponential) return solve_exponential(raw, prefs);
  const double gamma = solve_gamma(prefs);
  Policy pol;
  pol.omega = solve_full_numeric(raw, gamma);
  pol.omega0 = 1.0 - pol.omega.sum();
  const size_t L = raw.jumps.size();
  pol.exposure = Vector(L);
  double jump = 0.0;
  Vector g = -raw.excess + gamma * (raw.sigma * pol.omega);
  for (size_t l = 0; l < L; ++l) {
    pol.exposure(l) = raw.jumps[l].dot(pol.omega);
    jump += jt(raw.measures[l], gamma, pol.exposure(l));
    g += raw.jumps[l] * jtd(raw.measures[l], gamma, pol.exposure(l));
  }
  pol.branch = SolveBranch::FullNewton;
  pol.residual = g.cwiseAbs().maxCoeff();
  const double wR = pol.omega.dot(raw.excess);
  const double wSw = pol.omega.dot(raw.sigma * pol.omega);
  pol.objective = -wR + 0.5 * gamma * wSw + jump;
  fill_value_constants(pol, prefs, gamma, raw.riskless, wR, wSw, jump);
  return pol;
}

}  // namespace levyport
