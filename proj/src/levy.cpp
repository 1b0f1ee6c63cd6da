#include "levyport/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <boost/math/special_functions/expint.hpp>

namespace levyport {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286060651209;

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw DomainError(code, msg);
}

void require_finite(double x, const char* name) {
  if (!std::isfinite(x))
    fail(ErrorCode::ConfigInvalid, std::string(name) + " must be finite");
}

void require_rate(double x, const char* name) {
  require_finite(x, name);
  if (x < 0.0)
    fail(ErrorCode::ConfigInvalid, std::string(name) + " must be >= 0");
}

void check_gamma(double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0)
    fail(ErrorCode::InvalidGamma, "risk aversion must be positive");
  if (gamma == 1.0)
    fail(ErrorCode::InvalidGamma,
         "risk aversion 1 is the log case; use the log-utility operations");
}

void check_solvent(const LevyJumpMeasure& m, double y) {
  if (!m.solvent(y)) {
    std::ostringstream os;
    auto iv = m.solvency_interval();
    os << "exposure " << y << " outside the open interval (" << iv.first
       << ", " << iv.second << ")";
    fail(ErrorCode::SolvencyViolation, os.str());
  }
}

// expm1(x)/x with the removable singularity filled in.
double em1r(double x) { return x == 0.0 ? 1.0 : std::expm1(x) / x; }

// Adaptive Simpson with Richardson extrapolation, absolute tolerance.
template <class F>
double simpson_step(const F& f, double a, double m, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Second disjunct is the round-off floor: refining further only adds noise.
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol ||
      std::abs(delta) <= 1e-14 * (std::abs(left) + std::abs(right)))
    return left + right + delta / 15.0;
  return simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Splits [a,b] into fixed panels first so a smooth-looking coarse sample
// cannot fake convergence on a wide interval.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol,
                        int panels = 4) {
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double x0 = a + i * h, x1 = (i + 1 == panels) ? b : x0 + h;
    const double xm = 0.5 * (x0 + x1);
    const double f0 = f(x0), fm = f(xm), f1 = f(x1);
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += simpson_step(f, x0, xm, x1, f0, fm, f1, whole, tol / panels, 24);
  }
  return total;
}

// -(1/(1-gamma)) [(1+x)^(1-gamma) - 1]; the gamma -> 1 limit is -log1p(x).
double crra_term(double gamma, double x) {
  if (gamma == 1.0) return -std::log1p(x);
  const double p = 1.0 - gamma;
  return -std::expm1(p * std::log1p(x)) / p;
}

// S(p, y) = Integral_0^1 (1+yz)^(p-1) dz; stable for all p, y in range.
double S_int(double p, double y) {
  if (y == 0.0) return 1.0;
  const double L = std::log1p(y);
  if (p == 0.0) return L / y;
  return std::expm1(p * L) / (p * y);
}

// Q(gamma, y) = Integral_0^1 z (1+yz)^(-gamma-1) dz.
double Q_int(double gamma, double y) {
  if (std::abs(y) < 1e-5) {
    const double alpha = -gamma - 1.0;
    double coef = 1.0, yk = 1.0, sum = 0.0;
    for (int k = 0; k <= 6; ++k) {
      if (k > 0) {
        coef *= (alpha - k + 1) / k;
        yk *= y;
      }
      sum += coef * yk / (k + 2);
    }
    return sum;
  }
  return (S_int(1.0 - gamma, y) - S_int(-gamma, y)) / y;
}

// Integral_0^1 crra_term(gamma, y z) dz/z via u = log z; the 1/z pole cancels
// against the O(z) vanishing of the integrand.
double powerlaw_side(double gamma, double y) {
  if (y == 0.0) return 0.0;
  const double u0 = -45.0;
  auto f = [gamma, y](double u) { return crra_term(gamma, y * std::exp(u)); };
  const double quad = adaptive_simpson(f, u0, 0.0, 1e-13, 8);
  return quad - y * std::exp(u0);
}

// Integral_lo^hi (1+yz)^p dz for y != 0.
double uniform_A(double p, double y, double lo, double hi) {
  const double Llo = std::log1p(y * lo);
  const double dL = std::log1p(y * hi) - Llo;
  const double q = p + 1.0;
  return std::exp(q * Llo) * (dL / y) * em1r(q * dL);
}

// Monomial moments m_k = Integral_lo^hi z^k dz.
double uniform_moment(int k, double lo, double hi) {
  return (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / (k + 1);
}

double atom_psi(double gamma, double y, double lam, double z) {
  return lam * crra_term(gamma, y * z);
}

// psi for any gamma > 0 including 1 (where it is the log-utility penalty).
double psi_any(const LevyJumpMeasure& m, double gamma, double y) {
  if (!m.active() || y == 0.0) return 0.0;
  switch (m.kind) {
    case JumpKind::PointMass:
      return atom_psi(gamma, y, m.lambda, m.z);
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms) sum += atom_psi(gamma, y, m.lambda * a.p, a.z);
      return sum;
    }
    case JumpKind::PowerLaw: {
      // Sides with zero rate must not be evaluated: their exposure can sit
      // beyond that side's own wall, where the primitives are undefined.
      const double lp = m.lambda_pos, ln = m.lambda_neg;
      double sum = 0.0;
      if (gamma == 2.0) {
        if (lp > 0.0) sum -= lp * std::log1p(y);
        if (ln > 0.0) sum -= ln * std::log1p(-y);
      } else if (gamma == 3.0) {
        auto g3 = [](double t) { return 1.0 / (1.0 + t) - 1.0 - std::log1p(t); };
        if (lp > 0.0) sum += 0.5 * lp * g3(y);
        if (ln > 0.0) sum += 0.5 * ln * g3(-y);
      } else {
        if (lp > 0.0) sum += lp * powerlaw_side(gamma, y);
        if (ln > 0.0) sum += ln * powerlaw_side(gamma, -y);
      }
      return sum;
    }
    case JumpKind::Uniform: {
      const double zmax = std::max(std::abs(m.lo), std::abs(m.hi));
      if (std::abs(y) * zmax < 1e-4) {
        double sum = 0.0, yk = 1.0, bin = 1.0;
        const double alpha = 1.0 - gamma;
        for (int k = 1; k <= 8; ++k) {
          yk *= y;
          double ck;
          if (gamma == 1.0) {
            ck = (k % 2 == 0 ? 1.0 : -1.0) / k;
          } else {
            bin *= (alpha - k + 1) / k;
            ck = -bin / alpha;
          }
          sum += ck * yk * uniform_moment(k, m.lo, m.hi);
        }
        return m.lambda * sum;
      }
      if (gamma == 1.0) {
        const double Llo = std::log1p(y * m.lo), Lhi = std::log1p(y * m.hi);
        return -(m.lambda / y) *
               ((Lhi - 1.0) * (1.0 + y * m.hi) - (Llo - 1.0) * (1.0 + y * m.lo));
      }
      return -m.lambda / (1.0 - gamma) *
             (uniform_A(1.0 - gamma, y, m.lo, m.hi) - (m.hi - m.lo));
    }
  }
  return 0.0;
}

// psi'(y) = -Integral z (1+yz)^(-gamma) nu(dz), any gamma > 0.
double psi_prime_any(const LevyJumpMeasure& m, double gamma, double y) {
  if (!m.active()) return 0.0;
  switch (m.kind) {
    case JumpKind::PointMass:
      return -m.lambda * m.z * std::exp(-gamma * std::log1p(y * m.z));
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms)
        sum += -m.lambda * a.p * a.z * std::exp(-gamma * std::log1p(y * a.z));
      return sum;
    }
    case JumpKind::PowerLaw: {
      double sum = 0.0;
      if (m.lambda_pos > 0.0) sum -= m.lambda_pos * S_int(1.0 - gamma, y);
      if (m.lambda_neg > 0.0) sum += m.lambda_neg * S_int(1.0 - gamma, -y);
      return sum;
    }
    case JumpKind::Uniform: {
      const double zmax = std::max(std::abs(m.lo), std::abs(m.hi));
      if (std::abs(y) * zmax < 1e-4) {
        double sum = 0.0, yk = 1.0, bin = 1.0;
        for (int k = 0; k <= 8; ++k) {
          if (k > 0) {
            bin *= (-gamma - k + 1) / k;
            yk *= y;
          }
          sum += bin * yk * uniform_moment(k + 1, m.lo, m.hi);
        }
        return -m.lambda * sum;
      }
      return -m.lambda *
             (uniform_A(1.0 - gamma, y, m.lo, m.hi) -
              uniform_A(-gamma, y, m.lo, m.hi)) /
             y;
    }
  }
  return 0.0;
}

// psi''(y) = gamma Integral z^2 (1+yz)^(-gamma-1) nu(dz), any gamma > 0.
double psi_second_any(const LevyJumpMeasure& m, double gamma, double y) {
  if (!m.active()) return 0.0;
  switch (m.kind) {
    case JumpKind::PointMass: {
      const double zz = m.z;
      return gamma * m.lambda * zz * zz *
             std::exp(-(gamma + 1.0) * std::log1p(y * zz));
    }
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms)
        sum += gamma * m.lambda * a.p * a.z * a.z *
               std::exp(-(gamma + 1.0) * std::log1p(y * a.z));
      return sum;
    }
    case JumpKind::PowerLaw: {
      double sum = 0.0;
      if (m.lambda_pos > 0.0) sum += m.lambda_pos * Q_int(gamma, y);
      if (m.lambda_neg > 0.0) sum += m.lambda_neg * Q_int(gamma, -y);
      return gamma * sum;
    }
    case JumpKind::Uniform: {
      const double zmax = std::max(std::abs(m.lo), std::abs(m.hi));
      if (std::abs(y) * zmax < 1e-3) {
        double sum = 0.0, yk = 1.0, bin = 1.0;
        for (int k = 0; k <= 10; ++k) {
          if (k > 0) {
            bin *= (-gamma - 1.0 - k + 1) / k;
            yk *= y;
          }
          sum += bin * yk * uniform_moment(k + 2, m.lo, m.hi);
        }
        return gamma * m.lambda * sum;
      }
      return gamma * m.lambda *
             (uniform_A(1.0 - gamma, y, m.lo, m.hi) -
              2.0 * uniform_A(-gamma, y, m.lo, m.hi) +
              uniform_A(-gamma - 1.0, y, m.lo, m.hi)) /
             (y * y);
    }
  }
  return 0.0;
}

// E(x) = Integral_0^1 (e^{-xz} - 1) dz/z = -Ein(x).
double exp_side(double x) {
  if (x == 0.0) return 0.0;
  if (x > 4.0)
    return -(kEulerGamma + std::log(x) + boost::math::expint(1, x));
  if (x < -30.0)
    return boost::math::expint(-x) - kEulerGamma - std::log(-x);
  double term = 1.0, sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    term *= -x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) <= 1e-17 * (std::abs(sum) + 1e-300)) break;
  }
  return sum;
}

// Integral_0^1 e^{-xz} dz.
double exp_S(double x) { return x == 0.0 ? 1.0 : -std::expm1(-x) / x; }

// Integral_0^1 z e^{-xz} dz.
double exp_T(double x) {
  if (std::abs(x) < 1e-2) {
    double term = 1.0, sum = 0.0;
    for (int k = 0; k <= 12; ++k) {
      if (k > 0) term *= -x / k;
      sum += term / (k + 2);
      if (std::abs(term) <= 1e-18) break;
    }
    return sum;
  }
  return (1.0 - (1.0 + x) * std::exp(-x)) / (x * x);
}

// Integral_lo^hi z^n e^{-wz} dz for n = 0 (minus the measure of the
// interval), 1, 2; series fallback near w = 0.
double uniform_D(int n, double w, double lo, double hi) {
  const double zmax = std::max(std::abs(lo), std::abs(hi));
  if (std::abs(w) * zmax < 1e-2) {
    double term = 1.0, sum = 0.0;
    for (int k = 0; k <= 14; ++k) {
      if (k > 0) term *= -w / k;
      if (n == 0 && k == 0) continue;  // the -1 cancels the k = 0 term
      sum += term * uniform_moment(k + n, lo, hi);
    }
    return sum;
  }
  const double elo = std::exp(-w * lo), ehi = std::exp(-w * hi);
  switch (n) {
    case 0:
      return (elo - ehi) / w - (hi - lo);
    case 1:
      return (elo * (w * lo + 1.0) - ehi * (w * hi + 1.0)) / (w * w);
    default:
      return (elo * (w * w * lo * lo + 2.0 * w * lo + 2.0) -
              ehi * (w * w * hi * hi + 2.0 * w * hi + 2.0)) /
             (w * w * w);
  }
}

void check_rq(double rq) {
  if (!std::isfinite(rq) || rq <= 0.0)
    fail(ErrorCode::ConfigInvalid, "curvature r*q must be positive");
}

}  // namespace

LevyJumpMeasure LevyJumpMeasure::asymmetric_power_law(double lambda_pos,
                                                      double lambda_neg) {
  require_rate(lambda_pos, "lambda_pos");
  require_rate(lambda_neg, "lambda_neg");
  LevyJumpMeasure m;
  m.kind = JumpKind::PowerLaw;
  m.lambda_pos = lambda_pos;
  m.lambda_neg = lambda_neg;
  return m;
}

LevyJumpMeasure LevyJumpMeasure::uniform_density(double lambda, double lo,
                                                 double hi) {
  require_rate(lambda, "lambda");
  require_finite(lo, "lo");
  require_finite(hi, "hi");
  if (lo < -1.0)
    fail(ErrorCode::ConfigInvalid, "uniform support must stay within z >= -1");
  if (!(lo < hi))
    fail(ErrorCode::ConfigInvalid, "uniform support needs lo < hi");
  LevyJumpMeasure m;
  m.kind = JumpKind::Uniform;
  m.lambda = lambda;
  m.lo = lo;
  m.hi = hi;
  return m;
}

LevyJumpMeasure LevyJumpMeasure::point_mass(double lambda, double z) {
  require_rate(lambda, "lambda");
  require_finite(z, "z");
  if (z < -1.0)
    fail(ErrorCode::ConfigInvalid, "jump amplitude must satisfy z >= -1");
  LevyJumpMeasure m;
  m.kind = JumpKind::PointMass;
  m.lambda = lambda;
  m.z = z;
  return m;
}

LevyJumpMeasure LevyJumpMeasure::discrete_compound(double lambda,
                                                   std::vector<JumpAtom> atoms) {
  require_rate(lambda, "lambda");
  if (atoms.empty())
    fail(ErrorCode::ConfigInvalid, "discrete measure needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    require_finite(a.z, "atom z");
    require_finite(a.p, "atom p");
    if (a.z < -1.0)
      fail(ErrorCode::ConfigInvalid, "jump amplitude must satisfy z >= -1");
    if (a.p <= 0.0)
      fail(ErrorCode::ConfigInvalid, "atom probabilities must be positive");
    total += a.p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    fail(ErrorCode::ConfigInvalid, "atom probabilities must sum to 1");
  LevyJumpMeasure m;
  m.kind = JumpKind::Discrete;
  m.lambda = lambda;
  m.atoms = std::move(atoms);
  return m;
}

double LevyJumpMeasure::total_intensity() const {
  return kind == JumpKind::PowerLaw ? lambda_pos + lambda_neg : lambda;
}

double LevyJumpMeasure::z_inf() const {
  if (!active()) return 0.0;
  switch (kind) {
    case JumpKind::PowerLaw:
      return lambda_neg > 0.0 ? -1.0 : 0.0;
    case JumpKind::Uniform:
      return lo;
    case JumpKind::PointMass:
      return z;
    case JumpKind::Discrete: {
      double v = kInf;
      for (const auto& a : atoms) v = std::min(v, a.z);
      return v;
    }
  }
  return 0.0;
}

double LevyJumpMeasure::z_sup() const {
  if (!active()) return 0.0;
  switch (kind) {
    case JumpKind::PowerLaw:
      return lambda_pos > 0.0 ? 1.0 : 0.0;
    case JumpKind::Uniform:
      return hi;
    case JumpKind::PointMass:
      return z;
    case JumpKind::Discrete: {
      double v = -kInf;
      for (const auto& a : atoms) v = std::max(v, a.z);
      return v;
    }
  }
  return 0.0;
}

std::pair<double, double> LevyJumpMeasure::solvency_interval() const {
  if (!active()) return {-kInf, kInf};
  const double zs = z_sup(), zi = z_inf();
  const double lo_y = zs > 0.0 ? -1.0 / zs : -kInf;
  const double hi_y = zi < 0.0 ? -1.0 / zi : kInf;
  return {lo_y, hi_y};
}

bool LevyJumpMeasure::solvent(double y) const {
  if (!std::isfinite(y)) return false;
  const auto iv = solvency_interval();
  return y > iv.first && y < iv.second;
}

double psi(const LevyJumpMeasure& m, double gamma, double y) {
  check_gamma(gamma);
  check_solvent(m, y);
  return psi_any(m, gamma, y);
}

double psi_prime(const LevyJumpMeasure& m, double gamma, double y) {
  check_gamma(gamma);
  check_solvent(m, y);
  return psi_prime_any(m, gamma, y);
}

double psi_second(const LevyJumpMeasure& m, double gamma, double y) {
  check_gamma(gamma);
  check_solvent(m, y);
  return psi_second_any(m, gamma, y);
}

double psi_prime_dgamma(const LevyJumpMeasure& m, double gamma, double y) {
  if (!std::isfinite(gamma) || gamma <= 0.0)
    fail(ErrorCode::InvalidGamma, "risk aversion must be positive");
  check_solvent(m, y);
  if (!m.active() || y == 0.0) return 0.0;
  auto weight = [gamma](double x) {
    const double L = std::log1p(x);
    return L * std::exp(-gamma * L);
  };
  switch (m.kind) {
    case JumpKind::PointMass:
      return m.lambda * m.z * weight(y * m.z);
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms) sum += m.lambda * a.p * a.z * weight(y * a.z);
      return sum;
    }
    case JumpKind::PowerLaw: {
      double sum = 0.0;
      if (m.lambda_pos > 0.0)
        sum += m.lambda_pos *
               adaptive_simpson([&](double zz) { return weight(y * zz); }, 0.0,
                                1.0, 1e-12);
      if (m.lambda_neg > 0.0)
        sum -= m.lambda_neg *
               adaptive_simpson([&](double zz) { return weight(-y * zz); }, 0.0,
                                1.0, 1e-12);
      return sum;
    }
    case JumpKind::Uniform:
      return m.lambda *
             adaptive_simpson([&](double zz) { return zz * weight(y * zz); },
                              m.lo, m.hi, 1e-12);
  }
  return 0.0;
}

double psi_log(const LevyJumpMeasure& m, double y) {
  check_solvent(m, y);
  return psi_any(m, 1.0, y);
}

double psi_log_prime(const LevyJumpMeasure& m, double y) {
  check_solvent(m, y);
  return psi_prime_any(m, 1.0, y);
}

double psi_log_second(const LevyJumpMeasure& m, double y) {
  check_solvent(m, y);
  return psi_second_any(m, 1.0, y);
}

double psi_exponential(const LevyJumpMeasure& m, double rq, double y) {
  check_rq(rq);
  if (!std::isfinite(y)) fail(ErrorCode::ConfigInvalid, "exposure must be finite");
  if (!m.active() || y == 0.0) return 0.0;
  const double w = rq * y;
  switch (m.kind) {
    case JumpKind::PointMass:
      return m.lambda * std::expm1(-w * m.z);
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms) sum += m.lambda * a.p * std::expm1(-w * a.z);
      return sum;
    }
    case JumpKind::PowerLaw: {
      double sum = 0.0;
      if (m.lambda_pos > 0.0) sum += m.lambda_pos * exp_side(w);
      if (m.lambda_neg > 0.0) sum += m.lambda_neg * exp_side(-w);
      return sum;
    }
    case JumpKind::Uniform:
      return m.lambda * uniform_D(0, w, m.lo, m.hi);
  }
  return 0.0;
}

double psi_exponential_prime(const LevyJumpMeasure& m, double rq, double y) {
  check_rq(rq);
  if (!std::isfinite(y)) fail(ErrorCode::ConfigInvalid, "exposure must be finite");
  if (!m.active()) return 0.0;
  const double w = rq * y;
  switch (m.kind) {
    case JumpKind::PointMass:
      return -rq * m.lambda * m.z * std::exp(-w * m.z);
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms)
        sum += -rq * m.lambda * a.p * a.z * std::exp(-w * a.z);
      return sum;
    }
    case JumpKind::PowerLaw: {
      double sum = 0.0;
      if (m.lambda_pos > 0.0) sum += m.lambda_pos * exp_S(w);
      if (m.lambda_neg > 0.0) sum -= m.lambda_neg * exp_S(-w);
      return -rq * sum;
    }
    case JumpKind::Uniform:
      return -rq * m.lambda * uniform_D(1, w, m.lo, m.hi);
  }
  return 0.0;
}

double psi_exponential_second(const LevyJumpMeasure& m, double rq, double y) {
  check_rq(rq);
  if (!std::isfinite(y)) fail(ErrorCode::ConfigInvalid, "exposure must be finite");
  if (!m.active()) return 0.0;
  const double w = rq * y;
  switch (m.kind) {
    case JumpKind::PointMass:
      return rq * rq * m.lambda * m.z * m.z * std::exp(-w * m.z);
    case JumpKind::Discrete: {
      double sum = 0.0;
      for (const auto& a : m.atoms)
        sum += rq * rq * m.lambda * a.p * a.z * a.z * std::exp(-w * a.z);
      return sum;
    }
    case JumpKind::PowerLaw: {
      double sum = 0.0;
      if (m.lambda_pos > 0.0) sum += m.lambda_pos * exp_T(w);
      if (m.lambda_neg > 0.0) sum += m.lambda_neg * exp_T(-w);
      return rq * rq * sum;
    }
    case JumpKind::Uniform:
      return rq * rq * m.lambda * uniform_D(2, w, m.lo, m.hi);
  }
  return 0.0;
}

double mean_positive_jump(const LevyJumpMeasure& m) {
  if (m.active()) {
    switch (m.kind) {
      case JumpKind::PowerLaw:
        if (m.lambda_pos > 0.0) return m.lambda_pos;
        break;
      case JumpKind::Uniform:
        if (m.hi > 0.0) {
          const double a = std::max(m.lo, 0.0);
          return m.lambda * 0.5 * (m.hi * m.hi - a * a);
        }
        break;
      case JumpKind::PointMass:
        if (m.z > 0.0) return m.lambda * m.z;
        break;
      case JumpKind::Discrete: {
        double sum = 0.0;
        bool any = false;
        for (const auto& a : m.atoms)
          if (a.z > 0.0) {
            sum += m.lambda * a.p * a.z;
            any = true;
          }
        if (any) return sum;
        break;
      }
    }
  }
  fail(ErrorCode::EmptyPositiveSupport,
       "measure carries no mass on positive amplitudes");
}

double arrival_rate(const LevyJumpMeasure& m, double eps) {
  switch (m.kind) {
    case JumpKind::PowerLaw:
      if (!(eps > 0.0 && eps < 1.0))
        fail(ErrorCode::ConfigInvalid, "truncation eps must lie in (0,1)");
      return (m.lambda_pos + m.lambda_neg) * std::log(1.0 / eps);
    case JumpKind::Uniform:
      // the uniform measure is lambda*dz on [lo,hi]: its mass scales with the
      // support width, and the sampler draws amplitudes uniformly on [lo,hi]
      return m.lambda * (m.hi - m.lo);
    default:
      return m.lambda;
  }
}

double sample_amplitude(const LevyJumpMeasure& m, double u1, double u2,
                        double eps) {
  switch (m.kind) {
    case JumpKind::PowerLaw: {
      if (!(eps > 0.0 && eps < 1.0))
        fail(ErrorCode::ConfigInvalid, "truncation eps must lie in (0,1)");
      const double total = m.lambda_pos + m.lambda_neg;
      if (total <= 0.0)
        fail(ErrorCode::ConfigInvalid, "cannot sample an inactive measure");
      const bool positive = u1 * total < m.lambda_pos;
      const double mag = std::pow(eps, 1.0 - u2);
      return positive ? mag : -mag;
    }
    case JumpKind::Uniform:
      return m.lo + u2 * (m.hi - m.lo);
    case JumpKind::PointMass:
      return m.z;
    case JumpKind::Discrete: {
      double acc = 0.0;
      for (const auto& a : m.atoms) {
        acc += a.p;
        if (u2 < acc) return a.z;
      }
      return m.atoms.back().z;
    }
  }
  fail(ErrorCode::ConfigInvalid, "unknown measure kind");
}

}  // namespace levyport
