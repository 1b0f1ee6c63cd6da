#include <levyport/statics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <levyport/levy.hpp>

namespace levyport {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw DomainError(code, msg);
}

void require_one_sided_power_law(const LevyJumpMeasure& m, const char* what) {
  if (m.kind != JumpKind::PowerLaw || m.lambda_neg != 0.0)
    fail(ErrorCode::OutOfRegime,
         std::string(what) + " needs one-sided positive power-law jumps");
}

// Rescales the measure so its quoted intensity parameter hits `target`,
// preserving the amplitude shape.  Goes through the factories so invalid
// targets surface as the usual construction errors.
LevyJumpMeasure with_intensity(const LevyJumpMeasure& m, double target) {
  switch (m.kind) {
    case JumpKind::PowerLaw: {
      const double total = m.lambda_pos + m.lambda_neg;
      const double s = total > 0.0 ? target / total : 0.0;
      return LevyJumpMeasure::asymmetric_power_law(s * m.lambda_pos,
                                                   s * m.lambda_neg);
    }
    case JumpKind::Uniform:
      return LevyJumpMeasure::uniform_density(target, m.lo, m.hi);
    case JumpKind::PointMass:
      return LevyJumpMeasure::point_mass(target, m.z);
    case JumpKind::Discrete:
      return LevyJumpMeasure::discrete_compound(target, m.atoms);
  }
  fail(ErrorCode::ConfigInvalid, "unknown measure kind");
}

// Discriminant under the square root in the intensity and loading
// derivatives of the quadratic-branch weight.
double sensitivity_discriminant(double c, double excess, double loading,
                                double lambda) {
  const double base = 2.0 * c + loading * excess;
  return base * base + 8.0 * c * loading * loading * lambda;
}

struct SweepPoint {
  int n;
  double v, rho, excess, loading, riskless;
  LevyJumpMeasure measure;
  Preferences prefs;
  bool resize = false;  // an AssetCount axis touched n
};

SweepRow solve_sweep_row(const SweepSpec& spec,
                         const std::vector<SweepAxis>& axes,
                         const std::vector<double>& point) {
  SweepRow row;
  row.point = point;
  row.varpi = row.exposure = row.objective = row.K = kNaN;
  try {
    SweepPoint p{spec.base.n,
                 spec.base.v,
                 spec.base.rho,
                 spec.base.common_excess,
                 spec.base.jump_loading,
                 spec.base.riskless,
                 spec.base.measure,
                 spec.prefs,
                 false};
    for (size_t a = 0; a < axes.size(); ++a) {
      const double value = point[a];
      switch (axes[a].parameter) {
        case SweepParameter::Lambda:
          p.measure = with_intensity(p.measure, value);
          break;
        case SweepParameter::LambdaPos:
          p.measure = LevyJumpMeasure::asymmetric_power_law(
              value, p.measure.lambda_neg);
          break;
        case SweepParameter::LambdaNeg:
          p.measure = LevyJumpMeasure::asymmetric_power_law(
              p.measure.lambda_pos, value);
          break;
        case SweepParameter::JumpSize:
          p.loading = value;
          break;
        case SweepParameter::Gamma:
          p.prefs = Preferences::power(value, p.prefs.beta);
          break;
        case SweepParameter::Rho:
          p.rho = value;
          break;
        case SweepParameter::Volatility:
          p.v = value;
          break;
        case SweepParameter::ExcessReturn:
          p.excess = value;
          break;
        case SweepParameter::AssetCount:
          p.n = static_cast<int>(value);
          p.resize = true;
          break;
      }
    }
    Vector ortho =
        p.resize ? Vector(Vector::Zero(p.n)) : spec.base.ortho_excess;
    const OneSectorMarket mkt =
        OneSectorMarket::make(p.n, p.v, p.rho, p.excess, std::move(ortho),
                              p.loading, p.riskless, p.measure);
    const Policy pol = assemble_policy(mkt, p.prefs, spec.mode);
    row.varpi = pol.varpi.size() > 0 ? pol.varpi(0) : pol.omega.sum();
    row.exposure = pol.exposure.size() > 0 ? pol.exposure(0) : 0.0;
    row.objective = pol.objective;
    row.K = pol.K;
  } catch (const DomainError& e) {
    row.status = error_code_name(e.code());
  } catch (const std::exception&) {
    row.status = "InternalError";
  }
  return row;
}

SweepResult run_sweep(const SweepSpec& spec, bool parallel) {
  std::vector<SweepAxis> axes = spec.axes;
  if (axes.empty())
    fail(ErrorCode::ConfigInvalid, "a sweep needs at least one axis");
  std::sort(axes.begin(), axes.end(),
            [](const SweepAxis& a, const SweepAxis& b) {
              return static_cast<int>(a.parameter) <
                     static_cast<int>(b.parameter);
            });
  for (size_t a = 0; a < axes.size(); ++a) {
    if (axes[a].values.empty())
      fail(ErrorCode::ConfigInvalid,
           std::string("sweep axis ") + sweep_parameter_name(axes[a].parameter) +
               " has no values");
    if (a > 0 && axes[a].parameter == axes[a - 1].parameter)
      fail(ErrorCode::ConfigInvalid,
           std::string("duplicate sweep axis ") +
               sweep_parameter_name(axes[a].parameter));
  }
  for (const SweepAxis& ax : axes) {
    switch (ax.parameter) {
      case SweepParameter::Lambda:
        if (!spec.base.measure.active())
          fail(ErrorCode::ConfigInvalid,
               "an intensity axis needs an active base measure to rescale");
        break;
      case SweepParameter::LambdaPos:
      case SweepParameter::LambdaNeg:
        if (spec.base.measure.kind != JumpKind::PowerLaw)
          fail(ErrorCode::ConfigInvalid,
               "one-sided intensity axes apply to power-law measures only");
        break;
      case SweepParameter::Gamma:
        if (spec.prefs.kind != UtilityKind::Power)
          fail(ErrorCode::ConfigInvalid,
               "a risk-aversion axis needs power preferences");
        break;
      case SweepParameter::AssetCount:
        for (double value : ax.values) {
          double ip = 0.0;
          if (std::modf(value, &ip) != 0.0 || value < 2.0 || value > 1e9)
            fail(ErrorCode::ConfigInvalid,
                 "asset count grid values must be integers >= 2");
        }
        if (spec.base.ortho_excess.size() > 0 &&
            spec.base.ortho_excess.cwiseAbs().maxCoeff() > 0.0)
          fail(ErrorCode::ConfigInvalid,
               "an asset-count axis requires a zero orthogonal excess leg; "
               "per-asset deviations have no meaning across book sizes");
        break;
      default:
        break;
    }
  }

  constexpr long kMaxRows = 1000000;
  long total = 1;
  for (const SweepAxis& ax : axes) {
    total *= static_cast<long>(ax.values.size());
    if (total > kMaxRows)
      fail(ErrorCode::ConfigInvalid, "sweep grid exceeds the row cap");
  }

  // Row-major: the last axis varies fastest.
  const size_t na = axes.size();
  std::vector<long> stride(na, 1);
  for (size_t a = na; a-- > 1;)
    stride[a - 1] = stride[a] * static_cast<long>(axes[a].values.size());

  SweepResult out;
  out.axes = axes;
  out.rows.resize(static_cast<size_t>(total));
  auto worker = [&](long i) {
    std::vector<double> point(na);
    for (size_t a = 0; a < na; ++a)
      point[a] = axes[a].values[static_cast<size_t>(
          (i / stride[a]) % static_cast<long>(axes[a].values.size()))];
    out.rows[static_cast<size_t>(i)] = solve_sweep_row(spec, axes, point);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < total; ++i) worker(i);
  } else {
    for (long i = 0; i < total; ++i) worker(i);
  }
  return out;
}

}  // namespace

double critical_lambda(double excess, double jump_loading,
                       const LevyJumpMeasure& measure) {
  if (!(excess > 0.0))
    fail(ErrorCode::NonPositiveExcessReturn,
         "with a non-positive mean excess return the aggregate weight never "
         "turns positive, so no critical intensity exists");
  if (!(jump_loading < 0.0))
    fail(ErrorCode::OutOfRegime,
         "the critical intensity is defined for a negative jump loading");
  if (measure.z_inf() < 0.0)
    fail(ErrorCode::OutOfRegime,
         "the critical intensity needs one-sided positive jump support");
  const double moment = mean_positive_jump(measure);
  const double intensity = measure.total_intensity();
  return excess * intensity / (std::abs(jump_loading) * moment);
}

AsymptoticBehavior asymptotic_behavior(const OneSectorMarket& market,
                                       double gamma,
                                       AsymptoticRegime regime) {
  if (gamma != 2.0)
    fail(ErrorCode::OutOfRegime,
         "intensity limits are closed forms for gamma = 2 only");
  if (!(market.jump_loading < 0.0))
    fail(ErrorCode::OutOfRegime,
         "intensity limits assume a negative jump loading");
  require_one_sided_power_law(market.measure, "the intensity limit");
  const double c2 =
      2.0 * aggregate_curvature(market, AggregateMode::Asymptotic);
  const double diffusive = market.common_excess / c2;
  const double wall = 1.0 / std::abs(market.jump_loading);

  AsymptoticBehavior out;
  out.regime = regime;
  out.solvency_kink = wall < diffusive;
  switch (regime) {
    case AsymptoticRegime::LambdaToZero:
      out.value = std::min(diffusive, wall);
      break;
    case AsymptoticRegime::LambdaToInfinity:
      out.value = -1.0 / std::sqrt(c2);
      out.solvency_kink = false;
      break;
    case AsymptoticRegime::SmallLambdaExpansion: {
      // first-order slope from implicit differentiation of the quadratic
      // branch; the same expression covers the capped and diffusive limits
      const double lam = market.measure.lambda_pos;
      const double denom =
          std::abs(c2 + market.jump_loading * market.common_excess);
      if (denom == 0.0)
        fail(ErrorCode::OutOfRegime,
             "the weight is not differentiable in the rate at the kink");
      out.value = std::min(diffusive, wall) +
                  market.jump_loading * lam / denom;
      break;
    }
  }
  return out;
}

double sensitivity(const OneSectorMarket& market, double gamma,
                   AggregateMode mode, SensitivityTarget wrt) {
  const double c = aggregate_curvature(market, mode);
  const double J = market.jump_loading;
  if (wrt == SensitivityTarget::Gamma) {
    const ScalarSolve s = solve_bar_one_sector(market, gamma, mode);
    const double num =
        c * s.varpi + J * psi_prime_dgamma(market.measure, gamma, s.y);
    const double den =
        gamma * c + J * J * psi_second(market.measure, gamma, s.y);
    return -num / den;
  }

  if (gamma != 2.0)
    fail(ErrorCode::OutOfRegime,
         "intensity and loading derivatives are closed forms for gamma = 2 "
         "only");
  require_one_sided_power_law(market.measure, "this derivative");
  if (J == 0.0)
    fail(ErrorCode::OutOfRegime,
         "the derivative needs a nonzero jump loading");
  const double lam = market.measure.lambda_pos;
  const double disc =
      sensitivity_discriminant(c, market.common_excess, J, lam);
  // positivity is asserted pointwise: it can only vanish at the zero-intensity
  // kink where the weight is not differentiable
  if (!(disc > 0.0))
    fail(ErrorCode::OutOfRegime,
         "the weight is not differentiable at this parameter kink");
  const double root = std::sqrt(disc);
  if (wrt == SensitivityTarget::Lambda) return J / root;
  return (1.0 - (2.0 * c + J * market.common_excess) / root) /
         (2.0 * J * J);
}

LargeNLimit large_n_limit(const OneSectorMarket& market,
                          const Preferences& prefs, std::vector<int> grid) {
  if (prefs.kind == UtilityKind::Exponential)
    fail(ErrorCode::OutOfRegime,
         "the aggregate-weight limit needs wealth-fraction preferences");
  const double gamma =
      prefs.kind == UtilityKind::Log ? 1.0 : prefs.gamma;
  if (grid.empty()) grid = {10, 100, 1000, 10000};
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 2)
      fail(ErrorCode::ConfigInvalid, "book sizes must be at least 2");
    if (i > 0 && grid[i] <= grid[i - 1])
      fail(ErrorCode::ConfigInvalid, "book sizes must increase");
  }

  LargeNLimit out;
  out.varpi_infinity =
      solve_bar_one_sector(market, gamma, AggregateMode::Asymptotic).varpi;
  out.table.reserve(grid.size());
  for (int n : grid) {
    const OneSectorMarket mkt = OneSectorMarket::make(
        n, market.v, market.rho, market.common_excess, Vector::Zero(n),
        market.jump_loading, market.riskless, market.measure);
    const double w =
        solve_bar_one_sector(mkt, gamma, AggregateMode::FiniteN).varpi;
    out.table.push_back({n, w, std::abs(w - out.varpi_infinity)});
  }
  return out;
}

const char* sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::Lambda: return "lambda";
    case SweepParameter::LambdaPos: return "lambda_pos";
    case SweepParameter::LambdaNeg: return "lambda_neg";
    case SweepParameter::JumpSize: return "jump_size";
    case SweepParameter::Gamma: return "gamma";
    case SweepParameter::Rho: return "rho";
    case SweepParameter::Volatility: return "volatility";
    case SweepParameter::ExcessReturn: return "excess_return";
    case SweepParameter::AssetCount: return "asset_count";
  }
  return "unknown";
}

SweepResult sweep(const SweepSpec& spec) { return run_sweep(spec, true); }

SweepResult sweep_serial(const SweepSpec& spec) {
  return run_sweep(spec, false);
}

}  // namespace levyport
