#include "levyport/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "levyport/errors.hpp"
#include "levyport/levy.hpp"

namespace levyport {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-path generator. Uniforms and normals are produced by fixed formulas
// (not the standard-library distributions) so draw sequences are stable
// across toolchains; Box-Muller consumes exactly two uniforms per pair.
struct Stream {
  std::mt19937_64 gen;
  double spare = 0.0;
  bool has_spare = false;

  explicit Stream(std::uint64_t s) : gen(s) {}

  double uniform() {
    return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(kTwoPi * u2);
    has_spare = true;
    return r * std::cos(kTwoPi * u2);
  }
};

// Hands out the diffusion draws for one path: either fresh draws (optionally
// recorded) or a sign-flipped replay of the recorded ones for the antithetic
// partner.
struct NormalSource {
  Stream* stream = nullptr;
  std::vector<double>* record = nullptr;
  const std::vector<double>* replay = nullptr;
  double sign = 1.0;
  std::size_t at = 0;

  double next() {
    if (replay != nullptr) return sign * (*replay)[at++];
    const double z = stream->normal();
    if (record != nullptr) record->push_back(z);
    return z;
  }
};

struct Event {
  double t = 0.0;
  int source = 0;
  double z = 0.0;
};

// The n-asset dynamics reduce to one scalar process: drift r + omega'R - K,
// volatility sqrt(omega'Sigma omega), and one exposure per jump source.
struct ScalarDynamics {
  double riskless = 0.0;
  double drift_ex = 0.0;
  double vol = 0.0;
  std::vector<double> exposure;
  std::vector<double> rate;  // truncated arrival intensity per source
  const std::vector<LevyJumpMeasure>* measures = nullptr;
};

struct Utility {
  bool on = false;
  double gamma = 2.0;
  double beta = 0.0;
  double consumption = 0.0;  // K
};

struct PathOut {
  double terminal = 0.0;
  double log_terminal = 0.0;
  double value = 0.0;
  long jumps = 0;
  bool bankrupt = false;
};

double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

// Sample variance with the n-1 denominator; 0 for fewer than two points.
double variance_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - mean;
    sq[i] = d * d;
  }
  return pairwise_sum(sq.data(), sq.size()) / static_cast<double>(v.size() - 1);
}

// One trajectory on the grid refined with its jump times. Wealth is tracked
// in logs, so the diffusion segments are exact and the utility integrand
// (K X)^(1-gamma)/(1-gamma) costs a single exponential per node.
PathOut walk(const ScalarDynamics& dyn, const Utility& util,
             const SimConfig& cfg, const std::vector<Event>& events,
             NormalSource& draws) {
  const double vol = dyn.vol;
  const double glog =
      dyn.riskless + dyn.drift_ex - util.consumption - 0.5 * vol * vol;
  const double one_minus_gamma = 1.0 - util.gamma;
  const double log_consumption =
      util.on && util.consumption > 0.0 ? std::log(util.consumption) : 0.0;

  PathOut out;
  double log_x = 0.0;
  double t_prev = 0.0;
  double f_prev = 0.0;
  if (util.on) {
    f_prev = util.gamma == 1.0
                 ? log_consumption
                 : std::exp(one_minus_gamma * log_consumption) / one_minus_gamma;
  }

  auto integrand = [&](double t) {
    const double disc = -util.beta * t;
    if (util.gamma == 1.0)
      return std::exp(disc) * (log_consumption + log_x);
    return std::exp(disc + one_minus_gamma * (log_consumption + log_x)) /
           one_minus_gamma;
  };

  auto advance_to = [&](double t) {
    const double h = t - t_prev;
    if (h > 0.0) {
      const double z = draws.next();
      log_x += glog * h + vol * std::sqrt(h) * z;
    }
    t_prev = t;
    if (util.on) {
      const double f = integrand(t);
      out.value += 0.5 * (f_prev + f) * h;
      f_prev = f;
    }
  };

  const double T = cfg.horizon;
  const long steps =
      std::max<long>(1, static_cast<long>(std::ceil(T / cfg.dt - 1e-12)));
  std::size_t next_event = 0;
  for (long k = 1; k <= steps && !out.bankrupt; ++k) {
    const double tk = k == steps ? T : std::min(k * cfg.dt, T);
    while (next_event < events.size() && events[next_event].t <= tk) {
      const Event& e = events[next_event++];
      advance_to(e.t);
      ++out.jumps;
      const double factor = 1.0 + dyn.exposure[e.source] * e.z;
      if (factor <= 0.0) {
        out.bankrupt = true;
        break;
      }
      log_x += std::log1p(dyn.exposure[e.source] * e.z);
      if (util.on) f_prev = integrand(e.t);  // post-jump right endpoint
    }
    if (!out.bankrupt) advance_to(tk);
  }

  if (out.bankrupt) {
    out.terminal = 0.0;
    out.log_terminal = -std::numeric_limits<double>::infinity();
    // Consumption utility of zero wealth: finite (zero) below gamma = 1,
    // minus infinity at or above it. Nothing accrues past the default time.
    if (util.on && util.gamma >= 1.0)
      out.value = -std::numeric_limits<double>::infinity();
  } else {
    out.terminal = std::exp(log_x);
    out.log_terminal = log_x;
  }
  return out;
}

void draw_events(const ScalarDynamics& dyn, const SimConfig& cfg, Stream& s,
                 std::vector<Event>& events) {
  events.clear();
  for (std::size_t l = 0; l < dyn.rate.size(); ++l) {
    const double rate = dyn.rate[l];
    if (rate <= 0.0) continue;
    const LevyJumpMeasure& m = (*dyn.measures)[l];
    double t = -std::log1p(-s.uniform()) / rate;
    while (t < cfg.horizon) {
      const double u1 = s.uniform();
      const double u2 = s.uniform();
      events.push_back({t, static_cast<int>(l), sample_amplitude(m, u1, u2, cfg.eps)});
      t += -std::log1p(-s.uniform()) / rate;
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
}

void validate_config(const SimConfig& cfg,
                     const std::vector<LevyJumpMeasure>& measures) {
  if (cfg.paths < 1)
    throw DomainError(ErrorCode::ConfigInvalid, "paths must be at least 1");
  if (!(cfg.dt > 0.0))
    throw DomainError(ErrorCode::ConfigInvalid, "dt must be positive");
  if (!(cfg.horizon >= cfg.dt))
    throw DomainError(ErrorCode::ConfigInvalid,
                      "horizon must be at least one step");
  if (cfg.antithetic && cfg.paths % 2 != 0)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "antithetic sampling needs an even path count");
  for (const auto& m : measures)
    if (m.kind == JumpKind::PowerLaw && m.active() &&
        !(cfg.eps > 0.0 && cfg.eps < 1.0))
      throw DomainError(ErrorCode::ConfigInvalid,
                        "power-law truncation eps must lie in (0, 1)");
}

ScalarDynamics reduce(const RawMarket& raw, const Vector& omega, double eps) {
  const auto n = raw.excess.size();
  if (omega.size() != n || raw.sigma.rows() != n || raw.sigma.cols() != n)
    throw DomainError(ErrorCode::ShapeMismatch,
                      "policy and market dimensions disagree");
  if (raw.jumps.size() != raw.measures.size())
    throw DomainError(ErrorCode::ShapeMismatch,
                      "one loading vector per jump measure required");

  ScalarDynamics dyn;
  dyn.riskless = raw.riskless;
  dyn.drift_ex = omega.dot(raw.excess);
  dyn.vol = std::sqrt(std::max(0.0, omega.dot(raw.sigma * omega)));
  dyn.measures = &raw.measures;
  for (std::size_t l = 0; l < raw.measures.size(); ++l) {
    if (raw.jumps[l].size() != n)
      throw DomainError(ErrorCode::ShapeMismatch,
                        "jump loading vector has wrong length");
    const double y = omega.dot(raw.jumps[l]);
    const LevyJumpMeasure& m = raw.measures[l];
    if (m.active()) {
      const auto iv = m.solvency_interval();
      // The closed boundary is admissible: wealth is absorbed at zero and
      // the path is flagged bankrupt instead of rejected.
      if (y < iv.first || y > iv.second)
        throw DomainError(ErrorCode::SolvencyViolation,
                          "jump exposure outside the solvency interval");
    }
    dyn.exposure.push_back(y);
    dyn.rate.push_back(m.active() ? arrival_rate(m, eps) : 0.0);
  }
  return dyn;
}

SimResult run_paths(const RawMarket& raw, const Vector& omega,
                    const Utility& util, const SimConfig& cfg, bool parallel) {
  validate_config(cfg, raw.measures);
  const ScalarDynamics dyn = reduce(raw, omega, cfg.eps);

  const long paths = cfg.paths;
  SimResult res;
  res.paths = paths;
  res.has_value = util.on;
  res.path_terminal.assign(paths, 0.0);
  if (util.on) res.path_value.assign(paths, 0.0);
  res.path_jumps.assign(paths, 0);
  res.path_bankrupt.assign(paths, 0);
  std::vector<double> log_terminal(paths, 0.0);

  const long units = cfg.antithetic ? paths / 2 : paths;
  auto run_unit = [&](long u) {
    Stream stream(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(u) + 1)));
    std::vector<Event> events;
    draw_events(dyn, cfg, stream, events);
    std::vector<double> recorded;
    const long first = cfg.antithetic ? 2 * u : u;

    NormalSource fresh;
    fresh.stream = &stream;
    fresh.record = cfg.antithetic ? &recorded : nullptr;
    PathOut a = walk(dyn, util, cfg, events, fresh);
    res.path_terminal[first] = a.terminal;
    log_terminal[first] = a.log_terminal;
    if (util.on) res.path_value[first] = a.value;
    res.path_jumps[first] = a.jumps;
    res.path_bankrupt[first] = a.bankrupt ? 1 : 0;

    if (cfg.antithetic) {
      NormalSource flipped;
      flipped.replay = &recorded;
      flipped.sign = -1.0;
      PathOut b = walk(dyn, util, cfg, events, flipped);
      res.path_terminal[first + 1] = b.terminal;
      log_terminal[first + 1] = b.log_terminal;
      if (util.on) res.path_value[first + 1] = b.value;
      res.path_jumps[first + 1] = b.jumps;
      res.path_bankrupt[first + 1] = b.bankrupt ? 1 : 0;
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long u = 0; u < units; ++u) run_unit(u);
  } else {
    for (long u = 0; u < units; ++u) run_unit(u);
  }

  for (long i = 0; i < paths; ++i) {
    res.total_jumps += res.path_jumps[i];
    res.bankruptcies += res.path_bankrupt[i];
  }

  // Antithetic partners are dependent, so means and standard errors are
  // aggregated over pair averages; otherwise over single paths.
  auto unit_values = [&](const std::vector<double>& per_path) {
    if (!cfg.antithetic) return per_path;
    std::vector<double> avg(units);
    for (long u = 0; u < units; ++u)
      avg[u] = 0.5 * (per_path[2 * u] + per_path[2 * u + 1]);
    return avg;
  };
  auto summarize = [&](const std::vector<double>& per_path, double& mean,
                       double& se) {
    const std::vector<double> v = unit_values(per_path);
    mean = mean_of(v);
    se = v.size() < 2 ? 0.0
                      : std::sqrt(variance_of(v, mean) /
                                  static_cast<double>(v.size()));
  };
  summarize(res.path_terminal, res.terminal_mean, res.terminal_stderr);
  if (util.on) summarize(res.path_value, res.value_mean, res.value_stderr);

  std::vector<double> survivors;
  survivors.reserve(paths);
  for (long i = 0; i < paths; ++i)
    if (!res.path_bankrupt[i]) survivors.push_back(log_terminal[i]);
  res.log_terminal_mean = mean_of(survivors);
  res.log_terminal_var = variance_of(survivors, res.log_terminal_mean);
  return res;
}

// Stationarity-consistent consumption rate for given power-utility weights:
// the rate that makes C = K X optimal among consumption rules for this omega.
double pointwise_consumption(const RawMarket& raw, const Vector& omega,
                             const Preferences& prefs) {
  const double gamma = prefs.gamma;
  const double wR = omega.dot(raw.excess);
  const double wSw = omega.dot(raw.sigma * omega);
  double penalty = 0.0;
  for (std::size_t l = 0; l < raw.measures.size(); ++l)
    if (raw.measures[l].active())
      penalty += psi(raw.measures[l], gamma, omega.dot(raw.jumps[l]));
  return (prefs.beta -
          (1.0 - gamma) * (raw.riskless + wR - 0.5 * gamma * wSw - penalty)) /
         gamma;
}

double closed_form_value(double consumption, double gamma, double horizon) {
  // L(1)(1 - exp(-K T)) with L(x) = K^-gamma x^(1-gamma) / (1-gamma).
  return std::pow(consumption, -gamma) / (1.0 - gamma) *
         (-std::expm1(-consumption * horizon));
}

void require_power(const Preferences& prefs) {
  if (prefs.kind != UtilityKind::Power)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "value benchmarks are implemented for power utility");
}

}  // namespace

SimResult simulate_wealth(const RawMarket& market, const Policy& policy,
                          double consumption, const SimConfig& config) {
  if (!(consumption >= 0.0))
    throw DomainError(ErrorCode::ConfigInvalid,
                      "consumption constant must be nonnegative");
  Utility util;
  util.consumption = consumption;  // off: only the wealth drift uses it
  return run_paths(market, policy.omega, util, config, true);
}

SimResult simulate_wealth_serial(const RawMarket& market, const Policy& policy,
                                 double consumption, const SimConfig& config) {
  if (!(consumption >= 0.0))
    throw DomainError(ErrorCode::ConfigInvalid,
                      "consumption constant must be nonnegative");
  Utility util;
  util.consumption = consumption;
  return run_paths(market, policy.omega, util, config, false);
}

ValueEstimate estimate_value(const RawMarket& market, const Policy& policy,
                             const Preferences& prefs,
                             const SimConfig& config) {
  require_power(prefs);
  if (!(policy.K > 0.0))
    throw DomainError(ErrorCode::TransversalityViolated,
                      "consumption rate must be positive for a finite value");
  Utility util;
  util.on = true;
  util.gamma = prefs.gamma;
  util.beta = prefs.beta;
  util.consumption = policy.K;

  ValueEstimate est;
  est.detail = run_paths(market, policy.omega, util, config, true);
  est.estimate = est.detail.value_mean;
  est.stderr_ = est.detail.value_stderr;
  est.benchmark = closed_form_value(policy.K, prefs.gamma, config.horizon);
  return est;
}

OptimalityReport optimality_check(const RawMarket& market,
                                  const Preferences& prefs,
                                  const Policy& optimal,
                                  const std::vector<Vector>& directions,
                                  const SimConfig& config) {
  require_power(prefs);
  if (directions.empty())
    throw DomainError(ErrorCode::ConfigInvalid,
                      "at least one probe direction required");
  if (!(optimal.K > 0.0))
    throw DomainError(ErrorCode::TransversalityViolated,
                      "candidate policy must consume at a positive rate");

  Utility util;
  util.on = true;
  util.gamma = prefs.gamma;
  util.beta = prefs.beta;
  util.consumption = optimal.K;
  const SimResult base = run_paths(market, optimal.omega, util, config, true);

  OptimalityReport rep;
  rep.base_value = base.value_mean;
  rep.base_stderr = base.value_stderr;
  rep.benchmark = closed_form_value(optimal.K, prefs.gamma, config.horizon);

  const long units = config.antithetic ? config.paths / 2 : config.paths;
  auto unit_values = [&](const std::vector<double>& per_path) {
    if (!config.antithetic) return per_path;
    std::vector<double> avg(units);
    for (long u = 0; u < units; ++u)
      avg[u] = 0.5 * (per_path[2 * u] + per_path[2 * u + 1]);
    return avg;
  };
  const std::vector<double> base_units = unit_values(base.path_value);

  int dominated = 0;
  for (const Vector& d : directions) {
    if (d.size() != optimal.omega.size())
      throw DomainError(ErrorCode::ShapeMismatch,
                        "probe direction has wrong dimension");
    const Vector probe = optimal.omega + d;
    const double probe_k = pointwise_consumption(market, probe, prefs);
    if (!(probe_k > 0.0))
      throw DomainError(ErrorCode::TransversalityViolated,
                        "probe policy has a nonpositive consumption rate");
    Utility putil = util;
    putil.consumption = probe_k;
    // Same seed: jump schedules and Gaussians are shared with the base run.
    const SimResult pr = run_paths(market, probe, putil, config, true);

    const std::vector<double> probe_units = unit_values(pr.path_value);
    std::vector<double> delta(base_units.size());
    for (std::size_t i = 0; i < delta.size(); ++i)
      delta[i] = base_units[i] - probe_units[i];
    OptimalityRow row;
    row.direction = d;
    row.perturbed_value = pr.value_mean;
    row.perturbed_K = probe_k;
    row.delta = mean_of(delta);
    const double dvar = variance_of(delta, row.delta);
    row.delta_stderr =
        delta.size() < 2 ? 0.0
                         : std::sqrt(dvar / static_cast<double>(delta.size()));
    row.dominated = row.delta >= -2.0 * row.delta_stderr;
    if (row.dominated) ++dominated;
    rep.rows.push_back(std::move(row));
  }
  rep.dominance_fraction =
      static_cast<double>(dominated) / static_cast<double>(directions.size());
  return rep;
}

OptimalityReport optimality_check(const RawMarket& market,
                                  const Preferences& prefs,
                                  const Policy& optimal, double perturbation,
                                  int directions, const SimConfig& config) {
  require_power(prefs);
  if (directions < 1)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "at least one probe direction required");
  if (!(perturbation >= 0.0))
    throw DomainError(ErrorCode::ConfigInvalid,
                      "perturbation magnitude must be nonnegative");

  const double scale = perturbation * optimal.omega.norm();
  Stream dir_stream(splitmix64(~config.seed));
  std::vector<Vector> probes;
  probes.reserve(directions);
  for (int j = 0; j < directions; ++j) {
    if (scale == 0.0) {
      probes.push_back(Vector::Zero(optimal.omega.size()));
      continue;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 64 && !accepted; ++attempt) {
      Vector d(optimal.omega.size());
      for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = dir_stream.normal();
      const double norm = d.norm();
      if (norm == 0.0) continue;
      d *= scale / norm;
      const Vector probe = optimal.omega + d;
      bool solvent = true;
      for (std::size_t l = 0; l < market.measures.size(); ++l)
        if (market.measures[l].active() &&
            !market.measures[l].solvent(probe.dot(market.jumps[l])))
          solvent = false;
      if (!solvent) continue;
      probes.push_back(std::move(d));
      accepted = true;
    }
    if (!accepted)
      throw DomainError(ErrorCode::NonConvergence,
                        "could not draw a solvent probe direction");
  }
  return optimality_check(market, prefs, optimal, probes, config);
}

ScalingReport scaling_check(const ScalingFamily& family,
                            const Preferences& prefs) {
  if (prefs.kind == UtilityKind::Exponential)
    throw DomainError(ErrorCode::OutOfRegime,
                      "scaling diagnostics need wealth-fraction weights");
  if (family.sizes.empty())
    throw DomainError(ErrorCode::ConfigInvalid, "no book sizes given");
  for (int n : family.sizes)
    if (n < 2)
      throw DomainError(ErrorCode::ConfigInvalid,
                        "book sizes must be at least 2");
  if (!(family.dispersion >= 0.0))
    throw DomainError(ErrorCode::ConfigInvalid,
                      "dispersion must be nonnegative");

  const OneSectorMarket& base = family.base;
  const double kappa2 = base.v * base.v * (1.0 - base.rho);

  const Policy limit = assemble_policy(
      OneSectorMarket::make(2, base.v, base.rho, base.common_excess,
                            Vector::Zero(2), base.jump_loading, base.riskless,
                            base.measure),
      prefs, AggregateMode::Asymptotic);

  ScalingReport rep;
  rep.exposure_limit = limit.exposure(0);

  for (int n : family.sizes) {
    // Alternating +/- idiosyncratic excess, centered so the sector mean stays
    // common_excess; |R_perp|^2 then grows like n * dispersion^2.
    Vector ortho(n);
    for (int i = 0; i < n; ++i)
      ortho(i) = (i % 2 == 0 ? 1.0 : -1.0) * family.dispersion;
    ortho.array() -= ortho.mean();

    const OneSectorMarket mkt =
        OneSectorMarket::make(n, base.v, base.rho, base.common_excess, ortho,
                              base.jump_loading, base.riskless, base.measure);
    const Policy pol = assemble_policy(mkt, prefs, AggregateMode::FiniteN);
    const double varpi = pol.varpi(0);
    const double kappa1 = base.v * base.v * (1.0 + (n - 1) * base.rho);
    const double perp2 = pol.omega_perp.squaredNorm();

    ScalingRow row;
    row.n = n;
    row.drift = varpi * base.common_excess + pol.omega_perp.dot(ortho);
    row.variance = kappa1 * varpi * varpi / n + kappa2 * perp2;
    row.exposure = pol.exposure(0);
    rep.rows.push_back(row);
  }

  std::vector<double> drift_ratio, var_ratio;
  for (const ScalingRow& row : rep.rows)
    if (row.n >= 100) {
      drift_ratio.push_back(row.drift / row.n);
      var_ratio.push_back(row.variance / row.n);
    }
  auto fit = [](const std::vector<double>& r, double& slope, bool& linear) {
    if (r.size() < 2) {
      slope = r.empty() ? 0.0 : r.front();
      linear = false;
      return;
    }
    slope = mean_of(r);
    linear = slope != 0.0;
    for (double x : r)
      if (std::abs(x - slope) > 0.2 * std::abs(slope)) linear = false;
  };
  fit(drift_ratio, rep.drift_slope, rep.drift_linear);
  fit(var_ratio, rep.variance_slope, rep.variance_linear);

  rep.exposure_bounded = true;
  const double bound = 1.1 * std::abs(rep.exposure_limit);
  for (const ScalingRow& row : rep.rows)
    if (std::abs(row.exposure) > bound + 1e-15) rep.exposure_bounded = false;
  return rep;
}

}  // namespace levyport
