#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "levyport/config.hpp"
#include "levyport/errors.hpp"
#include "levyport/market.hpp"
#include "levyport/sim.hpp"
#include "levyport/solver.hpp"
#include "levyport/statics.hpp"

namespace {

using namespace levyport;

void write_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "cannot write output file: " + out_path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void require_json(const Config& cfg, const char* command) {
  if (cfg.format_set && cfg.format == OutputFormat::Csv)
    throw DomainError(ErrorCode::ConfigInvalid,
                      std::string("csv output is only available for the sweep "
                                  "command, not ") +
                          command);
}

double gamma_of(const Preferences& prefs) {
  return prefs.kind == UtilityKind::Log ? 1.0 : prefs.gamma;
}

Policy solve_policy(const Config& cfg) {
  if (cfg.one_sector) return assemble_policy(*cfg.one_sector, cfg.prefs, cfg.mode);
  if (cfg.multisector) return assemble_policy(*cfg.multisector, cfg.prefs);
  return solve_raw(*cfg.raw, cfg.prefs);
}

void preferences_fields(JsonWriter& w, const Preferences& prefs) {
  w.key("preferences");
  w.begin_object();
  switch (prefs.kind) {
    case UtilityKind::Power:
      w.field("kind", "power");
      w.field("gamma", prefs.gamma);
      break;
    case UtilityKind::Exponential:
      w.field("kind", "exponential");
      w.field("q", prefs.q);
      break;
    case UtilityKind::Log:
      w.field("kind", "log");
      break;
  }
  w.field("beta", prefs.beta);
  w.end_object();
}

void policy_fields(JsonWriter& w, const Policy& pol, const Preferences& prefs) {
  w.field("omega", pol.omega);
  w.field("omega0", pol.omega0);
  w.field("omega_bar", pol.omega_bar);
  w.field("omega_perp", pol.omega_perp);
  w.field("varpi", pol.varpi);
  w.field("exposure", pol.exposure);
  w.field("K", pol.K);
  if (prefs.kind == UtilityKind::Log) w.field("k2", pol.k2);
  w.field("objective", pol.objective);
  w.field("branch", branch_name(pol.branch));
  w.field("residual", pol.residual);
  w.field("transversality_ok", pol.transversality_ok);
  if (pol.funds) {
    w.key("funds");
    w.begin_object();
    w.field("delta1", pol.funds->delta1);
    w.field("delta2", pol.funds->delta2);
    w.field("y", pol.funds->y);
    w.end_object();
  }
}

int cmd_solve(const Config& cfg) {
  require_json(cfg, "solve");
  const Policy pol = solve_policy(cfg);
  JsonWriter w;
  w.begin_object();
  w.field("schema", "levyport-result-1");
  w.field("command", "solve");
  w.field("market", cfg.market_kind());
  preferences_fields(w, cfg.prefs);
  policy_fields(w, pol, cfg.prefs);
  w.end_object();
  write_text(w.str() + "\n", cfg.out_path);
  return 0;
}

int cmd_decompose(const Config& cfg) {
  require_json(cfg, "decompose");
  if (cfg.raw)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "decompose needs a structured (one_sector or "
                      "multisector) market");
  const SigmaDecomposition d = cfg.one_sector
                                   ? decompose_sigma(*cfg.one_sector)
                                   : decompose_sigma(*cfg.multisector);
  const RawMarket raw = cfg.as_raw();
  const auto [common, perp] = decompose_returns(raw.excess, d.m, d.k);

  JsonWriter w;
  w.begin_object();
  w.field("schema", "levyport-result-1");
  w.field("command", "decompose");
  w.field("market", cfg.market_kind());
  w.field("sectors", d.m);
  w.field("assets_per_sector", d.k);
  w.field("kappa", d.kappa);
  if (d.m == 1) {
    w.field("kappa1", d.kappa1);
    w.field("kappa2", d.kappa2);
  }
  w.field("excess_common", common);
  w.field("excess_perp", perp);
  w.field("sigma", d.sigma);
  w.field("sigma_bar", d.sigma_bar);
  w.field("sigma_perp", d.sigma_perp);
  w.end_object();
  write_text(w.str() + "\n", cfg.out_path);
  return 0;
}

int cmd_statics(const Config& cfg) {
  require_json(cfg, "statics");
  if (!cfg.statics)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "statics: block required for this command");
  if (!cfg.one_sector)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "statics commands need a one_sector market");
  const OneSectorMarket& mkt = *cfg.one_sector;
  const StaticsQuery& q = *cfg.statics;

  JsonWriter w;
  w.begin_object();
  w.field("schema", "levyport-result-1");
  w.field("command", "statics");
  switch (q.op) {
    case StaticsOp::CriticalLambda: {
      w.field("op", "critical_lambda");
      w.field("value", critical_lambda(mkt.common_excess, mkt.jump_loading,
                                       mkt.measure));
      break;
    }
    case StaticsOp::Sensitivity: {
      w.field("op", "sensitivity");
      const char* name = q.target == SensitivityTarget::Lambda ? "lambda"
                         : q.target == SensitivityTarget::JumpSize
                             ? "jump_size"
                             : "gamma";
      w.field("target", name);
      w.field("value", sensitivity(mkt, gamma_of(cfg.prefs), cfg.mode, q.target));
      break;
    }
    case StaticsOp::Asymptotic: {
      w.field("op", "asymptotic");
      const char* name = q.regime == AsymptoticRegime::LambdaToZero
                             ? "lambda_to_zero"
                         : q.regime == AsymptoticRegime::LambdaToInfinity
                             ? "lambda_to_infinity"
                             : "small_lambda";
      w.field("regime", name);
      const AsymptoticBehavior b =
          asymptotic_behavior(mkt, gamma_of(cfg.prefs), q.regime);
      w.field("value", b.value);
      w.field("solvency_kink", b.solvency_kink);
      break;
    }
    case StaticsOp::LargeN: {
      w.field("op", "large_n");
      const LargeNLimit lim = large_n_limit(mkt, cfg.prefs, q.grid);
      w.field("varpi_infinity", lim.varpi_infinity);
      w.key("table");
      w.begin_array();
      for (const LargeNRow& row : lim.table) {
        w.begin_object();
        w.field("n", row.n);
        w.field("varpi", row.varpi);
        w.field("gap", row.gap);
        w.end_object();
      }
      w.end_array();
      break;
    }
  }
  w.end_object();
  write_text(w.str() + "\n", cfg.out_path);
  return 0;
}

int cmd_sweep(const Config& cfg) {
  if (!cfg.one_sector)
    throw DomainError(ErrorCode::ConfigInvalid,
                      "sweep needs a one_sector base market");
  if (cfg.sweep_axes.empty())
    throw DomainError(ErrorCode::ConfigInvalid,
                      "sweep: axes block required for this command");
  SweepSpec spec;
  spec.base = *cfg.one_sector;
  spec.prefs = cfg.prefs;
  spec.mode = cfg.mode;
  spec.axes = cfg.sweep_axes;
  const SweepResult result = sweep(spec);

  const bool csv = cfg.format_set ? cfg.format == OutputFormat::Csv : true;
  write_text(csv ? sweep_csv(result) : sweep_json(result) + "\n", cfg.out_path);
  return 0;
}

int cmd_simulate(const Config& cfg) {
  require_json(cfg, "simulate");
  const Policy pol = solve_policy(cfg);
  const RawMarket raw = cfg.as_raw();
  const ValueEstimate est = estimate_value(raw, pol, cfg.prefs, cfg.sim);
  const double z = est.stderr_ > 0.0
                       ? (est.estimate - est.benchmark) / est.stderr_
                       : 0.0;

  JsonWriter w;
  w.begin_object();
  w.field("schema", "levyport-result-1");
  w.field("command", "simulate");
  w.field("estimate", est.estimate);
  w.field("stderr", est.stderr_);
  w.field("benchmark", est.benchmark);
  w.field("z_score", z);
  w.field("consumption", pol.K);
  w.field("paths", static_cast<long long>(cfg.sim.paths));
  w.field("horizon", cfg.sim.horizon);
  w.field("dt", cfg.sim.dt);
  w.field("eps", cfg.sim.eps);
  w.field("seed", static_cast<unsigned long long>(cfg.sim.seed));
  w.field("antithetic", cfg.sim.antithetic);
  w.field("total_jumps", static_cast<long long>(est.detail.total_jumps));
  w.field("bankruptcies", static_cast<long long>(est.detail.bankruptcies));
  if (cfg.optimality) {
    const OptimalityReport rep =
        optimality_check(raw, cfg.prefs, pol, cfg.optimality->perturbation,
                         cfg.optimality->directions, cfg.sim);
    w.key("optimality");
    w.begin_object();
    w.field("perturbation", cfg.optimality->perturbation);
    w.field("directions", cfg.optimality->directions);
    w.field("dominance_fraction", rep.dominance_fraction);
    w.field("base_value", rep.base_value);
    w.field("base_stderr", rep.base_stderr);
    w.key("rows");
    w.begin_array();
    for (const OptimalityRow& row : rep.rows) {
      w.begin_object();
      w.field("perturbed_value", row.perturbed_value);
      w.field("perturbed_K", row.perturbed_K);
      w.field("delta", row.delta);
      w.field("delta_stderr", row.delta_stderr);
      w.field("dominated", row.dominated);
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.end_object();
  if (!cfg.path_detail.empty())
    write_text(path_detail_csv(est.detail), cfg.path_detail);
  write_text(w.str() + "\n", cfg.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Optimal consumption and portfolio policies under diffusive and jump "
      "risk"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path, format;
  std::uint64_t seed = 0;
  auto* opt_config =
      app.add_option("--config", config_path, "JSON configuration file");
  auto* opt_out = app.add_option("--out", out_path,
                                 "output file (default: standard output)");
  auto* opt_seed =
      app.add_option("--seed", seed, "override the simulation seed");
  auto* opt_format = app.add_option("--format", format, "json or csv")
                         ->check(CLI::IsMember({"json", "csv"}));

  for (const char* name : {"solve", "decompose", "statics", "sweep",
                           "simulate"}) {
    CLI::App* sub = app.add_subcommand(
        name, std::string("run the ") + name + " command");
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (opt_config->count() == 0)
      throw DomainError(ErrorCode::ConfigInvalid, "--config is required");
    Config cfg = load_config(config_path);
    if (opt_out->count() > 0) cfg.out_path = out_path;
    if (opt_seed->count() > 0) cfg.sim.seed = seed;
    if (opt_format->count() > 0) {
      cfg.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
      cfg.format_set = true;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "solve") return cmd_solve(cfg);
    if (cmd == "decompose") return cmd_decompose(cfg);
    if (cmd == "statics") return cmd_statics(cfg);
    if (cmd == "sweep") return cmd_sweep(cfg);
    return cmd_simulate(cfg);
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());  // names the error variant
    return e.code() == ErrorCode::ConfigInvalid ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  } catch (...) {
    std::fprintf(stderr, "internal error\n");
    return 4;
  }
}
