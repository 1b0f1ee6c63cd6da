#include "levyport/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "levyport/errors.hpp"

namespace levyport {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw DomainError(ErrorCode::ConfigInvalid,
                    path.empty() ? msg : path + ": " + msg);
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

const json& member(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(join(path, key), "required field missing");
  return *it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) bad(join(path, it.key().c_str()), "unknown field");
  }
}

const json& object_at(const json& obj, const std::string& path,
                      const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_object()) bad(join(path, key), "expected an object");
  return v;
}

double number_at(const json& obj, const std::string& path, const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_number()) bad(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(join(path, key), "must be finite");
  return x;
}

double number_or(const json& obj, const std::string& path, const char* key,
                 double fallback) {
  if (obj.find(key) == obj.end()) return fallback;
  return number_at(obj, path, key);
}

long integer_at(const json& obj, const std::string& path, const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_number_integer()) bad(join(path, key), "expected an integer");
  return v.get<long>();
}

long integer_or(const json& obj, const std::string& path, const char* key,
                long fallback) {
  if (obj.find(key) == obj.end()) return fallback;
  return integer_at(obj, path, key);
}

bool bool_or(const json& obj, const std::string& path, const char* key,
             bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) bad(join(path, key), "expected true or false");
  return it->get<bool>();
}

std::string string_at(const json& obj, const std::string& path,
                      const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_string()) bad(join(path, key), "expected a string");
  return v.get<std::string>();
}

Vector vector_at(const json& obj, const std::string& path, const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_array()) bad(join(path, key), "expected an array of numbers");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) bad(join(path, key), "expected an array of numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    if (!std::isfinite(out(static_cast<Eigen::Index>(i))))
      bad(join(path, key), "entries must be finite");
  }
  return out;
}

Matrix matrix_at(const json& obj, const std::string& path, const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_array() || v.empty() || !v[0].is_array())
    bad(join(path, key), "expected an array of equal-length rows");
  const std::size_t cols = v[0].size();
  Matrix out(v.size(), cols);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols)
      bad(join(path, key), "expected an array of equal-length rows");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!v[i][j].is_number())
        bad(join(path, key), "matrix entries must be numbers");
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          v[i][j].get<double>();
      if (!std::isfinite(out(static_cast<Eigen::Index>(i),
                             static_cast<Eigen::Index>(j))))
        bad(join(path, key), "matrix entries must be finite");
    }
  }
  return out;
}

LevyJumpMeasure parse_measure(const json& obj, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  const std::string kind = string_at(obj, path, "kind");
  try {
    if (kind == "power_law") {
      check_keys(obj, path, {"kind", "lambda_pos", "lambda_neg"});
      return LevyJumpMeasure::asymmetric_power_law(
          number_at(obj, path, "lambda_pos"),
          number_at(obj, path, "lambda_neg"));
    }
    if (kind == "uniform") {
      check_keys(obj, path, {"kind", "lambda", "lo", "hi"});
      return LevyJumpMeasure::uniform_density(number_at(obj, path, "lambda"),
                                              number_at(obj, path, "lo"),
                                              number_at(obj, path, "hi"));
    }
    if (kind == "point_mass") {
      check_keys(obj, path, {"kind", "lambda", "z"});
      return LevyJumpMeasure::point_mass(number_at(obj, path, "lambda"),
                                         number_at(obj, path, "z"));
    }
    if (kind == "discrete") {
      check_keys(obj, path, {"kind", "lambda", "atoms"});
      const json& atoms = member(obj, path, "atoms");
      if (!atoms.is_array()) bad(join(path, "atoms"), "expected an array");
      std::vector<JumpAtom> parsed;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string apath = join(path, "atoms");
        if (!atoms[i].is_object()) bad(apath, "atoms must be objects");
        check_keys(atoms[i], apath, {"z", "p"});
        parsed.push_back(
            {number_at(atoms[i], apath, "z"), number_at(atoms[i], apath, "p")});
      }
      return LevyJumpMeasure::discrete_compound(number_at(obj, path, "lambda"),
                                                std::move(parsed));
    }
  } catch (const DomainError& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    bad(path, e.what());
  }
  bad(join(path, "kind"),
      "must be one of power_law, uniform, point_mass, discrete");
}

void parse_market(const json& obj, Config& cfg) {
  const std::string path = "market";
  if (!obj.is_object()) bad(path, "expected an object");
  const std::string kind = string_at(obj, path, "kind");
  try {
    if (kind == "one_sector") {
      check_keys(obj, path,
                 {"kind", "assets", "volatility", "rho", "excess_return",
                  "ortho_excess", "jump_size", "riskless", "measure"});
      const long n = integer_at(obj, path, "assets");
      Vector ortho = obj.find("ortho_excess") != obj.end()
                         ? vector_at(obj, path, "ortho_excess")
                         : Vector::Zero(std::max<long>(n, 0));
      cfg.one_sector = OneSectorMarket::make(
          static_cast<int>(n), number_at(obj, path, "volatility"),
          number_at(obj, path, "rho"), number_at(obj, path, "excess_return"),
          std::move(ortho), number_at(obj, path, "jump_size"),
          number_at(obj, path, "riskless"),
          parse_measure(member(obj, path, "measure"), join(path, "measure")));
      return;
    }
    if (kind == "multisector") {
      check_keys(obj, path,
                 {"kind", "assets_per_sector", "volatility", "rho",
                  "excess_return", "ortho_excess", "loadings", "riskless",
                  "measures"});
      const long k = integer_at(obj, path, "assets_per_sector");
      const Vector v = vector_at(obj, path, "volatility");
      const long n = k * v.size();
      Vector ortho = obj.find("ortho_excess") != obj.end()
                         ? vector_at(obj, path, "ortho_excess")
                         : Vector::Zero(std::max<long>(n, 0));
      const json& ms = member(obj, path, "measures");
      if (!ms.is_array()) bad(join(path, "measures"), "expected an array");
      std::vector<LevyJumpMeasure> measures;
      for (std::size_t i = 0; i < ms.size(); ++i)
        measures.push_back(parse_measure(ms[i], join(path, "measures")));
      cfg.multisector = MultiSectorMarket::make(
          static_cast<int>(k), v, matrix_at(obj, path, "rho"),
          vector_at(obj, path, "excess_return"), std::move(ortho),
          matrix_at(obj, path, "loadings"), number_at(obj, path, "riskless"),
          std::move(measures));
      return;
    }
    if (kind == "raw") {
      check_keys(obj, path,
                 {"kind", "sigma", "excess_return", "jumps", "measures",
                  "riskless"});
      RawMarket raw;
      raw.sigma = matrix_at(obj, path, "sigma");
      raw.excess = vector_at(obj, path, "excess_return");
      raw.riskless = number_at(obj, path, "riskless");
      if (obj.find("jumps") != obj.end()) {
        const json& js = member(obj, path, "jumps");
        if (!js.is_array()) bad(join(path, "jumps"), "expected an array");
        for (std::size_t i = 0; i < js.size(); ++i) {
          if (!js[i].is_array())
            bad(join(path, "jumps"), "each loading must be an array");
          Vector load(js[i].size());
          for (std::size_t j = 0; j < js[i].size(); ++j) {
            if (!js[i][j].is_number())
              bad(join(path, "jumps"), "loadings must be numbers");
            load(static_cast<Eigen::Index>(j)) = js[i][j].get<double>();
          }
          raw.jumps.push_back(std::move(load));
        }
      }
      if (obj.find("measures") != obj.end()) {
        const json& ms = member(obj, path, "measures");
        if (!ms.is_array()) bad(join(path, "measures"), "expected an array");
        for (std::size_t i = 0; i < ms.size(); ++i)
          raw.measures.push_back(parse_measure(ms[i], join(path, "measures")));
      }
      if (raw.jumps.size() != raw.measures.size())
        bad(path, "jumps and measures must have the same length");
      cfg.raw = std::move(raw);
      return;
    }
  } catch (const DomainError& e) {
    // Factory-level rejection of market parameters is a config problem here.
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    bad(path, e.what());
  }
  bad(join(path, "kind"), "must be one of one_sector, multisector, raw");
}

Preferences parse_preferences(const json& obj) {
  const std::string path = "preferences";
  if (!obj.is_object()) bad(path, "expected an object");
  const std::string kind = string_at(obj, path, "kind");
  try {
    if (kind == "power") {
      check_keys(obj, path, {"kind", "gamma", "beta"});
      return Preferences::power(number_at(obj, path, "gamma"),
                                number_at(obj, path, "beta"));
    }
    if (kind == "exponential") {
      check_keys(obj, path, {"kind", "q", "beta"});
      return Preferences::exponential(number_at(obj, path, "q"),
                                      number_at(obj, path, "beta"));
    }
    if (kind == "log") {
      check_keys(obj, path, {"kind", "beta"});
      return Preferences::log_utility(number_at(obj, path, "beta"));
    }
  } catch (const DomainError& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    bad(path, e.what());
  }
  bad(join(path, "kind"), "must be one of power, exponential, log");
}

SweepParameter parse_sweep_parameter(const std::string& name,
                                     const std::string& path) {
  for (SweepParameter p :
       {SweepParameter::Lambda, SweepParameter::LambdaPos,
        SweepParameter::LambdaNeg, SweepParameter::JumpSize,
        SweepParameter::Gamma, SweepParameter::Rho, SweepParameter::Volatility,
        SweepParameter::ExcessReturn, SweepParameter::AssetCount})
    if (name == sweep_parameter_name(p)) return p;
  bad(path, "unknown sweep parameter '" + name + "'");
}

void parse_sweep(const json& obj, Config& cfg) {
  const std::string path = "sweep";
  if (!obj.is_object()) bad(path, "expected an object");
  check_keys(obj, path, {"axes"});
  const json& axes = member(obj, path, "axes");
  if (!axes.is_array() || axes.empty())
    bad(join(path, "axes"), "expected a nonempty array");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const std::string apath = join(path, "axes");
    if (!axes[i].is_object()) bad(apath, "each axis must be an object");
    check_keys(axes[i], apath, {"parameter", "values"});
    SweepAxis axis;
    axis.parameter = parse_sweep_parameter(
        string_at(axes[i], apath, "parameter"), join(apath, "parameter"));
    const Vector vals = vector_at(axes[i], apath, "values");
    axis.values.assign(vals.data(), vals.data() + vals.size());
    cfg.sweep_axes.push_back(std::move(axis));
  }
}

void parse_simulate(const json& obj, Config& cfg) {
  const std::string path = "simulate";
  if (!obj.is_object()) bad(path, "expected an object");
  check_keys(obj, path,
             {"paths", "horizon", "dt", "eps", "seed", "antithetic",
              "optimality", "path_detail"});
  cfg.sim.paths = integer_or(obj, path, "paths", cfg.sim.paths);
  cfg.sim.horizon = number_or(obj, path, "horizon", cfg.sim.horizon);
  cfg.sim.dt = number_or(obj, path, "dt", cfg.sim.dt);
  cfg.sim.eps = number_or(obj, path, "eps", cfg.sim.eps);
  if (obj.find("seed") != obj.end()) {
    const json& s = *obj.find("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
      bad(join(path, "seed"), "expected a nonnegative integer");
    cfg.sim.seed = s.get<std::uint64_t>();
  }
  cfg.sim.antithetic = bool_or(obj, path, "antithetic", cfg.sim.antithetic);
  if (obj.find("path_detail") != obj.end())
    cfg.path_detail = string_at(obj, path, "path_detail");
  if (obj.find("optimality") != obj.end()) {
    const json& op = object_at(obj, path, "optimality");
    const std::string opath = join(path, "optimality");
    check_keys(op, opath, {"perturbation", "directions"});
    OptimalityOptions opts;
    opts.perturbation = number_or(op, opath, "perturbation", opts.perturbation);
    opts.directions = static_cast<int>(
        integer_or(op, opath, "directions", opts.directions));
    cfg.optimality = opts;
  }
}

void parse_statics(const json& obj, Config& cfg) {
  const std::string path = "statics";
  if (!obj.is_object()) bad(path, "expected an object");
  check_keys(obj, path, {"op", "target", "regime", "grid"});
  StaticsQuery q;
  const std::string op = string_at(obj, path, "op");
  if (op == "critical_lambda") {
    q.op = StaticsOp::CriticalLambda;
  } else if (op == "sensitivity") {
    q.op = StaticsOp::Sensitivity;
    const std::string target = string_at(obj, path, "target");
    if (target == "lambda")
      q.target = SensitivityTarget::Lambda;
    else if (target == "jump_size")
      q.target = SensitivityTarget::JumpSize;
    else if (target == "gamma")
      q.target = SensitivityTarget::Gamma;
    else
      bad(join(path, "target"), "must be one of lambda, jump_size, gamma");
  } else if (op == "asymptotic") {
    q.op = StaticsOp::Asymptotic;
    const std::string regime = string_at(obj, path, "regime");
    if (regime == "lambda_to_zero")
      q.regime = AsymptoticRegime::LambdaToZero;
    else if (regime == "lambda_to_infinity")
      q.regime = AsymptoticRegime::LambdaToInfinity;
    else if (regime == "small_lambda")
      q.regime = AsymptoticRegime::SmallLambdaExpansion;
    else
      bad(join(path, "regime"),
          "must be one of lambda_to_zero, lambda_to_infinity, small_lambda");
  } else if (op == "large_n") {
    q.op = StaticsOp::LargeN;
    if (obj.find("grid") != obj.end()) {
      const Vector g = vector_at(obj, path, "grid");
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (g(i) != std::floor(g(i)))
          bad(join(path, "grid"), "sizes must be integers");
        q.grid.push_back(static_cast<int>(g(i)));
      }
    }
  } else {
    bad(join(path, "op"),
        "must be one of critical_lambda, sensitivity, asymptotic, large_n");
  }
  cfg.statics = q;
}

void parse_output(const json& obj, Config& cfg) {
  const std::string path = "output";
  if (!obj.is_object()) bad(path, "expected an object");
  check_keys(obj, path, {"path", "format"});
  if (obj.find("path") != obj.end())
    cfg.out_path = string_at(obj, path, "path");
  if (obj.find("format") != obj.end()) {
    const std::string f = string_at(obj, path, "format");
    if (f == "json")
      cfg.format = OutputFormat::Json;
    else if (f == "csv")
      cfg.format = OutputFormat::Csv;
    else
      bad(join(path, "format"), "must be json or csv");
    cfg.format_set = true;
  }
}

void string_body(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

}  // namespace

const char* Config::market_kind() const {
  if (one_sector) return "one_sector";
  if (multisector) return "multisector";
  return "raw";
}

RawMarket Config::as_raw() const {
  if (one_sector) return to_raw(*one_sector);
  if (multisector) return to_raw(*multisector);
  return *raw;
}

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("", "top-level document must be an object");
  check_keys(j, "",
             {"schema", "market", "preferences", "solve", "statics", "sweep",
              "simulate", "output"});
  if (string_at(j, "", "schema") != "levyport-config-1")
    bad("schema", "expected \"levyport-config-1\"");

  Config cfg;
  parse_market(object_at(j, "", "market"), cfg);
  if (j.find("preferences") != j.end())
    cfg.prefs = parse_preferences(*j.find("preferences"));
  if (j.find("solve") != j.end()) {
    const json& s = object_at(j, "", "solve");
    check_keys(s, "solve", {"mode"});
    if (s.find("mode") != s.end()) {
      const std::string mode = string_at(s, "solve", "mode");
      if (mode == "finite_n")
        cfg.mode = AggregateMode::FiniteN;
      else if (mode == "asymptotic")
        cfg.mode = AggregateMode::Asymptotic;
      else
        bad("solve.mode", "must be finite_n or asymptotic");
    }
  }
  if (j.find("sweep") != j.end()) parse_sweep(*j.find("sweep"), cfg);
  if (j.find("simulate") != j.end()) parse_simulate(*j.find("simulate"), cfg);
  if (j.find("statics") != j.end()) parse_statics(*j.find("statics"), cfg);
  if (j.find("output") != j.end()) parse_output(*j.find("output"), cfg);
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("", "cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void JsonWriter::sep() {
  if (expect_value_) {
    expect_value_ = false;
    return;
  }
  if (!first_.empty()) {
    if (!first_.back()) out_ += ',';
    first_.back() = false;
  }
}

void JsonWriter::begin_object() {
  sep();
  out_ += '{';
  stack_.push_back('o');
  first_.push_back(true);
}

void JsonWriter::end_object() {
  out_ += '}';
  stack_.pop_back();
  first_.pop_back();
}

void JsonWriter::begin_array() {
  sep();
  out_ += '[';
  stack_.push_back('a');
  first_.push_back(true);
}

void JsonWriter::end_array() {
  out_ += ']';
  stack_.pop_back();
  first_.pop_back();
}

void JsonWriter::key(std::string_view k) {
  if (!first_.back()) out_ += ',';
  first_.back() = false;
  string_body(out_, k);
  out_ += ':';
  expect_value_ = true;
}

void JsonWriter::number(double v) {
  sep();
  if (!std::isfinite(v)) {
    out_ += "null";
    return;
  }
  out_ += format_float(v);
}

void JsonWriter::integer(long long v) {
  sep();
  out_ += std::to_string(v);
}

void JsonWriter::unsigned_integer(unsigned long long v) {
  sep();
  out_ += std::to_string(v);
}

void JsonWriter::boolean(bool v) {
  sep();
  out_ += v ? "true" : "false";
}

void JsonWriter::string(std::string_view s) {
  sep();
  string_body(out_, s);
}

void JsonWriter::field(std::string_view k, double v) {
  key(k);
  number(v);
}
void JsonWriter::field(std::string_view k, long long v) {
  key(k);
  integer(v);
}
void JsonWriter::field(std::string_view k, unsigned long long v) {
  key(k);
  unsigned_integer(v);
}
void JsonWriter::field(std::string_view k, int v) {
  key(k);
  integer(v);
}
void JsonWriter::field(std::string_view k, bool v) {
  key(k);
  boolean(v);
}
void JsonWriter::field(std::string_view k, std::string_view v) {
  key(k);
  string(v);
}
void JsonWriter::field(std::string_view k, const char* v) {
  key(k);
  string(v);
}
void JsonWriter::field(std::string_view k, const Vector& v) {
  key(k);
  begin_array();
  for (Eigen::Index i = 0; i < v.size(); ++i) number(v(i));
  end_array();
}
void JsonWriter::field(std::string_view k, const Matrix& m) {
  key(k);
  begin_array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    begin_array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) number(m(i, j));
    end_array();
  }
  end_array();
}

std::string sweep_csv(const SweepResult& result) {
  std::string out;
  for (const SweepAxis& axis : result.axes) {
    out += sweep_parameter_name(axis.parameter);
    out += ',';
  }
  out += "varpi,y,objective,K,status\n";
  for (const SweepRow& row : result.rows) {
    for (double p : row.point) {
      out += format_float(p);
      out += ',';
    }
    out += format_float(row.varpi);
    out += ',';
    out += format_float(row.exposure);
    out += ',';
    out += format_float(row.objective);
    out += ',';
    out += format_float(row.K);
    out += ',';
    out += row.status;
    out += '\n';
  }
  return out;
}

std::string sweep_json(const SweepResult& result) {
  JsonWriter w;
  w.begin_object();
  w.field("schema", "levyport-result-1");
  w.field("command", "sweep");
  w.key("axes");
  w.begin_array();
  for (const SweepAxis& axis : result.axes) {
    w.begin_object();
    w.field("parameter", sweep_parameter_name(axis.parameter));
    w.key("values");
    w.begin_array();
    for (double v : axis.values) w.number(v);
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.key("rows");
  w.begin_array();
  for (const SweepRow& row : result.rows) {
    w.begin_object();
    w.key("point");
    w.begin_array();
    for (double p : row.point) w.number(p);
    w.end_array();
    w.field("varpi", row.varpi);
    w.field("y", row.exposure);
    w.field("objective", row.objective);
    w.field("K", row.K);
    w.field("status", row.status);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::string path_detail_csv(const SimResult& result) {
  std::string out = "path,terminal_wealth,value,jumps,bankrupt\n";
  for (long i = 0; i < result.paths; ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_float(result.path_terminal[i]);
    out += ',';
    out += format_float(result.has_value
                            ? result.path_value[i]
                            : std::numeric_limits<double>::quiet_NaN());
    out += ',';
    out += std::to_string(result.path_jumps[i]);
    out += ',';
    out += result.path_bankrupt[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace levyport
