#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levyport/sim.hpp"
#include "levyport/statics.hpp"

namespace levyport {

// Parsed form of the JSON run configuration (schema "levyport-config-1").
// Parsing validates the document shape and constructs the market up front;
// any violation throws DomainError(ConfigInvalid) whose message starts with
// the offending field path.

enum class OutputFormat { Json, Csv };

enum class StaticsOp { CriticalLambda, Sensitivity, Asymptotic, LargeN };

struct StaticsQuery {
  StaticsOp op = StaticsOp::CriticalLambda;
  SensitivityTarget target = SensitivityTarget::Lambda;
  AsymptoticRegime regime = AsymptoticRegime::LambdaToZero;
  std::vector<int> grid;  // large-n table sizes; empty uses the default
};

struct OptimalityOptions {
  double perturbation = 0.1;
  int directions = 20;
};

struct Config {
  // Exactly one market is engaged.
  std::optional<OneSectorMarket> one_sector;
  std::optional<MultiSectorMarket> multisector;
  std::optional<RawMarket> raw;

  Preferences prefs = Preferences::power(2.0, 0.05);
  AggregateMode mode = AggregateMode::FiniteN;

  std::vector<SweepAxis> sweep_axes;
  SimConfig sim;
  std::optional<OptimalityOptions> optimality;
  std::string path_detail;  // per-path CSV target; empty = none
  std::optional<StaticsQuery> statics;

  std::string out_path;  // empty = stdout
  OutputFormat format = OutputFormat::Json;
  bool format_set = false;  // whether the config chose a format explicitly

  const char* market_kind() const;
  RawMarket as_raw() const;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Serialization helpers shared by the CLI. All floating-point values are
// printed with 17 significant digits so documents round-trip exactly;
// non-finite values become null in JSON and nan/inf tokens in CSV.
std::string format_float(double v);

class JsonWriter {
 public:
  void begin_object();
  void end_object();
  void begin_array();
  void end_array();
  void key(std::string_view k);
  void number(double v);
  void integer(long long v);
  void unsigned_integer(unsigned long long v);
  void boolean(bool v);
  void string(std::string_view s);

  void field(std::string_view k, double v);
  void field(std::string_view k, long long v);
  void field(std::string_view k, unsigned long long v);
  void field(std::string_view k, int v);
  void field(std::string_view k, bool v);
  void field(std::string_view k, std::string_view v);
  void field(std::string_view k, const char* v);
  void field(std::string_view k, const Vector& v);
  void field(std::string_view k, const Matrix& m);

  const std::string& str() const { return out_; }

 private:
  void sep();
  std::string out_;
  std::vector<char> stack_;  // 'o' or 'a'
  std::vector<bool> first_;
  bool expect_value_ = false;
};

// Fixed sweep CSV schema: one column per grid axis in canonical order, then
// varpi, y, objective, K, status. LF line endings, mandatory header.
std::string sweep_csv(const SweepResult& result);
std::string sweep_json(const SweepResult& result);

// Per-path simulation detail: path, terminal_wealth, value, jumps, bankrupt.
std::string path_detail_csv(const SimResult& result);

}  // namespace levyport
