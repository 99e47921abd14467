#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bco/experiments.hpp"

namespace bco::runner {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A trace or summary file does not follow the expected layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Everything one `run` invocation needs. The suite horizon is taken from
/// each checkpoint; delta and xi default to 1/T and delta/R per checkpoint,
/// and sigma defaults to the modulus certified by the generated suite.
struct RunConfig {
  SuiteSpec suite;
  ScheduleMode mode = ScheduleMode::convex;
  double c = 0.5;
  double epsilon = 0.05;
  std::optional<double> delta;
  std::optional<double> xi;
  std::optional<double> sigma;
  std::vector<Algorithm> algorithms{Algorithm::main};
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::int64_t> checkpoints = default_checkpoints();
  std::string output_dir;
  PenaltyEvalPoint penalty_eval_point = PenaltyEvalPoint::previous;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parse the TOML subset used by config files: [section] headers, `key = value`
/// lines, strings, numbers and one-line arrays, `#` comments. Unknown sections
/// or keys, duplicates and type mismatches are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Schedule for one checkpoint, with horizon-dependent defaults filled in.
ScheduleParams<double> resolve_schedule(const RunConfig& config, std::int64_t horizon,
                                        const Instance& instance);

std::string_view to_string(PenaltyEvalPoint p);
std::optional<PenaltyEvalPoint> parse_penalty_eval_point(std::string_view s);
std::string_view to_string(ScheduleMode m);
std::optional<ScheduleMode> parse_schedule_mode(std::string_view s);

/// 17 significant digits, so every double round-trips.
std::string format_double(double value);

inline constexpr std::string_view kTraceHeader =
    "t,x,lambda,alpha,gamma,eta,loss_plus,loss_minus,g_at_x,g_plus,solver_method,solver_gap";
inline constexpr std::string_view kSummaryHeader =
    "algorithm,seed,T,regret,v_hard,v_soft,slope_regret,slope_vhard,r2_regret,r2_vhard";

void write_trace_csv(std::ostream& out, const Trace<double>& trace);
/// Reads back t, x, lambda, step sizes, observations, g and solver fields.
/// Directions and gradient estimates are not stored and come back empty.
Trace<double> read_trace_csv(std::istream& in);

struct TraceKey {
  Algorithm algorithm;
  std::uint64_t seed;
  std::int64_t horizon;

  friend bool operator==(const TraceKey&, const TraceKey&) = default;
};

std::string trace_file_name(const TraceKey& key);
std::optional<TraceKey> parse_trace_file_name(std::string_view name);

struct SummaryRow {
  std::string algorithm;
  std::string seed;  // a seed number, or "median"
  std::int64_t horizon;
  std::optional<double> regret;
  double v_hard;
  double v_soft;
  std::optional<double> slope_regret;
  std::optional<double> slope_vhard;
  std::optional<double> r2_regret;
  std::optional<double> r2_vhard;
};

/// Per (algorithm, seed, T): final R_T, V_hard, V_soft. Per (algorithm, T): the
/// median over seeds, with the growth exponents fitted across T on those rows.
/// Regret needs the suite, read from config.toml in `dir`; without it the
/// regret columns stay empty.
std::vector<SummaryRow> summarize(const std::filesystem::path& dir);
std::string format_summary_csv(const std::vector<SummaryRow>& rows);

/// Validate, run every (algorithm, seed, checkpoint), write one trace per run,
/// the resolved config.toml and summary.csv. On failure every file this call
/// created is removed and the error is rethrown.
void run_experiment(const RunConfig& config, unsigned parallel = 1);

}  // namespace bco::runner
