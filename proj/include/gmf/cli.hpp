#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmf/estimators.hpp"

namespace gmf::cli {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string> kSeriesColumns = {
    "beta2", "q", "d", "eps", "log_eps", "log_estimate", "stderr", "n_replicas", "ess", "method"};
inline const std::vector<std::string> kFitColumns = {
    "method", "beta2", "q", "d", "slope", "intercept", "slope_stderr",
    "r2", "rungs", "theory_value", "abs_error"};
inline const std::vector<std::string> kTheoryColumns = {
    "beta2", "regime", "eta_q", "teta_q", "hat_eta_q", "f1", "f2", "f3", "c_star"};
inline const std::vector<std::string> kSweepColumns = {
    "beta2", "q", "d", "regime", "slope", "slope_stderr", "r2", "theory_value", "deviation"};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool deterministic = false;
  std::size_t threads = 1;
};

/// Output of one command: named text files plus the run manifest.
struct CommandOutput {
  std::vector<std::pair<std::string, std::string>> files;  // (file name, contents)
  Json manifest;
};

// Theory table over beta2 = lo, lo + step, ..., <= hi.
std::vector<double> beta2_range(double lo, double hi, double step);
std::string theory_csv(double q, int d, const std::vector<double>& beta2_values);

/// Accepts either a plain config or a manifest (its "config" member is used).
Json unwrap_config(const Json& doc);

struct EstimateSetup {
  estimators::RunConfig run;
  std::string estimator;  // annealed_naive | annealed_tilted | quenched | participation
  Json normalized;        // full config echo including defaults
};

/// Validates every key and fills defaults. Errors name the offending key.
EstimateSetup parse_estimate_config(const Json& config, const RunOptions& opts);

CommandOutput cmd_estimate(const Json& config, const RunOptions& opts);
CommandOutput cmd_sweep(const Json& config, const RunOptions& opts);
CommandOutput cmd_probe(const std::string& kind, const Json& config, const RunOptions& opts);
CommandOutput cmd_toolbox(const std::string& kind, const Json& config, const RunOptions& opts);

std::string series_csv(const estimators::EstimateSeries& series, const theory::ModelParams& p);
std::string fit_csv_header();
std::string fit_csv_row(const std::string& method, const theory::ModelParams& p,
                        const estimators::ExponentFit& fit, double theory_value);

/// Minimal CSV reader for the files written above (no quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};
CsvTable parse_csv(const std::string& text);

std::string format_double(double v);

/// Entry point of the `gmf` executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace gmf::cli
