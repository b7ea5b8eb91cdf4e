#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmf/field.hpp"
#include "gmf/theory.hpp"

namespace gmf::estimators {

/// Strictly decreasing cutoffs with one grid per rung (spacing <= eps/2).
struct EpsLadder {
  std::vector<double> eps;
  std::vector<field::GridSpec> grids;

  std::size_t size() const { return eps.size(); }
};

/// Builds the coarsest admissible grid for every eps. Duplicate or
/// non-decreasing entries are rejected with a message naming the rung.
EpsLadder make_ladder(int d, const std::vector<double>& eps,
                      std::size_t max_points = field::kDefaultMaxPoints);

/// eps = 2^-first, ..., 2^-last.
std::vector<double> dyadic_eps(int first, int last);

enum class TiltKind { None, Fixed, Auto };

struct TiltPolicy {
  TiltKind kind = TiltKind::None;
  double c = 0.0;  // used by Fixed
};

enum class ULocation { Uniform, Center };

struct RunConfig {
  theory::ModelParams params;
  EpsLadder ladder;
  std::size_t replicas = 1000;
  std::uint64_t master_seed = 1;
  TiltPolicy tilt;
  ULocation u_location = ULocation::Uniform;
  double g_const = 0.0;
  double jitter_cap_rel = 1e-8;
  std::size_t batch = 256;
  // Rungs run concurrently when > 1; replicas inside a rung are always
  // reduced in index order, so results do not depend on this.
  std::size_t threads = 1;
};

inline constexpr std::size_t kMinReplicas = 100;
inline constexpr double kKurtosisWarning = 100.0;
inline constexpr double kEssWarningFraction = 0.01;

struct RungEstimate {
  double eps = 0.0;
  int n_per_side = 0;
  double log_estimate = 0.0;
  double stderr_log = 0.0;
  std::size_t n_replicas = 0;
  double ess = 0.0;
  double jitter = 0.0;
  double median = 0.0;           // quenched only; else equals log_estimate
  double excess_kurtosis = 0.0;  // of the exponentiated per-replica values
  std::vector<std::string> warnings;
};

struct EstimateSeries {
  std::string method;
  std::vector<RungEstimate> rungs;

  bool has_warnings() const;
};

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  int rungs_used = 0;
};

/// Log of the sample mean of exp(values) with delta-method standard error,
/// effective sample size and excess kurtosis of exp(values).
struct LogMeanExp {
  double log_mean;
  double stderr_log;
  double ess;
  double excess_kurtosis;
};
LogMeanExp log_mean_exp(const std::vector<double>& values);

/// Naive annealed estimator of E[Z(q beta) / Z(beta)^q].
EstimateSeries estimate_annealed_naive(const RunConfig& cfg);

/// Same expectation via an exact Gaussian mean shift of strength beta q c at a
/// location u; each replica carries its likelihood-ratio weight.
EstimateSeries estimate_annealed_tilted(const RunConfig& cfg);

/// Mean of log(Z(q beta) / Z(beta)^q); the median goes to the diagnostics.
EstimateSeries estimate_quenched(const RunConfig& cfg);

/// Weighted least squares of log_estimate on log eps (weights 1/stderr^2;
/// ordinary least squares when some stderr is zero).
ExponentFit fit_exponent(const EstimateSeries& series);
ExponentFit fit_exponent(const std::vector<double>& eps, const std::vector<double>& log_values,
                         const std::vector<double>& stderrs);

/// log E[M(beta)^-q] with M the grid chaos mass. Requires beta2 < 2d.
EstimateSeries negative_moment_probe(const RunConfig& cfg, double q);

struct Lemma1Result {
  EstimateSeries series;
  double l;  // s - d + (beta2/2)(t - 1)
};

/// log E[I^t] with I the chaos integral against (|x - u| + eps)^-s, u at the
/// origin.
Lemma1Result lemma1_probe(const RunConfig& cfg, double s, double t);

/// log E[exp(c sup_i sup_{v in B_i} |X(v) - X(r_i)|)] with boxes of width eps.
/// Each rung samples a fine grid with three cells per box side.
EstimateSeries lemma2_probe(const RunConfig& cfg, double c_exp);

/// Same as above on caller-built fine states (box width = state eps).
EstimateSeries lemma2_probe(const std::vector<field::SamplerState>& fine_states,
                            std::size_t replicas, std::uint64_t master_seed, double c_exp);

struct PrefreezeResult {
  std::map<double, ExponentFit> fits;
  std::map<double, EstimateSeries> series;
};

/// Slopes of log E[sum_i w_i^q] for each q, using the tilt policy of cfg
/// (auto picks c for each q separately).
PrefreezeResult prefreezing_probe(const RunConfig& cfg, const std::vector<double>& q_list,
                                  bool check_regime = true);

}  // namespace gmf::estimators
