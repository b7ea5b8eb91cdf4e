#include "gmf/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "gmf/errors.hpp"
#include "gmf/measure.hpp"

namespace gmf::estimators {

using field::SamplerState;

bool EstimateSeries::has_warnings() const {
  return std::any_of(rungs.begin(), rungs.end(),
                     [](const RungEstimate& r) { return !r.warnings.empty(); });
}

std::vector<double> dyadic_eps(int first, int last) {
  std::vector<double> out;
  for (int k = first; k <= last; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

EpsLadder make_ladder(int d, const std::vector<double>& eps, std::size_t max_points) {
  if (eps.empty()) throw ParameterError("eps ladder is empty");
  EpsLadder ladder;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 1.0)) {
      std::ostringstream m;
      m << "eps ladder rung " << i << " (eps=" << eps[i] << ") is outside (0, 1]";
      throw ParameterError(m.str());
    }
    if (i > 0 && !(eps[i] < eps[i - 1])) {
      std::ostringstream m;
      m << "eps ladder rung " << i << " (eps=" << eps[i] << ") "
        << (eps[i] == eps[i - 1] ? "duplicates" : "is not smaller than") << " rung " << i - 1;
      throw ParameterError(m.str());
    }
    ladder.eps.push_back(eps[i]);
    ladder.grids.push_back(field::build_grid(d, field::min_points_per_side(eps[i]), max_points));
  }
  return ladder;
}

LogMeanExp log_mean_exp(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  if (values.empty()) throw ParameterError("no replicas to reduce");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) throw NumericalError("non-finite replica value");
  double s1 = 0.0, s2 = 0.0;
  for (double y : values) {
    const double a = std::exp(y - m);
    s1 += a;
    s2 += a * a;
  }
  const double mean = s1 / n;
  double c2 = 0.0, c4 = 0.0;
  for (double y : values) {
    const double dev = std::exp(y - m) - mean;
    c2 += dev * dev;
    c4 += dev * dev * dev * dev;
  }
  LogMeanExp out{};
  out.log_mean = m + std::log(mean);
  out.stderr_log = values.size() > 1 ? std::sqrt(c2 / (n - 1.0) / n) / mean : 0.0;
  out.ess = s1 * s1 / s2;
  out.excess_kurtosis = c2 > 0.0 ? n * c4 / (c2 * c2) - 3.0 : 0.0;
  return out;
}

namespace {

using ReplicaFn = std::function<double(const SamplerState&, Eigen::Ref<Eigen::VectorXd>,
                                       std::uint64_t replica)>;

std::uint64_t rung_seed(std::uint64_t master, std::size_t rung) {
  return splitmix64(master ^ splitmix64(0x5eedULL + rung));
}

void validate_run(const RunConfig& cfg) {
  theory::validate(cfg.params);
  if (cfg.ladder.size() == 0) throw ParameterError("eps ladder is empty");
  if (cfg.replicas < kMinReplicas)
    throw ParameterError("replicas must be >= " + std::to_string(kMinReplicas) + ", got " +
                         std::to_string(cfg.replicas));
  if (cfg.batch == 0) throw ParameterError("batch must be positive");
  for (const auto& g : cfg.ladder.grids)
    if (g.d != cfg.params.d) throw ParameterError("ladder grid dimension differs from model d");
}

std::vector<double> run_replicas(const SamplerState& state, std::size_t replicas,
                                 std::uint64_t seed, std::size_t batch, const ReplicaFn& fn) {
  std::vector<double> out(replicas);
  for (std::size_t first = 0; first < replicas; first += batch) {
    const auto count = static_cast<Eigen::Index>(std::min(batch, replicas - first));
    Eigen::MatrixXd x = field::sample_batch(state, seed, first, count);
    for (Eigen::Index k = 0; k < count; ++k) {
      const std::uint64_t r = first + static_cast<std::uint64_t>(k);
      out[r] = fn(state, x.col(k), r);
    }
  }
  return out;
}

template <class RungFn>
std::vector<RungEstimate> for_each_rung(std::size_t rungs, std::size_t threads, RungFn fn) {
  std::vector<RungEstimate> out(rungs);
  if (threads <= 1 || rungs <= 1) {
    for (std::size_t i = 0; i < rungs; ++i) out[i] = fn(i);
    return out;
  }
  for (std::size_t start = 0; start < rungs; start += threads) {
    std::vector<std::future<RungEstimate>> jobs;
    for (std::size_t i = start; i < std::min(rungs, start + threads); ++i)
      jobs.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = 0; i < jobs.size(); ++i) out[start + i] = jobs[i].get();
  }
  return out;
}

SamplerState build_state(const RunConfig& cfg, std::size_t rung) {
  field::CovarianceSpec spec;
  spec.eps = cfg.ladder.eps[rung];
  spec.g_const = cfg.g_const;
  spec.jitter_cap_rel = cfg.jitter_cap_rel;
  return field::build_covariance(cfg.ladder.grids[rung], spec);
}

RungEstimate summarize_exp_mean(const SamplerState& state, const std::vector<double>& values) {
  const LogMeanExp s = log_mean_exp(values);
  RungEstimate r;
  r.eps = state.eps();
  r.n_per_side = state.grid().n_per_side;
  r.log_estimate = s.log_mean;
  r.stderr_log = s.stderr_log;
  r.n_replicas = values.size();
  r.ess = s.ess;
  r.jitter = state.jitter();
  r.median = s.log_mean;
  r.excess_kurtosis = s.excess_kurtosis;
  const double n = static_cast<double>(values.size());
  if (s.excess_kurtosis > kKurtosisWarning) {
    std::ostringstream m;
    m << "heavy tail: excess kurtosis " << s.excess_kurtosis << " > " << kKurtosisWarning
      << " at eps=" << state.eps();
    r.warnings.push_back(m.str());
  }
  if (s.ess < kEssWarningFraction * n) {
    std::ostringstream m;
    m << "low effective sample size: ESS " << s.ess << " < " << kEssWarningFraction * n
      << " at eps=" << state.eps();
    r.warnings.push_back(m.str());
  }
  return r;
}

double beta_of(const theory::ModelParams& p) { return std::sqrt(p.beta2); }

// Tilted run of an arbitrary log-functional; c == 0 reproduces the untilted
// values exactly.
EstimateSeries tilted_series(const RunConfig& cfg, double q, const std::string& method,
                             std::function<double(Eigen::Ref<const Eigen::VectorXd>,
                                                  const SamplerState&)> functional) {
  theory::ModelParams p = cfg.params;
  p.q = q;
  double c = 0.0;
  switch (cfg.tilt.kind) {
    case TiltKind::None: throw ParameterError("tilted estimator requires a tilt policy");
    case TiltKind::Fixed: c = cfg.tilt.c; break;
    case TiltKind::Auto:
      if (p.beta2 <= 0.0) throw ParameterError("auto tilt requires beta2 > 0; use a fixed c");
      c = theory::tilt_parameter(p);
      break;
  }
  if (!std::isfinite(c)) throw ParameterError("tilt c must be finite");
  const double lambda = beta_of(p) * q * c;

  EstimateSeries series;
  series.method = method;
  series.rungs = for_each_rung(cfg.ladder.size(), cfg.threads, [&](std::size_t rung) {
    const SamplerState state = build_state(cfg, rung);
    const std::uint64_t seed = rung_seed(cfg.master_seed, rung);
    const Eigen::Index center = state.grid().center_index();
    const auto n_points = static_cast<std::uint64_t>(state.size());
    auto values = run_replicas(
        state, cfg.replicas, seed, cfg.batch,
        [&](const SamplerState& st, Eigen::Ref<Eigen::VectorXd> x, std::uint64_t r) {
          Eigen::Index u = center;
          if (cfg.u_location == ULocation::Uniform) {
            Engine loc = child_stream(seed, r, StreamPurpose::TiltLocation);
            std::uniform_int_distribution<std::uint64_t> pick(0, n_points - 1);
            u = static_cast<Eigen::Index>(pick(loc));
          }
          x += lambda * st.kernel().col(u);
          x(u) += lambda * st.jitter();
          const double log_w = cfg.u_location == ULocation::Uniform
                                   ? field::log_mixture_is_weight(st, x, lambda)
                                   : field::log_is_weight(lambda, x(u), st.variance(u));
          return functional(x, st) + log_w;
        });
    return summarize_exp_mean(state, values);
  });
  return series;
}

EstimateSeries naive_series(const RunConfig& cfg, const std::string& method,
                            std::function<double(Eigen::Ref<const Eigen::VectorXd>,
                                                 const SamplerState&)> functional) {
  EstimateSeries series;
  series.method = method;
  series.rungs = for_each_rung(cfg.ladder.size(), cfg.threads, [&](std::size_t rung) {
    const SamplerState state = build_state(cfg, rung);
    auto values = run_replicas(
        state, cfg.replicas, rung_seed(cfg.master_seed, rung), cfg.batch,
        [&](const SamplerState& st, Eigen::Ref<Eigen::VectorXd> x, std::uint64_t) {
          return functional(x, st);
        });
    return summarize_exp_mean(state, values);
  });
  return series;
}

}  // namespace

EstimateSeries estimate_annealed_naive(const RunConfig& cfg) {
  validate_run(cfg);
  if (cfg.tilt.kind != TiltKind::None)
    throw ParameterError("naive annealed estimator requires tilt policy 'none'");
  const double beta = beta_of(cfg.params);
  const double q = cfg.params.q;
  return naive_series(cfg, "annealed_naive", [=](auto x, const SamplerState& st) {
    return measure::log_moment_ratio(x, st, beta, q).value;
  });
}

EstimateSeries estimate_annealed_tilted(const RunConfig& cfg) {
  validate_run(cfg);
  const double beta = beta_of(cfg.params);
  const double q = cfg.params.q;
  return tilted_series(cfg, q, "annealed_tilted", [=](auto x, const SamplerState& st) {
    return measure::log_moment_ratio(x, st, beta, q).value;
  });
}

EstimateSeries estimate_quenched(const RunConfig& cfg) {
  validate_run(cfg);
  if (cfg.tilt.kind != TiltKind::None)
    throw ParameterError("quenched estimator requires tilt policy 'none'");
  const double beta = beta_of(cfg.params);
  const double q = cfg.params.q;
  EstimateSeries series;
  series.method = "quenched";
  series.rungs = for_each_rung(cfg.ladder.size(), cfg.threads, [&](std::size_t rung) {
    const SamplerState state = build_state(cfg, rung);
    auto values = run_replicas(
        state, cfg.replicas, rung_seed(cfg.master_seed, rung), cfg.batch,
        [&](const SamplerState& st, Eigen::Ref<Eigen::VectorXd> x, std::uint64_t) {
          return measure::log_moment_ratio(x, st, beta, q).value;
        });
    const auto n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    RungEstimate r;
    r.eps = state.eps();
    r.n_per_side = state.grid().n_per_side;
    r.log_estimate = mean;
    r.stderr_log = std::sqrt(ss / (n - 1.0) / n);
    r.n_replicas = values.size();
    r.ess = n;
    r.jitter = state.jitter();
    r.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    r.excess_kurtosis = 0.0;
    return r;
  });
  return series;
}

ExponentFit fit_exponent(const std::vector<double>& eps, const std::vector<double>& y,
                         const std::vector<double>& se) {
  const std::size_t n = eps.size();
  if (y.size() != n || se.size() != n) throw ParameterError("fit inputs have mismatched lengths");
  if (n < 3) throw ParameterError("exponent fit needs at least 3 rungs, got " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eps[i] > 0.0)) throw ParameterError("fit rung " + std::to_string(i) + " has eps <= 0");
    for (std::size_t j = 0; j < i; ++j)
      if (eps[i] == eps[j])
        throw ParameterError("degenerate ladder: fit rung " + std::to_string(i) +
                             " duplicates eps of rung " + std::to_string(j));
  }
  const bool weighted = std::all_of(se.begin(), se.end(),
                                    [](double s) { return std::isfinite(s) && s > 0.0; });
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(eps[i]);
    w[i] = weighted ? 1.0 / (se[i] * se[i]) : 1.0;
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    syy += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  ExponentFit f;
  f.rungs_used = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss_res += w[i] * r * r;
  }
  // Known-variance WLS; plain OLS falls back to the residual variance.
  f.slope_stderr = weighted ? std::sqrt(1.0 / sxx)
                            : std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return f;
}

ExponentFit fit_exponent(const EstimateSeries& series) {
  std::vector<double> eps, y, se;
  for (const auto& r : series.rungs) {
    eps.push_back(r.eps);
    y.push_back(r.log_estimate);
    se.push_back(r.stderr_log);
  }
  return fit_exponent(eps, y, se);
}

EstimateSeries negative_moment_probe(const RunConfig& cfg, double q) {
  validate_run(cfg);
  if (!(cfg.params.beta2 < 2.0 * cfg.params.d))
    throw ParameterError("negative moment probe requires beta2 < 2d");
  if (!(q > 0.0)) throw ParameterError("negative moment order must be > 0");
  const double beta = beta_of(cfg.params);
  return naive_series(cfg, "negative_moment", [=](auto x, const SamplerState& st) {
    return -q * measure::log_gmc_mass(x, st, beta).value;
  });
}

Lemma1Result lemma1_probe(const RunConfig& cfg, double s, double t) {
  validate_run(cfg);
  if (!(s > 0.0)) throw ParameterError("lemma1 probe requires s > 0");
  if (!(t > 0.0 && t <= 1.0)) throw ParameterError("lemma1 probe requires t in (0, 1]");
  const double beta = beta_of(cfg.params);
  const Eigen::RowVectorXd origin = Eigen::RowVectorXd::Zero(cfg.params.d);
  Lemma1Result out;
  out.l = s - cfg.params.d + cfg.params.beta2 / 2.0 * (t - 1.0);
  out.series = naive_series(cfg, "lemma1", [=](auto x, const SamplerState& st) {
    return t * measure::log_singular_integral(x, st, beta, s, origin).value;
  });
  return out;
}

EstimateSeries lemma2_probe(const std::vector<SamplerState>& states, std::size_t replicas,
                            std::uint64_t master_seed, double c_exp) {
  if (replicas < kMinReplicas)
    throw ParameterError("replicas must be >= " + std::to_string(kMinReplicas));
  EstimateSeries series;
  series.method = "lemma2";
  for (std::size_t rung = 0; rung < states.size(); ++rung) {
    const SamplerState& state = states[rung];
    auto values = run_replicas(
        state, replicas, rung_seed(master_seed, rung), 256,
        [&](const SamplerState& st, Eigen::Ref<Eigen::VectorXd> x, std::uint64_t) {
          return c_exp * measure::sup_increment(x, st, st.eps());
        });
    series.rungs.push_back(summarize_exp_mean(state, values));
  }
  return series;
}

EstimateSeries lemma2_probe(const RunConfig& cfg, double c_exp) {
  validate_run(cfg);
  EstimateSeries series;
  series.method = "lemma2";
  series.rungs = for_each_rung(cfg.ladder.size(), cfg.threads, [&](std::size_t rung) {
    const double eps = cfg.ladder.eps[rung];
    const long boxes = std::lround(2.0 / eps);
    if (std::abs(2.0 / eps - boxes) > 1e-9 * boxes)
      throw ParameterError("lemma2 probe needs 2/eps to be an integer, eps=" + std::to_string(eps));
    const auto grid = field::build_grid(cfg.params.d, static_cast<int>(3 * boxes),
                                        field::kDefaultMaxPoints);
    field::CovarianceSpec spec;
    spec.eps = eps;
    spec.g_const = cfg.g_const;
    spec.jitter_cap_rel = cfg.jitter_cap_rel;
    std::vector<SamplerState> one;
    one.push_back(field::build_covariance(grid, spec));
    auto s = lemma2_probe(one, cfg.replicas, rung_seed(cfg.master_seed, rung), c_exp);
    return s.rungs.front();
  });
  return series;
}

PrefreezeResult prefreezing_probe(const RunConfig& cfg, const std::vector<double>& q_list,
                                  bool check_regime) {
  validate_run(cfg);
  if (q_list.empty()) throw ParameterError("prefreezing probe needs at least one q");
  PrefreezeResult out;
  const double beta = beta_of(cfg.params);
  for (double q : q_list) {
    theory::ModelParams p = cfg.params;
    p.q = q;
    if (check_regime && theory::classify_regime(p).label != theory::RegimeLabel::Intermediate) {
      std::ostringstream m;
      m << "prefreezing probe requires the intermediate regime for every q; beta2=" << p.beta2
        << ", q=" << q << " is " << theory::to_string(theory::classify_regime(p).label);
      throw ParameterError(m.str());
    }
    theory::validate(p);
    auto functional = [=](auto x, const SamplerState& st) {
      return measure::participation_sum(x, st, beta, q).value;
    };
    EstimateSeries s = cfg.tilt.kind == TiltKind::None
                           ? naive_series(cfg, "participation", functional)
                           : tilted_series(cfg, q, "participation_tilted", functional);
    out.fits[q] = fit_exponent(s);
    out.series[q] = std::move(s);
  }
  return out;
}

}  // namespace gmf::estimators
