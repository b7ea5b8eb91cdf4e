#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "gmf/cli.hpp"
#include "gmf/cli_section.hpp"
#include "gmf/errors.hpp"
#include "gmf/toolbox.hpp"

namespace gmf::cli {

using estimators::EstimateSeries;
using estimators::ExponentFit;
using theory::ModelParams;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string join(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out + '\n';
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Json base_manifest(const std::string& command, const Json& config, const RunOptions& opts) {
  Json m;
  m["tool"] = "gmf";
  m["version"] = kVersion;
  m["schema_version"] = kSchemaVersion;
  m["command"] = command;
  m["config"] = config;
  m["deterministic"] = opts.deterministic;
  m["threads"] = opts.deterministic ? 1 : opts.threads;
  m["warnings"] = Json::array();
  return m;
}

Json rung_records(const EstimateSeries& s) {
  Json out = Json::array();
  for (const auto& r : s.rungs) {
    out.push_back({{"eps", r.eps},
                   {"n_per_side", r.n_per_side},
                   {"jitter", r.jitter},
                   {"ess", r.ess},
                   {"median", r.median},
                   {"excess_kurtosis", r.excess_kurtosis},
                   {"warnings", r.warnings}});
  }
  return out;
}

void append_warnings(Json& manifest, const EstimateSeries& s) {
  for (const auto& r : s.rungs)
    for (const auto& w : r.warnings) manifest["warnings"].push_back(s.method + ": " + w);
}

double theory_value_for(const std::string& estimator, const ModelParams& p) {
  if (estimator == "quenched") return theory::quenched_exponent(p);
  if (estimator == "participation") return theory::participation_exponent(p);
  return theory::annealed_exponent(p);
}

EstimateSeries run_estimator(const std::string& estimator, const estimators::RunConfig& run) {
  if (estimator == "annealed_naive") return estimators::estimate_annealed_naive(run);
  if (estimator == "annealed_tilted") return estimators::estimate_annealed_tilted(run);
  if (estimator == "quenched") return estimators::estimate_quenched(run);
  auto res = estimators::prefreezing_probe(run, {run.params.q}, false);
  return res.series.begin()->second;
}

}  // namespace

std::vector<double> beta2_range(double lo, double hi, double step) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(step)) || lo < 0.0 || hi < lo ||
      !(step > 0.0))
    throw ParameterError("beta2 range needs 0 <= min <= max and step > 0");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 1000000) throw ResourceError("beta2 range has too many points");
  std::vector<double> out;
  for (long k = 0; k < count; ++k) out.push_back(lo + k * step);
  return out;
}

std::string theory_csv(double q, int d, const std::vector<double>& beta2_values) {
  std::string out = join(kTheoryColumns);
  for (double b2 : beta2_values) {
    const ModelParams p{b2, q, d};
    const auto regime = theory::classify_regime(p);
    const double c_star = b2 > 0.0 ? theory::tilt_parameter(p) : 1.0;
    out += join({format_double(b2), std::string(theory::to_string(regime.label)),
                 format_double(theory::quenched_exponent(p)),
                 format_double(theory::annealed_exponent(p)),
                 format_double(theory::participation_exponent(p)),
                 format_double(theory::simple_scaling_curve(b2, q)),
                 format_double(theory::prefreezing_curve(b2, q, d)),
                 format_double(theory::frozen_curve(q, d)), format_double(c_star)});
  }
  return out;
}

std::string series_csv(const EstimateSeries& series, const ModelParams& p) {
  std::string out = join(kSeriesColumns);
  for (const auto& r : series.rungs) {
    out += join({format_double(p.beta2), format_double(p.q), std::to_string(p.d),
                 format_double(r.eps), format_double(std::log(r.eps)),
                 format_double(r.log_estimate), format_double(r.stderr_log),
                 std::to_string(r.n_replicas), format_double(r.ess), series.method});
  }
  return out;
}

std::string fit_csv_header() { return join(kFitColumns); }

std::string fit_csv_row(const std::string& method, const ModelParams& p, const ExponentFit& f,
                        double theory_value) {
  return join({method, format_double(p.beta2), format_double(p.q), std::to_string(p.d),
               format_double(f.slope), format_double(f.intercept), format_double(f.slope_stderr),
               format_double(f.r_squared), std::to_string(f.rungs_used),
               format_double(theory_value), format_double(std::abs(f.slope - theory_value))});
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParameterError("CSV has no column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw ParameterError("ragged CSV row: " + line);
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

CommandOutput cmd_estimate(const Json& config, const RunOptions& opts) {
  const auto t0 = Clock::now();
  EstimateSetup setup = parse_estimate_config(unwrap_config(config), opts);
  const auto& run = setup.run;
  const EstimateSeries series = run_estimator(setup.estimator, run);
  const ExponentFit fit = estimators::fit_exponent(series);
  const double theory_value = theory_value_for(setup.estimator, run.params);

  CommandOutput out;
  out.files.emplace_back("series.csv", series_csv(series, run.params));
  out.files.emplace_back("fit.csv", fit_csv_header() +
                                        fit_csv_row(series.method, run.params, fit, theory_value));
  out.manifest = base_manifest("estimate", setup.normalized, opts);
  out.manifest["rungs"] = rung_records(series);
  append_warnings(out.manifest, series);
  out.manifest["fit"] = {{"slope", fit.slope},
                         {"slope_stderr", fit.slope_stderr},
                         {"r2", fit.r_squared},
                         {"theory_value", theory_value}};
  out.manifest["wall_clock_seconds"] = seconds_since(t0);
  return out;
}

CommandOutput cmd_sweep(const Json& raw, const RunOptions& opts) {
  const auto t0 = Clock::now();
  const Json& config = unwrap_config(raw);
  Section top(config, "");
  const std::vector<double> beta2 = top.numbers("beta2");
  if (beta2.empty()) throw ParameterError("config key 'beta2' must be a non-empty list");
  for (std::size_t i = 0; i < beta2.size(); ++i)
    if (!(beta2[i] >= 0.0) || !std::isfinite(beta2[i]))
      throw ParameterError("config key 'beta2[" + std::to_string(i) + "]' must be >= 0");

  CommonSetup common = parse_common(top, opts, false);
  const std::string estimator = top.string("estimator", "annealed_tilted");
  if (estimator != "annealed_naive" && estimator != "annealed_tilted" && estimator != "quenched" &&
      estimator != "participation")
    throw ParameterError("config key 'estimator' has unknown value '" + estimator + "'");
  parse_tilt(top, common, estimator == "annealed_tilted" ? "auto" : "none");
  top.finish();
  Json normalized = common.normalized;
  normalized["beta2"] = beta2;
  normalized["estimator"] = estimator;
  normalized["model"].erase("beta2");

  const ModelParams base = common.run.params;
  CommandOutput out;
  out.manifest = base_manifest("sweep", normalized, opts);

  if (common.run.replicas == 0) {
    out.files.emplace_back("sweep.csv", theory_csv(base.q, base.d, beta2));
    out.manifest["mode"] = "theory";
    out.manifest["wall_clock_seconds"] = seconds_since(t0);
    return out;
  }

  std::string table = join(kSweepColumns);
  std::string all_series = join(kSeriesColumns);
  Json points = Json::array();
  for (double b2 : beta2) {
    estimators::RunConfig run = common.run;
    run.params.beta2 = b2;
    std::string method = estimator;
    if (estimator == "annealed_tilted" && b2 == 0.0) {
      // Zero coupling: the tilt is the identity, run the untilted estimator.
      run.tilt = {estimators::TiltKind::None, 0.0};
      method = "annealed_naive";
    }
    const EstimateSeries series = run_estimator(method, run);
    const ExponentFit fit = estimators::fit_exponent(series);
    const double tv = theory_value_for(estimator, run.params);
    const auto regime = theory::classify_regime(run.params);
    table += join({format_double(b2), format_double(base.q), std::to_string(base.d),
                   std::string(theory::to_string(regime.label)), format_double(fit.slope),
                   format_double(fit.slope_stderr), format_double(fit.r_squared),
                   format_double(tv), format_double(fit.slope - tv)});
    const std::string s = series_csv(series, run.params);
    all_series += s.substr(s.find('\n') + 1);
    points.push_back({{"beta2", b2}, {"method", series.method}, {"rungs", rung_records(series)}});
    append_warnings(out.manifest, series);
  }
  out.files.emplace_back("sweep.csv", table);
  out.files.emplace_back("series.csv", all_series);
  out.manifest["mode"] = "estimate";
  out.manifest["points"] = points;
  out.manifest["wall_clock_seconds"] = seconds_since(t0);
  return out;
}

CommandOutput cmd_probe(const std::string& kind, const Json& raw, const RunOptions& opts) {
  const auto t0 = Clock::now();
  const Json& config = unwrap_config(raw);
  Section top(config, "");
  CommonSetup common = parse_common(top, opts, true);
  Section probe = top.child_or_empty("probe");
  Json probe_echo = Json::object();
  auto& run = common.run;
  const ModelParams p = run.params;

  CommandOutput out;
  std::string series_text = join(kSeriesColumns);
  std::string fit_text = fit_csv_header();
  Json rungs = Json::object();
  Json warnings_src = Json::array();
  std::vector<EstimateSeries> produced;
  std::optional<double> lemma1_l;

  auto emit = [&](const EstimateSeries& s, const ModelParams& mp, double theory_value) {
    const std::string csv = series_csv(s, mp);
    series_text += csv.substr(csv.find('\n') + 1);
    fit_text += fit_csv_row(s.method, mp, estimators::fit_exponent(s), theory_value);
    produced.push_back(s);
  };

  if (kind == "negm") {
    const double order = probe.number("order", 2.0);
    probe_echo["order"] = order;
    parse_tilt(top, common, "none");
    probe.finish();
    top.finish();
    emit(estimators::negative_moment_probe(run, order), p, 0.0);
  } else if (kind == "lemma1") {
    const double s = probe.number("s");
    const double t = probe.number("t", 1.0);
    probe_echo["s"] = s;
    probe_echo["t"] = t;
    parse_tilt(top, common, "none");
    probe.finish();
    top.finish();
    const auto res = estimators::lemma1_probe(run, s, t);
    emit(res.series, p, res.l < 0.0 ? 0.0 : -res.l * t);
    lemma1_l = res.l;
  } else if (kind == "lemma2") {
    const double c = probe.number("c_exp", 1.0);
    probe_echo["c_exp"] = c;
    parse_tilt(top, common, "none");
    probe.finish();
    top.finish();
    emit(estimators::lemma2_probe(run, c), p, 0.0);
  } else if (kind == "prefreeze") {
    const std::vector<double> qs = probe.numbers("q_list");
    probe_echo["q_list"] = qs;
    parse_tilt(top, common, "auto");
    probe.finish();
    top.finish();
    const auto res = estimators::prefreezing_probe(run, qs);
    for (double q : qs) {
      ModelParams mp = p;
      mp.q = q;
      emit(res.series.at(q), mp, theory::participation_exponent(mp));
    }
  } else {
    throw ParameterError("unknown probe '" + kind + "' (expected negm, lemma1, lemma2, prefreeze)");
  }

  Json normalized = common.normalized;
  normalized["probe"] = probe_echo;
  out.files.emplace_back("series.csv", series_text);
  out.files.emplace_back("fit.csv", fit_text);
  out.manifest = base_manifest("probe " + kind, normalized, opts);
  if (lemma1_l) out.manifest["l"] = *lemma1_l;
  Json all_rungs = Json::array();
  for (const auto& s : produced) {
    all_rungs.push_back(rung_records(s));
    append_warnings(out.manifest, s);
  }
  out.manifest["rungs"] = all_rungs;
  out.manifest["wall_clock_seconds"] = seconds_since(t0);
  return out;
}

namespace {

toolbox::ConvexFunctional parse_functional(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ParameterError("functional '" + spec + "' must look like power:2, negpower:1 or exp:1");
  const std::string name = spec.substr(0, colon);
  double param = 0.0;
  try {
    param = std::stod(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw ParameterError("functional '" + spec + "' has a non-numeric parameter");
  }
  toolbox::ConvexFunctional f;
  f.param = param;
  if (name == "power") {
    f.tag = toolbox::FunctionalTag::Power;
    f.reversed = param < 1.0;
  } else if (name == "negpower") {
    f.tag = toolbox::FunctionalTag::NegPower;
  } else if (name == "exp") {
    f.tag = toolbox::FunctionalTag::Exp;
  } else {
    throw ParameterError("unknown functional '" + name + "'");
  }
  return f;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json report_json(const toolbox::ComparisonReport& r) {
  return {{"lhs", r.lhs},       {"lhs_stderr", r.lhs_stderr},
          {"rhs", r.rhs},       {"rhs_stderr", r.rhs_stderr},
          {"margin", r.margin}, {"margin_stderr", r.margin_stderr},
          {"violation", r.violation}, {"n_samples", r.n_samples}};
}

}  // namespace

CommandOutput cmd_toolbox(const std::string& kind, const Json& raw, const RunOptions& opts) {
  const auto t0 = Clock::now();
  const Json& config = unwrap_config(raw);
  Section top(config, "");
  const auto instances = top.unsigned_integer("instances", 200);
  const auto max_dim = top.unsigned_integer("max_dim", 5);
  const auto samples = top.unsigned_integer("samples", 20000);
  const std::uint64_t seed = opts.seed ? *opts.seed : top.unsigned_integer("seed", 1);
  if (opts.seed && top.has("seed")) top.unsigned_integer("seed", 0);
  if (max_dim < 1 || max_dim > 6) throw ParameterError("config key 'max_dim' must lie in [1, 6]");
  if (samples < 2) throw ParameterError("config key 'samples' must be >= 2");

  Json normalized = {{"instances", instances}, {"max_dim", max_dim}, {"samples", samples},
                     {"seed", seed}};
  Json report;
  report["kind"] = kind;
  report["instances"] = Json::array();
  std::size_t violations = 0;

  if (kind == "kahane") {
    std::vector<std::string> specs = {"power:2", "negpower:1"};
    if (top.has("functionals")) {
      specs.clear();
      for (const auto& v : config.at("functionals")) {
        if (!v.is_string()) throw ParameterError("config key 'functionals' must list strings");
        specs.push_back(v.get<std::string>());
      }
      top.touch("functionals");
    }
    top.finish();
    if (specs.empty()) throw ParameterError("config key 'functionals' must not be empty");
    normalized["functionals"] = specs;
    for (std::uint64_t k = 0; k < instances; ++k) {
      Engine rng = child_stream(seed, k, StreamPurpose::Toolbox);
      const int n = 1 + static_cast<int>(std::uniform_int_distribution<std::uint64_t>(0, max_dim - 1)(rng));
      auto pair = toolbox::random_ordered_cov_pair(n, false, rng);
      auto f = parse_functional(specs[k % specs.size()]);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < n; ++i) f.weights.push_back(unif(rng));
      const auto r = toolbox::kahane_check(pair, f, samples, rng);
      violations += r.violation;
      Json item = report_json(r);
      item["n"] = n;
      item["functional"] = toolbox::to_string(f);
      item["sigma_x"] = matrix_json(pair.sigma_x);
      item["sigma_y"] = matrix_json(pair.sigma_y);
      report["instances"].push_back(item);
    }
  } else if (kind == "slepian") {
    const double threshold = top.number("threshold", 0.0);
    top.finish();
    normalized["threshold"] = threshold;
    for (std::uint64_t k = 0; k < instances; ++k) {
      Engine rng = child_stream(seed, k, StreamPurpose::Toolbox);
      const int n = 1 + static_cast<int>(std::uniform_int_distribution<std::uint64_t>(0, max_dim - 1)(rng));
      auto pair = toolbox::random_ordered_cov_pair(n, true, rng);
      const auto r = toolbox::slepian_check(pair, threshold, samples, rng);
      violations += r.violation;
      Json item = report_json(r);
      item["n"] = n;
      item["sigma_x"] = matrix_json(pair.sigma_x);
      item["sigma_y"] = matrix_json(pair.sigma_y);
      report["instances"].push_back(item);
    }
  } else {
    throw ParameterError("unknown toolbox check '" + kind + "' (expected kahane or slepian)");
  }
  report["violations"] = violations;
  report["n_instances"] = instances;

  CommandOutput out;
  out.files.emplace_back("report.json", report.dump(2) + "\n");
  out.manifest = base_manifest("toolbox " + kind, normalized, opts);
  out.manifest["violations"] = violations;
  out.manifest["wall_clock_seconds"] = seconds_since(t0);
  return out;
}

}  // namespace gmf::cli
