// Config parsing and validation for the command-line driver.
#include <cmath>
#include <set>
#include <sstream>

#include "gmf/cli.hpp"
#include "gmf/cli_section.hpp"
#include "gmf/errors.hpp"

namespace gmf::cli {

Section::Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object())
    throw ParameterError("config " + (path_.empty() ? std::string("document") : "key '" + path_ + "'") +
                         " must be an object");
}

std::string Section::key_path(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool Section::has(const std::string& key) const { return j_.contains(key); }

const Json& Section::raw(const std::string& key) {
  used_.insert(key);
  if (!j_.contains(key)) throw ParameterError("missing required config key '" + key_path(key) + "'");
  return j_.at(key);
}

double Section::number(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_number()) throw ParameterError("config key '" + key_path(key) + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParameterError("config key '" + key_path(key) + "' must be finite");
  return x;
}

double Section::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : (used_.insert(key), fallback);
}

std::int64_t Section::integer(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_number_integer())
    throw ParameterError("config key '" + key_path(key) + "' must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) {
  return has(key) ? integer(key) : (used_.insert(key), fallback);
}

std::uint64_t Section::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const Json& v = raw(key);
  if (!v.is_number_unsigned())
    throw ParameterError("config key '" + key_path(key) + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string Section::string(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_string()) throw ParameterError("config key '" + key_path(key) + "' must be a string");
  return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : (used_.insert(key), fallback);
}

std::vector<double> Section::numbers(const std::string& key) {
  const Json& v = raw(key);
  if (!v.is_array()) throw ParameterError("config key '" + key_path(key) + "' must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ParameterError("config key '" + key_path(key) + "[" + std::to_string(i) +
                           "]' must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Section Section::child(const std::string& key) { return Section(raw(key), key_path(key)); }

Section Section::child_or_empty(const std::string& key) {
  static const Json empty = Json::object();
  if (!has(key)) {
    used_.insert(key);
    return Section(empty, key_path(key));
  }
  return child(key);
}

void Section::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (!used_.count(it.key()))
      throw ParameterError("unknown config key '" + key_path(it.key()) + "'");
}

Json unwrap_config(const Json& doc) {
  if (doc.is_object() && doc.contains("config") && doc.contains("command")) return doc.at("config");
  return doc;
}

CommonSetup parse_common(Section& top, const RunOptions& opts, bool need_beta2) {
  CommonSetup s;
  auto& run = s.run;
  Json& norm = s.normalized;

  {
    Section m = top.child("model");
    run.params.beta2 = need_beta2 ? m.number("beta2") : m.number("beta2", 0.0);
    run.params.q = m.number("q", 2.0);
    run.params.d = static_cast<int>(m.integer("d", 1));
    m.finish();
    theory::validate(run.params);
    norm["model"] = {{"beta2", run.params.beta2}, {"q", run.params.q}, {"d", run.params.d}};
  }

  std::size_t max_points = field::kDefaultMaxPoints;
  {
    Section lim = top.child_or_empty("limits");
    max_points = lim.unsigned_integer("max_points", field::kDefaultMaxPoints);
    lim.finish();
    norm["limits"] = {{"max_points", max_points}};
  }

  {
    Section lad = top.child("ladder");
    std::vector<double> eps;
    if (lad.has("eps") && lad.has("dyadic"))
      throw ParameterError("config keys 'ladder.eps' and 'ladder.dyadic' are mutually exclusive");
    if (lad.has("dyadic")) {
      Section dy = lad.child("dyadic");
      const auto first = dy.integer("first");
      const auto last = dy.integer("last");
      dy.finish();
      if (first < 0 || last < first || last > 30)
        throw ParameterError("config key 'ladder.dyadic' needs 0 <= first <= last <= 30");
      eps = estimators::dyadic_eps(static_cast<int>(first), static_cast<int>(last));
    } else {
      eps = lad.numbers("eps");
    }
    lad.finish();
    run.ladder = estimators::make_ladder(run.params.d, eps, max_points);
    norm["ladder"] = {{"eps", eps}};
  }

  {
    Section ker = top.child_or_empty("kernel");
    run.g_const = ker.number("g_const", 0.0);
    run.jitter_cap_rel = ker.number("jitter_cap", 1e-8);
    ker.finish();
    if (!(run.jitter_cap_rel >= 0.0))
      throw ParameterError("config key 'kernel.jitter_cap' must be >= 0");
    norm["kernel"] = {{"g_const", run.g_const}, {"jitter_cap", run.jitter_cap_rel}};
  }

  const auto replicas = top.unsigned_integer("replicas", 1000);
  run.replicas = replicas;
  norm["replicas"] = replicas;

  run.master_seed = opts.seed ? *opts.seed : top.unsigned_integer("seed", 1);
  if (opts.seed && top.has("seed")) top.unsigned_integer("seed", 0);
  norm["seed"] = run.master_seed;

  run.batch = top.unsigned_integer("batch", 256);
  if (run.batch == 0) throw ParameterError("config key 'batch' must be positive");
  norm["batch"] = run.batch;

  {
    const std::string u = top.string("u_location", "uniform");
    if (u == "uniform")
      run.u_location = estimators::ULocation::Uniform;
    else if (u == "center")
      run.u_location = estimators::ULocation::Center;
    else
      throw ParameterError("config key 'u_location' must be 'uniform' or 'center', got '" + u + "'");
    norm["u_location"] = u;
  }

  run.threads = opts.deterministic ? 1 : std::max<std::size_t>(1, opts.threads);
  return s;
}

void parse_tilt(Section& top, CommonSetup& s, const std::string& default_policy) {
  Section t = top.child_or_empty("tilt");
  const std::string policy = t.string("policy", default_policy);
  double c = 0.0;
  if (policy == "none") {
    s.run.tilt = {estimators::TiltKind::None, 0.0};
  } else if (policy == "auto") {
    s.run.tilt = {estimators::TiltKind::Auto, 0.0};
  } else if (policy == "fixed") {
    c = t.number("c");
    s.run.tilt = {estimators::TiltKind::Fixed, c};
  } else {
    throw ParameterError("config key 'tilt.policy' must be none, auto or fixed, got '" + policy + "'");
  }
  t.finish();
  s.normalized["tilt"] = {{"policy", policy}};
  if (policy == "fixed") s.normalized["tilt"]["c"] = c;
}

EstimateSetup parse_estimate_config(const Json& config, const RunOptions& opts) {
  Section top(config, "");
  CommonSetup common = parse_common(top, opts, true);
  const std::string estimator = top.string("estimator");
  static const std::set<std::string> known = {"annealed_naive", "annealed_tilted", "quenched",
                                              "participation"};
  if (!known.count(estimator))
    throw ParameterError("config key 'estimator' must be one of annealed_naive, annealed_tilted, "
                         "quenched, participation; got '" + estimator + "'");
  parse_tilt(top, common, estimator == "annealed_tilted" ? "auto" : "none");
  if ((estimator == "annealed_naive" || estimator == "quenched") &&
      common.run.tilt.kind != estimators::TiltKind::None)
    throw ParameterError("config key 'tilt.policy' must be 'none' for estimator " + estimator);
  if (estimator == "annealed_tilted" && common.run.tilt.kind == estimators::TiltKind::None)
    throw ParameterError("config key 'tilt.policy' must not be 'none' for annealed_tilted");
  top.finish();
  EstimateSetup out;
  out.run = std::move(common.run);
  out.estimator = estimator;
  out.normalized = std::move(common.normalized);
  out.normalized["estimator"] = estimator;
  return out;
}

}  // namespace gmf::cli
