#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "gmf/errors.hpp"
#include "gmf/estimators.hpp"
#include "gmf/theory.hpp"

using namespace gmf;
using namespace gmf::estimators;

namespace {

RunConfig small_config(double beta2, double q, std::size_t replicas = 2000) {
  RunConfig cfg;
  cfg.params = {beta2, q, 1};
  cfg.ladder = make_ladder(1, dyadic_eps(2, 5));
  cfg.replicas = replicas;
  cfg.master_seed = 12345;
  return cfg;
}

}  // namespace

TEST_CASE("ladder construction") {
  auto l = make_ladder(1, dyadic_eps(2, 5));
  CHECK(l.size() == 4);
  CHECK(l.grids[3].n_per_side == 128);
  try {
    make_ladder(1, {0.25, 0.125, 0.125});
    FAIL("expected a ParameterError");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("rung 2") != std::string::npos);
    CHECK(std::string(e.what()).find("duplicates") != std::string::npos);
  }
  CHECK_THROWS_AS(make_ladder(1, {0.1, 0.2}), ParameterError);
  CHECK_THROWS_AS(make_ladder(2, {std::ldexp(1.0, -6)}), ResourceError);
}

TEST_CASE("log_mean_exp") {
  std::vector<double> v = {0.0, std::log(3.0)};
  auto s = log_mean_exp(v);
  CHECK(s.log_mean == doctest::Approx(std::log(2.0)));
  CHECK(s.ess == doctest::Approx(16.0 / 10.0));
  std::vector<double> flat(50, 1.7);
  auto f = log_mean_exp(flat);
  CHECK(f.log_mean == doctest::Approx(1.7));
  CHECK(f.stderr_log == 0.0);
  CHECK(f.ess == doctest::Approx(50.0));
  CHECK_THROWS_AS(log_mean_exp({}), ParameterError);
}

TEST_CASE("fit_exponent recovers exact lines") {
  std::vector<double> eps = {0.5, 0.25, 0.125, 0.0625};
  std::vector<double> y, se(4, 0.0);
  for (double e : eps) y.push_back(0.3 - 0.7 * std::log(e));
  auto f = fit_exponent(eps, y, se);
  CHECK(f.slope == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.rungs_used == 4);
  CHECK_THROWS_AS(fit_exponent({0.5, 0.25}, {0, 0}, {0, 0}), ParameterError);
  CHECK_THROWS_AS(fit_exponent({0.5, 0.25, 0.5}, {0, 0, 0}, {0, 0, 0}), ParameterError);
}

TEST_CASE("property: weighted fit of noisy synthetic data") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  const auto eps = dyadic_eps(3, 9);
  int covered = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> y, se;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double s = 0.01 * (1.0 + i);
      se.push_back(s);
      y.push_back(1.0 - 0.45 * std::log(eps[i]) + s * nd(rng));
    }
    auto f = fit_exponent(eps, y, se);
    if (std::abs(f.slope + 0.45) < 1.96 * f.slope_stderr) ++covered;
  }
  // Nominal 95% coverage.
  CHECK(covered > 0.92 * trials);
  CHECK(covered < 0.98 * trials);
}

TEST_CASE("zero temperature is exact") {
  auto cfg = small_config(0.0, 2.0, 200);
  auto s = estimate_annealed_naive(cfg);
  for (const auto& r : s.rungs) {
    CHECK(r.log_estimate == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
    CHECK(r.stderr_log == 0.0);
  }
  auto f = fit_exponent(s);
  CHECK(std::abs(f.slope) < 1e-12);
  auto qs = estimate_quenched(cfg);
  CHECK(std::abs(fit_exponent(qs).slope) < 1e-12);
}

TEST_CASE("replica and policy validation") {
  auto cfg = small_config(1.0, 2.0, 50);
  CHECK_THROWS_AS(estimate_annealed_naive(cfg), ParameterError);
  cfg.replicas = 200;
  cfg.tilt = {TiltKind::Auto, 0.0};
  CHECK_THROWS_AS(estimate_annealed_naive(cfg), ParameterError);
  CHECK_THROWS_AS(estimate_quenched(cfg), ParameterError);
  cfg.tilt = {TiltKind::None, 0.0};
  CHECK_THROWS_AS(estimate_annealed_tilted(cfg), ParameterError);
}

TEST_CASE("determinism") {
  auto cfg = small_config(1.0, 2.0, 300);
  auto a = estimate_annealed_naive(cfg);
  auto b = estimate_annealed_naive(cfg);
  cfg.threads = 3;
  auto c = estimate_annealed_naive(cfg);
  for (std::size_t i = 0; i < a.rungs.size(); ++i) {
    CHECK(a.rungs[i].log_estimate == b.rungs[i].log_estimate);
    CHECK(a.rungs[i].log_estimate == c.rungs[i].log_estimate);
  }
  cfg.master_seed += 1;
  auto d = estimate_annealed_naive(cfg);
  CHECK(a.rungs[0].log_estimate != d.rungs[0].log_estimate);
}

TEST_CASE("tilt with c = 0 reproduces the naive values") {
  auto cfg = small_config(1.0, 2.0, 300);
  auto naive = estimate_annealed_naive(cfg);
  cfg.tilt = {TiltKind::Fixed, 0.0};
  for (auto loc : {ULocation::Uniform, ULocation::Center}) {
    cfg.u_location = loc;
    auto tilted = estimate_annealed_tilted(cfg);
    for (std::size_t i = 0; i < naive.rungs.size(); ++i)
      CHECK(tilted.rungs[i].log_estimate ==
            doctest::Approx(naive.rungs[i].log_estimate).epsilon(1e-12));
  }
}

TEST_CASE("tilted and naive agree on a coarse ladder") {
  auto cfg = small_config(0.8, 2.0, 20000);
  cfg.ladder = make_ladder(1, {0.25, 0.125, 0.0625});
  auto naive = estimate_annealed_naive(cfg);
  cfg.tilt = {TiltKind::Auto, 0.0};
  for (auto loc : {ULocation::Uniform, ULocation::Center}) {
    cfg.u_location = loc;
    cfg.master_seed = 777;
    auto tilted = estimate_annealed_tilted(cfg);
    for (std::size_t i = 0; i < naive.rungs.size(); ++i) {
      const double se = std::hypot(naive.rungs[i].stderr_log, tilted.rungs[i].stderr_log);
      CHECK(std::abs(naive.rungs[i].log_estimate - tilted.rungs[i].log_estimate) < 4 * se);
    }
  }
}

TEST_CASE("quenched is above annealed at every rung") {
  auto cfg = small_config(1.0, 2.0, 2000);
  auto a = estimate_annealed_naive(cfg);
  auto q = estimate_quenched(cfg);
  // Jensen: E log R <= log E R, and the naive estimate shares the replicas.
  for (std::size_t i = 0; i < a.rungs.size(); ++i)
    CHECK(q.rungs[i].log_estimate <= a.rungs[i].log_estimate);
}

TEST_CASE("heavy tails produce warnings") {
  auto cfg = small_config(0.5, 2.0, 2000);
  auto s = negative_moment_probe(cfg, 4.0);
  CHECK(s.has_warnings());
  CHECK(s.rungs.back().excess_kurtosis > kKurtosisWarning);
}

TEST_CASE("probe preconditions") {
  auto cfg = small_config(2.5, 2.0, 200);
  CHECK_THROWS_AS(negative_moment_probe(cfg, 1.0), ParameterError);
  cfg.params.beta2 = 0.5;
  CHECK_THROWS_AS(negative_moment_probe(cfg, -1.0), ParameterError);
  CHECK_THROWS_AS(lemma1_probe(cfg, 0.5, 1.5), ParameterError);
  CHECK_THROWS_AS(lemma1_probe(cfg, 0.0, 0.5), ParameterError);
  CHECK_THROWS_AS(prefreezing_probe(cfg, {2.0}), ParameterError);
  CHECK_NOTHROW(prefreezing_probe(cfg, {2.0}, false));
  cfg.ladder = make_ladder(1, {0.3, 0.2, 0.1});
  CHECK_THROWS_AS(lemma2_probe(cfg, 1.0), ParameterError);
}

TEST_CASE("lemma1 at zero temperature matches the deterministic integral") {
  auto cfg = small_config(0.0, 2.0, 200);
  const double s = 0.5, t = 1.0;
  auto r = lemma1_probe(cfg, s, t);
  CHECK(r.l == doctest::Approx(-0.5));
  for (const auto& rung : r.series.rungs) {
    const double e = rung.eps;
    const double exact = 2.0 * (std::pow(1.0 + e, 1 - s) - std::pow(e, 1 - s)) / (1 - s);
    CHECK(std::exp(rung.log_estimate) == doctest::Approx(exact).epsilon(0.01));
  }
}

TEST_CASE("lemma2 with c = 0 is identically zero") {
  auto cfg = small_config(1.0, 2.0, 200);
  auto s = lemma2_probe(cfg, 0.0);
  for (const auto& r : s.rungs) CHECK(r.log_estimate == 0.0);
}

TEST_CASE("prefreezing probe at zero temperature") {
  auto cfg = small_config(0.0, 2.0, 200);
  auto r = prefreezing_probe(cfg, {2.0, 3.0}, false);
  CHECK(r.fits.at(2.0).slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.fits.at(3.0).slope == doctest::Approx(2.0).epsilon(1e-9));
}
