#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gmf/rng.hpp"

namespace gmf::toolbox {

// Monte Carlo harness for the Gaussian comparison inequalities (Kahane's
// convexity inequality and Slepian's lemma) plus a tensor Gauss-Hermite oracle
// for small dimensions.

struct OrderedCovPair {
  Eigen::MatrixXd sigma_x;  // entrywise <= sigma_y
  Eigen::MatrixXd sigma_y;
  bool equal_diag = false;
};

/// Throws ParameterError if the ordering, equal-diagonal or PD invariant fails.
void check_pair(const OrderedCovPair& pair);

/// sigma_y = A A^T + D; sigma_x = sigma_y - E with E >= 0 entrywise (zero
/// diagonal when equal_diag). Candidates failing the PD check are redrawn.
OrderedCovPair random_ordered_cov_pair(int n, bool equal_diag, Engine& rng,
                                       int max_attempts = 1000);

enum class FunctionalTag { Power, NegPower, Exp };

/// F(sum_i p_i exp(Z_i - Var(Z_i)/2)) with
///   Power(p):    F(x) = x^p      (convex for p >= 1; p in (0,1) needs `reversed`)
///   NegPower(q): F(x) = x^-q
///   Exp(a):      F(x) = exp(-a x), a >= 0
/// `reversed` marks a concave F, for which the inequality flips.
struct ConvexFunctional {
  FunctionalTag tag = FunctionalTag::Power;
  double param = 2.0;
  std::vector<double> weights;
  bool reversed = false;

  double apply(double x) const;
  /// F evaluated at the weighted chaos sum of the centred vector z.
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& z,
                    const Eigen::Ref<const Eigen::VectorXd>& variances) const;
};

void validate(const ConvexFunctional& f, Eigen::Index n);

std::string to_string(const ConvexFunctional& f);

struct ComparisonReport {
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  double rhs_stderr = 0.0;
  double margin = 0.0;         // expected-larger side minus expected-smaller side
  double margin_stderr = 0.0;  // of the paired difference
  bool violation = false;      // margin < -3 margin_stderr
  std::size_t n_samples = 0;
};

inline constexpr double kViolationSigmas = 3.0;

/// E[F(sum p_i e^{X_i - Var/2})] vs the same for Y, from common standard
/// normal draws pushed through each factor.
ComparisonReport kahane_check(const OrderedCovPair& pair, const ConvexFunctional& f,
                              std::size_t n_samples, Engine& rng);

/// P(max X_i < x) (lhs) vs P(max Y_i < x) (rhs). Requires equal diagonals.
ComparisonReport slepian_check(const OrderedCovPair& pair, double threshold,
                               std::size_t n_samples, Engine& rng);

/// E[g(Z)] for Z ~ N(0, cov), n <= 3, by tensor Gauss-Hermite quadrature of
/// the given order (<= 64) after a Cholesky change of variables.
double brute_force_expectation(const Eigen::MatrixXd& cov,
                               const std::function<double(const Eigen::VectorXd&)>& g,
                               int order = 32);

/// Probabilists' Gauss-Hermite rule: nodes and weights for E[g(N(0,1))].
struct HermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
HermiteRule gauss_hermite(int order);

/// P(max(Z_1, Z_2) < x) for a bivariate centred normal, by adaptive 1-d
/// quadrature of the conditional normal CDF.
double bivariate_max_cdf(const Eigen::Matrix2d& cov, double x);

}  // namespace gmf::toolbox
