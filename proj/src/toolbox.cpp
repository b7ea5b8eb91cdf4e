#include "gmf/toolbox.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "gmf/errors.hpp"

namespace gmf::toolbox {

namespace {

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw ParameterError(std::string(what) + " is not positive definite");
  return llt.matrixL();
}

struct PairedStats {
  double sa = 0.0, saa = 0.0, sb = 0.0, sbb = 0.0, sd = 0.0, sdd = 0.0;
  std::size_t n = 0;

  void add(double a, double b) {
    sa += a;
    saa += a * a;
    sb += b;
    sbb += b * b;
    sd += b - a;
    sdd += (b - a) * (b - a);
    ++n;
  }

  static double stderr_of(double s, double ss, std::size_t n) {
    const double m = s / n;
    const double var = std::max(0.0, (ss - n * m * m) / (n - 1.0));
    return std::sqrt(var / n);
  }

  ComparisonReport report(bool reversed) const {
    ComparisonReport r;
    r.n_samples = n;
    r.lhs = sa / n;
    r.rhs = sb / n;
    r.lhs_stderr = stderr_of(sa, saa, n);
    r.rhs_stderr = stderr_of(sb, sbb, n);
    r.margin = reversed ? -(sd / n) : sd / n;
    r.margin_stderr = stderr_of(sd, sdd, n);
    r.violation = r.margin < -kViolationSigmas * r.margin_stderr;
    return r;
  }
};

}  // namespace

void check_pair(const OrderedCovPair& pair) {
  const auto& x = pair.sigma_x;
  const auto& y = pair.sigma_y;
  if (x.rows() != x.cols() || y.rows() != y.cols() || x.rows() != y.rows() || x.rows() < 1)
    throw ParameterError("covariance pair must be square and of equal size");
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(i, j) != x(j, i) || y(i, j) != y(j, i))
        throw ParameterError("covariance pair must be symmetric");
      if (x(i, j) > y(i, j)) throw ParameterError("sigma_x must be entrywise <= sigma_y");
    }
  if (pair.equal_diag && (x.diagonal() - y.diagonal()).cwiseAbs().maxCoeff() != 0.0)
    throw ParameterError("equal_diag pair has differing diagonals");
  cholesky_or_throw(x, "sigma_x");
  cholesky_or_throw(y, "sigma_y");
}

OrderedCovPair random_ordered_cov_pair(int n, bool equal_diag, Engine& rng, int max_attempts) {
  if (n < 1 || n > 6) throw ParameterError("pair dimension must lie in [1, 6]");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Eigen::MatrixXd a(n, n);
    for (auto& v : a.reshaped()) v = normal(rng) * 0.7 / std::sqrt(static_cast<double>(n));
    Eigen::MatrixXd y = a * a.transpose();
    for (int i = 0; i < n; ++i) y(i, i) += 0.1 + 0.3 * unif(rng);
    y = 0.5 * (y + y.transpose()).eval();

    const double alpha = 0.5 * unif(rng);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (!equal_diag) e(i, i) = alpha * unif(rng) * y(i, i);
      for (int j = 0; j < i; ++j) {
        const double v = alpha * unif(rng) * std::sqrt(y(i, i) * y(j, j));
        e(i, j) = v;
        e(j, i) = v;
      }
    }
    OrderedCovPair pair{y - e, y, equal_diag};
    // The subtraction can round a zero entry of E into a violation; force it.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) pair.sigma_x(i, j) = std::min(pair.sigma_x(i, j), y(i, j));
    if (equal_diag) pair.sigma_x.diagonal() = y.diagonal();
    Eigen::LLT<Eigen::MatrixXd> lx(pair.sigma_x), ly(pair.sigma_y);
    if (lx.info() == Eigen::Success && ly.info() == Eigen::Success) return pair;
  }
  throw NumericalError("could not generate an ordered covariance pair within " +
                       std::to_string(max_attempts) + " attempts");
}

double ConvexFunctional::apply(double x) const {
  switch (tag) {
    case FunctionalTag::Power: return std::pow(x, param);
    case FunctionalTag::NegPower: return std::pow(x, -param);
    case FunctionalTag::Exp: return std::exp(-param * x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ConvexFunctional::operator()(const Eigen::Ref<const Eigen::VectorXd>& z,
                                    const Eigen::Ref<const Eigen::VectorXd>& variances) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    s += p * std::exp(z(i) - 0.5 * variances(i));
  }
  return apply(s);
}

void validate(const ConvexFunctional& f, Eigen::Index n) {
  if (!f.weights.empty() && static_cast<Eigen::Index>(f.weights.size()) != n)
    throw ParameterError("functional has " + std::to_string(f.weights.size()) +
                         " weights for dimension " + std::to_string(n));
  for (double p : f.weights)
    if (!(p >= 0.0)) throw ParameterError("functional weights must be non-negative");
  switch (f.tag) {
    case FunctionalTag::Power:
      if (!(f.param > 0.0)) throw ParameterError("Power exponent must be > 0");
      if (f.param < 1.0 && !f.reversed)
        throw ParameterError("Power exponent in (0,1) is concave; set reversed");
      if (f.param >= 1.0 && f.reversed)
        throw ParameterError("reversed is only meaningful for Power exponents in (0,1)");
      break;
    case FunctionalTag::NegPower:
      if (!(f.param > 0.0)) throw ParameterError("NegPower exponent must be > 0");
      if (f.reversed) throw ParameterError("NegPower is convex; reversed not allowed");
      break;
    case FunctionalTag::Exp:
      if (!(f.param >= 0.0))
        throw ParameterError("Exp scale must be >= 0 (F(x) = exp(-a x))");
      if (f.reversed) throw ParameterError("Exp is convex; reversed not allowed");
      break;
  }
}

std::string to_string(const ConvexFunctional& f) {
  std::ostringstream s;
  switch (f.tag) {
    case FunctionalTag::Power: s << "Power(" << f.param << ")"; break;
    case FunctionalTag::NegPower: s << "NegPower(" << f.param << ")"; break;
    case FunctionalTag::Exp: s << "Exp(" << f.param << ")"; break;
  }
  if (f.reversed) s << "[reversed]";
  return s.str();
}

ComparisonReport kahane_check(const OrderedCovPair& pair, const ConvexFunctional& f,
                              std::size_t n_samples, Engine& rng) {
  check_pair(pair);
  validate(f, pair.sigma_x.rows());
  if (n_samples < 2) throw ParameterError("need at least 2 samples");
  const Eigen::MatrixXd lx = cholesky_or_throw(pair.sigma_x, "sigma_x");
  const Eigen::MatrixXd ly = cholesky_or_throw(pair.sigma_y, "sigma_y");
  const Eigen::VectorXd vx = pair.sigma_x.diagonal();
  const Eigen::VectorXd vy = pair.sigma_y.diagonal();
  Eigen::VectorXd z(pair.sigma_x.rows());
  PairedStats st;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (auto& v : z) v = normal(rng);
    const Eigen::VectorXd x = lx * z;
    const Eigen::VectorXd y = ly * z;
    st.add(f(x, vx), f(y, vy));
  }
  return st.report(f.reversed);
}

ComparisonReport slepian_check(const OrderedCovPair& pair, double threshold,
                               std::size_t n_samples, Engine& rng) {
  if (!pair.equal_diag) throw ParameterError("slepian check requires an equal-diagonal pair");
  check_pair(pair);
  if (n_samples < 2) throw ParameterError("need at least 2 samples");
  const Eigen::MatrixXd lx = cholesky_or_throw(pair.sigma_x, "sigma_x");
  const Eigen::MatrixXd ly = cholesky_or_throw(pair.sigma_y, "sigma_y");
  Eigen::VectorXd z(pair.sigma_x.rows());
  PairedStats st;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (auto& v : z) v = normal(rng);
    const double mx = (lx * z).maxCoeff();
    const double my = (ly * z).maxCoeff();
    st.add(mx < threshold ? 1.0 : 0.0, my < threshold ? 1.0 : 0.0);
  }
  return st.report(false);
}

HermiteRule gauss_hermite(int order) {
  if (order < 1 || order > 64) throw ParameterError("quadrature order must lie in [1, 64]");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    j(k, k - 1) = std::sqrt(static_cast<double>(k));
    j(k - 1, k) = j(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  HermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).array().square();
  // Symmetrise: the exact rule is symmetric about 0.
  for (int k = 0; k < order / 2; ++k) {
    const int m = order - 1 - k;
    const double x = 0.5 * (rule.nodes(m) - rule.nodes(k));
    const double w = 0.5 * (rule.weights(m) + rule.weights(k));
    rule.nodes(k) = -x;
    rule.nodes(m) = x;
    rule.weights(k) = rule.weights(m) = w;
  }
  if (order % 2) rule.nodes(order / 2) = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

double brute_force_expectation(const Eigen::MatrixXd& cov,
                               const std::function<double(const Eigen::VectorXd&)>& g,
                               int order) {
  const auto n = cov.rows();
  if (n < 1 || n > 3 || cov.cols() != n)
    throw ParameterError("brute-force expectation supports dimensions 1..3 only");
  const Eigen::MatrixXd l = cholesky_or_throw(cov, "covariance");
  const HermiteRule rule = gauss_hermite(order);
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
  Eigen::VectorXd z(n);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      z(k) = rule.nodes(idx(k));
      w *= rule.weights(idx(k));
    }
    total += w * g(l * z);
    Eigen::Index k = 0;
    while (k < n && ++idx(k) == order) idx(k++) = 0;
    if (k == n) break;
  }
  return total;
}

double bivariate_max_cdf(const Eigen::Matrix2d& cov, double x) {
  const Eigen::MatrixXd l = cholesky_or_throw(cov, "covariance");
  const double l11 = l(0, 0), l21 = l(1, 0), l22 = l(1, 1);
  auto integrand = [&](double t) {
    const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
    return phi * 0.5 * std::erfc(-(x - l21 * t) / (l22 * std::sqrt(2.0)));
  };
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(integrand, -std::numeric_limits<double>::infinity(),
                                              x / l11, 15, 1e-14);
}

}  // namespace gmf::toolbox
