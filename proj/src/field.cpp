#include "gmf/field.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "gmf/errors.hpp"

namespace gmf::field {

double GridSpec::cell_volume() const { return std::pow(spacing, d); }

Eigen::Index GridSpec::center_index() const {
  Eigen::Index best = 0;
  points.rowwise().squaredNorm().minCoeff(&best);
  return best;
}

int min_points_per_side(double eps) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw ParameterError("eps must lie in (0, 1], got " + std::to_string(eps));
  // 2/n <= eps/2; the small slack keeps dyadic eps from rounding up a level.
  return static_cast<int>(std::ceil(4.0 / eps - 1e-9));
}

GridSpec build_grid(int d, int n_per_side, std::size_t max_points) {
  if (d != 1 && d != 2)
    throw ParameterError("unsupported dimension d=" + std::to_string(d) + " (grids support d=1,2)");
  if (n_per_side < 2)
    throw ParameterError("n_per_side must be >= 2, got " + std::to_string(n_per_side));
  const double total = std::pow(static_cast<double>(n_per_side), d);
  if (total > static_cast<double>(max_points))
    throw ResourceError("grid with " + std::to_string(n_per_side) + "^" + std::to_string(d) +
                        " points exceeds the cap of " + std::to_string(max_points));

  GridSpec g;
  g.d = d;
  g.n_per_side = n_per_side;
  g.spacing = 2.0 / n_per_side;
  std::vector<double> axis(n_per_side);
  for (int k = 0; k < n_per_side; ++k) axis[k] = -1.0 + (k + 0.5) * g.spacing;

  const auto n = static_cast<Eigen::Index>(total);
  g.points.resize(n, d);
  if (d == 1) {
    for (Eigen::Index k = 0; k < n; ++k) g.points(k, 0) = axis[k];
  } else {
    for (Eigen::Index k = 0; k < n; ++k) {
      g.points(k, 0) = axis[k / n_per_side];
      g.points(k, 1) = axis[k % n_per_side];
    }
  }
  return g;
}

SamplerState::SamplerState(GridSpec grid, double eps, double g_const, Eigen::MatrixXd kernel,
                           Eigen::MatrixXd factor, double jitter)
    : grid_(std::move(grid)),
      eps_(eps),
      g_const_(g_const),
      kernel_(std::move(kernel)),
      factor_(std::move(factor)),
      jitter_(jitter) {
  variances_ = kernel_.diagonal().array() + jitter_;
}

Eigen::VectorXd SamplerState::covariance_column(Eigen::Index u) const {
  Eigen::VectorXd col = kernel_.col(u);
  col(u) += jitter_;
  return col;
}

double SamplerState::factor_residual() const {
  Eigen::MatrixXd r = factor_ * factor_.transpose() - kernel_;
  r.diagonal().array() -= jitter_;
  const double scale = kernel_.cwiseAbs().maxCoeff();
  return r.cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

SamplerState factor_covariance(const GridSpec& grid, double eps, double g_const,
                               Eigen::MatrixXd cov, double jitter_cap_rel) {
  const double kmax = cov.cwiseAbs().maxCoeff();
  if (kmax == 0.0) {
    // Degenerate (deterministic) field: the zero factor is exact.
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(cov.rows(), cov.cols());
    return SamplerState(grid, eps, g_const, std::move(cov), std::move(zero), 0.0);
  }
  constexpr std::array<double, 4> ladder{0.0, 1e-12, 1e-10, 1e-8};
  for (double rel : ladder) {
    if (rel > jitter_cap_rel) break;
    const double delta = rel * kmax;
    Eigen::MatrixXd work = cov;
    work.diagonal().array() += delta;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd l = llt.matrixL();
      return SamplerState(grid, eps, g_const, std::move(cov), std::move(l), delta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "covariance is not positive definite within jitter cap " << jitter_cap_rel
      << " x max|K| (smallest eigenvalue " << es.eigenvalues()(0) << ", eps=" << eps
      << ", g_const=" << g_const << ")";
  throw NumericalError(msg.str());
}

SamplerState build_covariance(const GridSpec& grid, const CovarianceSpec& spec) {
  if (!(spec.eps > 0.0 && spec.eps <= 1.0))
    throw ParameterError("eps must lie in (0, 1], got " + std::to_string(spec.eps));
  if (!std::isfinite(spec.g_const) || std::abs(spec.g_const) > spec.g_bound)
    throw ParameterError("|g_const| must not exceed " + std::to_string(spec.g_bound));
  if (grid.spacing > spec.eps / 2.0 * (1.0 + 1e-12))
    throw ParameterError("grid spacing " + std::to_string(grid.spacing) +
                         " is coarser than eps/2 = " + std::to_string(spec.eps / 2.0));

  const Eigen::Index n = grid.num_points();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double dist = (grid.points.row(i) - grid.points.row(j)).norm();
      const double v = -std::log(dist + spec.eps) + spec.g_const;
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return factor_covariance(grid, spec.eps, spec.g_const, std::move(k), spec.jitter_cap_rel);
}

FieldSample sample(const SamplerState& state, Engine& rng) {
  Eigen::VectorXd z(state.size());
  fill_standard_normal(rng, z);
  FieldSample out;
  out.values = state.factor().triangularView<Eigen::Lower>() * z;
  return out;
}

Eigen::MatrixXd sample_batch(const SamplerState& state, std::uint64_t master_seed,
                             std::uint64_t first, Eigen::Index count) {
  const Eigen::Index n = state.size();
  Eigen::MatrixXd z(n, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    Engine rng = child_stream(master_seed, first + static_cast<std::uint64_t>(k));
    auto col = z.col(k);
    fill_standard_normal(rng, col);
  }
  return state.factor().triangularView<Eigen::Lower>() * z;
}

TiltSpec make_tilt(const SamplerState& state, Eigen::Index u_index, double beta, double q,
                   double c) {
  if (u_index < 0 || u_index >= state.size())
    throw ParameterError("tilt location index " + std::to_string(u_index) + " out of range [0, " +
                         std::to_string(state.size()) + ")");
  TiltSpec t;
  t.u_index = u_index;
  t.strength = beta * q * c;
  t.mean_shift = t.strength * state.covariance_column(u_index);
  t.log_weight_const = 0.5 * t.strength * t.strength * state.variance(u_index);
  return t;
}

TiltedSample sample_tilted(const SamplerState& state, const TiltSpec& tilt, Engine& rng) {
  TiltedSample out;
  out.field = sample(state, rng);
  out.field.values += tilt.mean_shift;
  out.log_is_weight = log_is_weight(tilt, out.field.values(tilt.u_index));
  out.field.tilt = tilt;
  return out;
}

double log_mixture_is_weight(const SamplerState& state,
                             const Eigen::Ref<const Eigen::VectorXd>& values, double lambda) {
  const Eigen::ArrayXd e = lambda * values.array() - 0.5 * lambda * lambda * state.variances().array();
  const double m = e.maxCoeff();
  const double lse = m + std::log((e - m).exp().sum());
  return -(lse - std::log(static_cast<double>(values.size())));
}

FieldSample sample_cascade(int levels, Engine& rng) {
  if (levels < 1 || levels > 20)
    throw ParameterError("cascade levels must lie in [1, 20], got " + std::to_string(levels));
  const std::size_t cells = std::size_t{1} << levels;
  const double sd = std::sqrt(std::log(2.0));
  std::normal_distribution<double> dist(0.0, sd);
  // Level-by-level refinement: each node passes its value to two children.
  std::vector<double> cur{0.0};
  for (int level = 1; level <= levels; ++level) {
    std::vector<double> next(cur.size() * 2);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = cur[i / 2] + dist(rng);
    cur = std::move(next);
  }
  FieldSample out;
  out.values = Eigen::Map<Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(cells));
  return out;
}

double cascade_covariance(int levels, std::uint64_t a, std::uint64_t b) {
  int depth = levels;
  while (a != b) {
    a >>= 1;
    b >>= 1;
    --depth;
  }
  return depth * std::log(2.0);
}

}  // namespace gmf::field
