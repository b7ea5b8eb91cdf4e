#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "gmf/rng.hpp"

namespace gmf::field {

inline constexpr std::size_t kDefaultMaxPoints = 8192;

/// Cell-centred lattice over [-1,1]^d. Point k of a d=2 grid has coordinates
/// (x[k / n], x[k % n]).
struct GridSpec {
  int d = 1;
  int n_per_side = 0;
  double spacing = 0.0;
  Eigen::MatrixXd points;  // num_points x d

  Eigen::Index num_points() const { return points.rows(); }
  double cell_volume() const;
  /// Index of the grid point closest to the origin (lowest index on ties).
  Eigen::Index center_index() const;
};

GridSpec build_grid(int d, int n_per_side, std::size_t max_points = kDefaultMaxPoints);

/// Smallest n_per_side with spacing 2/n <= eps/2.
int min_points_per_side(double eps);

struct CovarianceSpec {
  double eps = 0.1;
  double g_const = 0.0;
  double g_bound = 10.0;         // |g_const| must not exceed this
  double jitter_cap_rel = 1e-8;  // largest repair, relative to max |K_ij|
};

/// Kernel K_ij = -log(|r_i - r_j| + eps) + g, its Cholesky factor L and the
/// diagonal repair delta, with L L^T = K + delta I. Immutable once built.
///
/// Every sampler and functional uses the covariance actually realised by the
/// factor, K + delta I; `kernel()` is the unrepaired matrix.
class SamplerState {
 public:
  SamplerState(GridSpec grid, double eps, double g_const, Eigen::MatrixXd kernel,
               Eigen::MatrixXd factor, double jitter);

  const GridSpec& grid() const { return grid_; }
  double eps() const { return eps_; }
  double g_const() const { return g_const_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& kernel() const { return kernel_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  Eigen::Index size() const { return kernel_.rows(); }

  double covariance(Eigen::Index i, Eigen::Index j) const {
    return kernel_(i, j) + (i == j ? jitter_ : 0.0);
  }
  double variance(Eigen::Index i) const { return kernel_(i, i) + jitter_; }
  const Eigen::VectorXd& variances() const { return variances_; }
  Eigen::VectorXd covariance_column(Eigen::Index u) const;

  /// max |L L^T - (K + delta I)| / max |K|.
  double factor_residual() const;

 private:
  GridSpec grid_;
  double eps_;
  double g_const_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd factor_;
  double jitter_;
  Eigen::VectorXd variances_;
};

/// Assembles and factors the kernel. Jitter escalates through
/// {0, 1e-12, 1e-10, 1e-8} x max|K| up to spec.jitter_cap_rel.
SamplerState build_covariance(const GridSpec& grid, const CovarianceSpec& spec);

/// Factors an arbitrary symmetric matrix on `grid` with the same jitter ladder.
SamplerState factor_covariance(const GridSpec& grid, double eps, double g_const,
                               Eigen::MatrixXd cov, double jitter_cap_rel = 1e-8);

struct TiltSpec {
  Eigen::Index u_index = 0;
  double strength = 0.0;  // lambda = beta q c
  Eigen::VectorXd mean_shift;
  double log_weight_const = 0.0;  // lambda^2 Var(X(u)) / 2
};

struct FieldSample {
  Eigen::VectorXd values;
  std::optional<TiltSpec> tilt;
};

struct TiltedSample {
  FieldSample field;
  double log_is_weight = 0.0;
};

FieldSample sample(const SamplerState& state, Engine& rng);

/// Draws replicas [first, first + count) as columns; column k uses
/// child_stream(master_seed, first + k).
Eigen::MatrixXd sample_batch(const SamplerState& state, std::uint64_t master_seed,
                             std::uint64_t first, Eigen::Index count);

TiltSpec make_tilt(const SamplerState& state, Eigen::Index u_index, double beta,
                   double q, double c);

/// Shifts an untilted sample by the tilt's mean and returns the weight
/// log(dP/dP_tilt) = -lambda X(u) + lambda^2 Var(X(u)) / 2.
TiltedSample sample_tilted(const SamplerState& state, const TiltSpec& tilt,
                           Engine& rng);

/// Weight of an already shifted field.
inline double log_is_weight(const TiltSpec& tilt, double value_at_u) {
  return -tilt.strength * value_at_u + tilt.log_weight_const;
}
inline double log_is_weight(double lambda, double value_at_u, double variance_at_u) {
  return -lambda * value_at_u + 0.5 * lambda * lambda * variance_at_u;
}

/// Weight log(dP/dQ) for the uniform mixture Q = (1/N) sum_u P_u of all
/// single-location tilts of strength `lambda`, at an already shifted field:
/// -log((1/N) sum_u exp(lambda X(u) - lambda^2 Var(X(u)) / 2)).
double log_mixture_is_weight(const SamplerState& state,
                             const Eigen::Ref<const Eigen::VectorXd>& values, double lambda);

/// Branching-random-walk surrogate on 2^levels dyadic cells of [-1,1]: each
/// tree edge carries an independent N(0, log 2) increment.
FieldSample sample_cascade(int levels, Engine& rng);

/// Covariance of two cascade cells: log 2 times the depth of their common
/// ancestor.
double cascade_covariance(int levels, std::uint64_t cell_a, std::uint64_t cell_b);

}  // namespace gmf::field
