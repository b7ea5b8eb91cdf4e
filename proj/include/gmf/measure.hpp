#pragma once

#include <Eigen/Dense>
#include <string_view>

#include "gmf/field.hpp"

namespace gmf::measure {

// Gibbs and chaos functionals of one field sample, all in natural-log scale.
// Integrals over [-1,1]^d are midpoint sums on the sampling grid.

enum class FunctionalKind {
  LogPartition,
  LogGmcMass,
  LogMomentRatio,
  LogSingularIntegral,
  LogParticipation,
};

std::string_view to_string(FunctionalKind kind);

struct LogFunctionalValue {
  double value;
  FunctionalKind kind;
};

using FieldRef = Eigen::Ref<const Eigen::VectorXd>;

/// Numerically stable log(sum_i exp(x_i)).
double log_sum_exp(FieldRef x);

/// log Z(beta) = log sum_i h^d exp(beta X_i).
LogFunctionalValue log_partition(FieldRef field, const field::SamplerState& state, double beta);

/// log sum_i h^d exp(beta X_i - beta^2 Var(X_i) / 2).
LogFunctionalValue log_gmc_mass(FieldRef field, const field::SamplerState& state, double beta);

/// log Z(q beta) - q log Z(beta).
LogFunctionalValue log_moment_ratio(FieldRef field, const field::SamplerState& state,
                                    double beta, double q);

/// log sum_i w_i^q for the grid Gibbs weights w_i = exp(beta X_i) / sum_j exp(beta X_j).
LogFunctionalValue participation_sum(FieldRef field, const field::SamplerState& state,
                                     double beta, double q);

/// log sum_i h^d exp(beta X_i - beta^2 Var(X_i) / 2) (|r_i - u| + eps)^(-s).
/// With s == 0 the result is bit-identical to log_gmc_mass.
LogFunctionalValue log_singular_integral(FieldRef field, const field::SamplerState& state,
                                         double beta, double s,
                                         const Eigen::Ref<const Eigen::RowVectorXd>& u);

LogFunctionalValue log_singular_integral(FieldRef field, const field::SamplerState& state,
                                         double beta, double s, Eigen::Index u_index);

/// Largest |X(v) - X(r_i)| over boxes of width `box_width` tiling [-1,1]^d,
/// with r_i the fine grid point at the centre of box i. Each box must hold an
/// odd number (>= 3) of fine cells per side.
double sup_increment(FieldRef field_fine, const field::SamplerState& state_fine,
                     double box_width);

// FieldSample conveniences.
inline LogFunctionalValue log_partition(const field::FieldSample& f,
                                        const field::SamplerState& s, double beta) {
  return log_partition(f.values, s, beta);
}
inline LogFunctionalValue log_gmc_mass(const field::FieldSample& f,
                                       const field::SamplerState& s, double beta) {
  return log_gmc_mass(f.values, s, beta);
}
inline LogFunctionalValue log_moment_ratio(const field::FieldSample& f,
                                           const field::SamplerState& s, double beta, double q) {
  return log_moment_ratio(f.values, s, beta, q);
}
inline LogFunctionalValue participation_sum(const field::FieldSample& f,
                                            const field::SamplerState& s, double beta,
                                            double q) {
  return participation_sum(f.values, s, beta, q);
}

}  // namespace gmf::measure
