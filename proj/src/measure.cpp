#include "gmf/measure.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gmf/errors.hpp"

namespace gmf::measure {

std::string_view to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::LogPartition: return "LogPartition";
    case FunctionalKind::LogGmcMass: return "LogGmcMass";
    case FunctionalKind::LogMomentRatio: return "LogMomentRatio";
    case FunctionalKind::LogSingularIntegral: return "LogSingularIntegral";
    case FunctionalKind::LogParticipation: return "LogParticipation";
  }
  return "?";
}

double log_sum_exp(FieldRef x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

namespace {

double log_cell_volume(const field::SamplerState& state) {
  return state.grid().d * std::log(state.grid().spacing);
}

// sum over i of exp(beta X_i - beta^2 Var_i / 2 - s log(dist_i + eps)), where
// the last term is skipped entirely for s == 0.
double log_weighted_chaos(FieldRef field, const field::SamplerState& state, double beta,
                          double s, const Eigen::RowVectorXd* u) {
  Eigen::ArrayXd e = beta * field.array() - 0.5 * beta * beta * state.variances().array();
  if (s != 0.0) {
    const auto& pts = state.grid().points;
    for (Eigen::Index i = 0; i < e.size(); ++i)
      e(i) -= s * std::log((pts.row(i) - *u).norm() + state.eps());
  }
  return log_cell_volume(state) + log_sum_exp(e.matrix());
}

}  // namespace

LogFunctionalValue log_partition(FieldRef field, const field::SamplerState& state, double beta) {
  const Eigen::VectorXd e = beta * field;
  return {log_cell_volume(state) + log_sum_exp(e), FunctionalKind::LogPartition};
}

LogFunctionalValue log_gmc_mass(FieldRef field, const field::SamplerState& state, double beta) {
  return {log_weighted_chaos(field, state, beta, 0.0, nullptr), FunctionalKind::LogGmcMass};
}

LogFunctionalValue log_moment_ratio(FieldRef field, const field::SamplerState& state,
                                    double beta, double q) {
  const double v = log_partition(field, state, q * beta).value -
                   q * log_partition(field, state, beta).value;
  return {v, FunctionalKind::LogMomentRatio};
}

LogFunctionalValue participation_sum(FieldRef field, const field::SamplerState& /*state*/,
                                     double beta, double q) {
  const Eigen::VectorXd a = beta * field;
  const Eigen::VectorXd b = (q * beta) * field;
  double v = log_sum_exp(b) - q * log_sum_exp(a);
  // Rounding can push a fully localised sum a hair above zero.
  if (v > 0.0) v = 0.0;
  return {v, FunctionalKind::LogParticipation};
}

LogFunctionalValue log_singular_integral(FieldRef field, const field::SamplerState& state,
                                         double beta, double s,
                                         const Eigen::Ref<const Eigen::RowVectorXd>& u) {
  if (!(s >= 0.0)) throw ParameterError("singular exponent s must be >= 0");
  if (u.size() != state.grid().d) throw ParameterError("location has wrong dimension");
  const Eigen::RowVectorXd loc = u;
  return {log_weighted_chaos(field, state, beta, s, &loc), FunctionalKind::LogSingularIntegral};
}

LogFunctionalValue log_singular_integral(FieldRef field, const field::SamplerState& state,
                                         double beta, double s, Eigen::Index u_index) {
  if (u_index < 0 || u_index >= state.size())
    throw ParameterError("location index " + std::to_string(u_index) + " out of range");
  return log_singular_integral(field, state, beta, s, state.grid().points.row(u_index));
}

double sup_increment(FieldRef field, const field::SamplerState& state, double box_width) {
  const auto& g = state.grid();
  if (!(box_width > g.spacing))
    throw ParameterError("box width must exceed the fine grid spacing");
  const double boxes_real = 2.0 / box_width;
  const long boxes = std::lround(boxes_real);
  if (boxes < 1 || std::abs(boxes_real - boxes) > 1e-9 * boxes_real)
    throw ParameterError("box width " + std::to_string(box_width) + " does not tile [-1,1]");
  if (g.n_per_side % boxes != 0)
    throw ParameterError("fine grid of " + std::to_string(g.n_per_side) +
                         " cells per side does not align with " + std::to_string(boxes) +
                         " boxes");
  const long per_box = g.n_per_side / boxes;
  if (per_box < 3 || per_box % 2 == 0)
    throw ParameterError("each box must contain an odd number (>= 3) of fine cells per side, got " +
                         std::to_string(per_box));

  const long n = g.n_per_side;
  const long half = per_box / 2;
  double worst = 0.0;
  if (g.d == 1) {
    for (long b = 0; b < boxes; ++b) {
      const double centre = field(b * per_box + half);
      for (long k = 0; k < per_box; ++k)
        worst = std::max(worst, std::abs(field(b * per_box + k) - centre));
    }
  } else {
    for (long bi = 0; bi < boxes; ++bi)
      for (long bj = 0; bj < boxes; ++bj) {
        const double centre = field((bi * per_box + half) * n + bj * per_box + half);
        for (long ki = 0; ki < per_box; ++ki)
          for (long kj = 0; kj < per_box; ++kj)
            worst = std::max(worst,
                             std::abs(field((bi * per_box + ki) * n + bj * per_box + kj) - centre));
      }
  }
  return worst;
}

}  // namespace gmf::measure
