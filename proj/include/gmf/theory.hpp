#pragma once

#include <string_view>

namespace gmf::theory {

/// Model parameters: beta2 is the squared inverse temperature, q the moment
/// order and d the dimension of the domain [-1,1]^d.
struct ModelParams {
  double beta2 = 0.0;
  double q = 2.0;
  int d = 1;
};

enum class DimensionPolicy {
  GridSupported,  // d in {1, 2}
  AnyPositive,    // closed-form formulas only
};

enum class RegimeLabel { HighTemp, Intermediate, Frozen };

struct Regime {
  RegimeLabel label;
  double boundary_pre;     // 2d / (2q - 1)
  double boundary_freeze;  // 2d
};

std::string_view to_string(RegimeLabel label);

/// Throws ParameterError unless beta2 >= 0, q > 1 and d is admissible.
void validate(const ModelParams& p,
              DimensionPolicy policy = DimensionPolicy::GridSupported);

/// Boundary points belong to the higher-beta2 branch.
Regime classify_regime(const ModelParams& p,
                       DimensionPolicy policy = DimensionPolicy::GridSupported);

/// Annealed exponent of E[Z(q beta) / Z(beta)^q].
double annealed_exponent(const ModelParams& p,
                         DimensionPolicy policy = DimensionPolicy::GridSupported);

/// Quenched exponent of Z(q beta) / Z(beta)^q, breakpoints 2d/q^2 and 2d.
double quenched_exponent(const ModelParams& p,
                         DimensionPolicy policy = DimensionPolicy::GridSupported);

/// Exponent of the mean participation sum E[sum_i w_i^q]; equals the annealed
/// exponent shifted by d(q-1).
///
/// The frozen-regime value 0 is the localisation prediction, not a proven rate.
/// Non-integer q is accepted.
double participation_exponent(const ModelParams& p,
                              DimensionPolicy policy = DimensionPolicy::GridSupported);

/// min(1, (1/q)(1/2 + d/beta2)). Requires beta2 > 0.
double tilt_parameter(const ModelParams& p,
                      DimensionPolicy policy = DimensionPolicy::GridSupported);

/// Log-epsilon coefficient of the change-of-measure prefactor for a tilt of
/// relative strength c: -(beta2 q^2/2)[1 - (1-c)^2] + beta2 q/2.
double girsanov_prefactor_exponent(double beta2, double q, double c);

// The three curves that make up the annealed phase diagram.
double simple_scaling_curve(double beta2, double q);                // f1
double prefreezing_curve(double beta2, double q, int d);            // f2
double frozen_curve(double q, int d);                               // f3

}  // namespace gmf::theory
